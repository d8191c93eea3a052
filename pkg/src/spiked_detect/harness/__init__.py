"""Monte Carlo experiments, result files and the command-line interface."""

from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    ResultTable,
    run_clt_check,
    run_error_sweep,
    run_experiment,
    run_kde_pipeline,
    run_reconstruction,
    run_transition_sweep,
)
from .io import read_matrix_csv, write_matrix_csv

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultTable",
    "run_error_sweep",
    "run_transition_sweep",
    "run_clt_check",
    "run_reconstruction",
    "run_kde_pipeline",
    "run_experiment",
    "read_matrix_csv",
    "write_matrix_csv",
]
