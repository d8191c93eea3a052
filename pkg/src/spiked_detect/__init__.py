"""Rank-one signal detection in spiked rectangular matrices.

Submodules: :mod:`spectral` (eigenvalues, Marchenko-Pastur reference
functions), :mod:`noise` (noise densities, scores, KDE), :mod:`models`
(spiked ensembles), :mod:`transform` (entrywise score transforms and PCA),
:mod:`lss` (the linear-spectral-statistic test) and :mod:`harness`
(Monte Carlo experiments and the command line).
"""

__version__ = "0.1.0"

from .errors import DomainError, LogDetShiftError, NumericalError, SpikedDetectError, ValidationError
from .lss import TestParams, run_test
from .models import ModelSpec, generate
from .noise import bimodal_noise, fisher_information, gaussian_noise, kde_fit
from .transform import TransformSpec, pca_detect, transformed_pca_detect

__all__ = [
    "__version__",
    "SpikedDetectError",
    "ValidationError",
    "DomainError",
    "NumericalError",
    "LogDetShiftError",
    "ModelSpec",
    "generate",
    "gaussian_noise",
    "bimodal_noise",
    "fisher_information",
    "kde_fit",
    "TransformSpec",
    "pca_detect",
    "transformed_pca_detect",
    "TestParams",
    "run_test",
]
