"""Monte Carlo experiments with reproducible per-trial streams.

Every trial draws from its own Philox stream keyed by ``(master_seed, *path)``:

* LSS experiments: null trial ``k`` uses path ``(0, k)`` and is shared by all
  ``omega`` values; spiked trial ``k`` at grid index ``i`` uses ``(1, i, k)``.
* Transition, reconstruction and KDE experiments: ``(i, k)``.

Outcomes are collected into arrays indexed by trial and reduced in index
order, so the worker count and the execution order cannot change a single
output byte.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional

import numpy as np
from scipy import stats

from .. import __version__
from ..errors import DomainError, LogDetShiftError, SpikedDetectError, ValidationError
from ..lss import TestParams, limiting_mean, limiting_variance, lss_from_eigenvalues, predicted_error, threshold
from ..models import ModelSpec, gamma_of_lambda, generate, generate_null, load_spike, make_rng
from ..noise import kde_fit
from ..spectral import bbp_outlier, gram, mp_edges, overlap_limit, sym_eigenvalues, top_eigenvalue
from ..transform import (
    TransformSpec,
    default_margin,
    effective_snr_additive,
    effective_snr_multiplicative,
    entrywise_transform,
    overlap,
    resolve_alpha,
    top_singular_pair,
)
from .io import digest, write_json, write_table_csv

__all__ = [
    "EXPERIMENTS",
    "ExperimentConfig",
    "ResultTable",
    "LssSamples",
    "resolve_workers",
    "lss_samples",
    "error_table",
    "clt_table",
    "run_error_sweep",
    "run_transition_sweep",
    "run_clt_check",
    "run_reconstruction",
    "run_kde_pipeline",
    "run_experiment",
    "reconstruction_snr",
]

EXPERIMENTS = ("ErrorSweep", "TransitionSweep", "CltCheck", "Reconstruction", "KdePipeline")
GRID_KEY = {
    "ErrorSweep": "omega",
    "CltCheck": "omega",
    "TransitionSweep": "snr",
    "KdePipeline": "snr",
    "Reconstruction": "N",
}
ERROR_COLUMNS = ["omega", "type1", "type2", "err_empirical", "err_theory", "stderr", "trials"]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """One experiment: which protocol, the model template, the grid and the seed.

    ``options`` carries protocol-specific knobs: ``w4`` (LSS), ``alpha``
    (transform setting), ``margin``, ``bins`` (histograms), ``snr`` and
    ``spike_file`` (reconstruction), ``workers``, ``shuffle_seed``.
    """

    experiment: str
    model: ModelSpec
    grid: Mapping[str, list]
    trials: int = 2000
    master_seed: int = 0
    output_dir: Optional[str] = None
    options: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if int(self.trials) < 1:
            raise ValidationError("trials must be at least 1")
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValidationError("master_seed must fit in 64 bits")
        key = GRID_KEY[self.experiment]
        values = self.grid.get(key) if isinstance(self.grid, Mapping) else None
        if not values:
            raise ValidationError(f"{self.experiment} needs a nonempty grid[{key!r}]")
        object.__setattr__(self, "grid", {k: list(v) for k, v in self.grid.items()})
        object.__setattr__(self, "options", dict(self.options))

    @property
    def points(self) -> list:
        return self.grid[GRID_KEY[self.experiment]]

    def with_(self, **changes) -> "ExperimentConfig":
        doc = {**self.__dict__, **changes}
        return ExperimentConfig(**doc)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "model": self.model.to_dict(),
            "grid": self.grid,
            "trials": int(self.trials),
            "master_seed": int(self.master_seed),
            "output_dir": self.output_dir,
            "options": self.options,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, Mapping):
            raise ValidationError("config must be a JSON object")
        unknown = set(doc) - {"experiment", "model", "grid", "trials", "master_seed", "output_dir", "options"}
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        try:
            model = doc.get("model", {"kind": "additive", "M": 256, "N": 512})
            model = model if isinstance(model, ModelSpec) else ModelSpec.from_dict(model)
            return cls(
                experiment=doc["experiment"],
                model=model,
                grid=doc.get("grid", {}),
                trials=int(doc.get("trials", 2000)),
                master_seed=int(doc.get("master_seed", 0)),
                output_dir=doc.get("output_dir"),
                options=doc.get("options", {}),
            )
        except KeyError as exc:
            raise ValidationError(f"config is missing field {exc}") from exc
        except TypeError as exc:
            raise ValidationError(f"malformed config: {exc}") from exc


@dataclass
class ResultTable:
    """Rows of a result CSV plus the manifest and optional side tables (histograms, per-trial data)."""

    columns: list
    rows: list
    manifest: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)  # file name -> (columns, rows)
    name: str = "results"

    def column(self, name) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def records(self) -> list:
        return [dict(zip(self.columns, r)) for r in self.rows]

    def where(self, **match) -> list:
        return [r for r in self.records() if all(r[k] == v for k, v in match.items())]

    def write(self, output_dir) -> Path:
        out = Path(output_dir)
        path = write_table_csv(out / f"{self.name}.csv", self.columns, self.rows)
        for fname, (cols, rows) in sorted(self.extras.items()):
            write_table_csv(out / fname, cols, rows)
        write_json(out / "manifest.json", self.manifest)
        return path


# -- execution ------------------------------------------------------------------


def resolve_workers(threads=None) -> int:
    """``threads`` argument, else ``SPIKED_DETECT_THREADS``, else the usable core count."""
    if threads is None:
        env = os.environ.get("SPIKED_DETECT_THREADS")
        if env:
            try:
                threads = int(env)
            except ValueError as exc:
                raise ValidationError(f"SPIKED_DETECT_THREADS={env!r} is not an integer") from exc
    if threads is None:
        try:
            threads = len(os.sched_getaffinity(0))
        except AttributeError:  # pragma: no cover - non-Linux
            threads = os.cpu_count() or 1
    threads = int(threads)
    if threads < 1:
        raise ValidationError("worker count must be positive")
    return threads


def _execute(fn, items, workers, shuffle_seed=None):
    """``[fn(x) for x in items]``, possibly in parallel and in a permuted order."""
    n = len(items)
    order = np.arange(n)
    if shuffle_seed is not None:
        order = np.random.default_rng(int(shuffle_seed)).permutation(n)
    todo = [items[i] for i in order]
    if workers <= 1 or n < 2:
        done = [fn(x) for x in todo]
    else:
        chunk = max(1, n // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(fn, todo, chunksize=chunk))
    out = [None] * n
    for pos, i in enumerate(order):
        out[i] = done[pos]
    return out


def _workers(cfg, workers=None) -> int:
    return resolve_workers(workers if workers is not None else cfg.options.get("workers"))


def _manifest(cfg, started, t0, **extra) -> dict:
    doc = cfg.to_dict()
    return {
        "config": doc,
        "config_digest": digest(doc),
        "master_seed": int(cfg.master_seed),
        "tool_version": __version__,
        "started_at": started,
        "wall_seconds": round(time.perf_counter() - t0, 3),
        **extra,
    }


def _start():
    return datetime.now(timezone.utc).isoformat(timespec="seconds"), time.perf_counter()


def _finish(table, cfg):
    if cfg.output_dir:
        table.write(cfg.output_dir)
    return table


def _se(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def _histogram(values, bins):
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return []
    counts, edges = np.histogram(values, bins=int(bins))
    return [(float(edges[j]), float(edges[j + 1]), int(counts[j])) for j in range(counts.size)]


HIST_COLUMNS = ["bin_left", "bin_right", "count"]


# -- LSS experiments --------------------------------------------------------------


@dataclass
class LssSamples:
    """Simulated ``L_omega`` values; ``nan`` marks a trial that hit the log-det shift."""

    params: list
    null: np.ndarray  # shape (n_omega, n0)
    alt: np.ndarray  # shape (n_omega, n1)

    @property
    def omegas(self):
        return [p.omega for p in self.params]


def _lss_values(ev, params):
    out = np.empty(len(params))
    for j, p in enumerate(params):
        try:
            out[j] = lss_from_eigenvalues(ev, p)
        except LogDetShiftError:
            out[j] = math.nan
    return out


def _lss_null_trial(job):
    spec, seed, k, params = job
    Y = generate_null(spec, make_rng(seed, 0, k))
    return _lss_values(sym_eigenvalues(gram(Y.values)), params)


def _lss_alt_trial(job):
    spec, seed, i, k, p = job
    Y = generate(spec, make_rng(seed, 1, i, k))
    return _lss_values(sym_eigenvalues(gram(Y.values)), [p])[0]


def _lss_params(cfg):
    model = cfg.model
    if model.kind not in ("additive", "multiplicative"):
        raise ValidationError("LSS experiments need an additive or multiplicative model")
    w4 = float(cfg.options.get("w4", model.noise.w4))
    return [TestParams(float(w), model.ratio, w4) for w in cfg.points]


def lss_samples(cfg: ExperimentConfig, n0: int, n1: int, *, workers=None) -> LssSamples:
    """Simulate ``n0`` null and ``n1`` spiked (``lam = omega``) statistics per grid point."""
    params = _lss_params(cfg)
    seed, workers, shuffle = cfg.master_seed, _workers(cfg, workers), cfg.options.get("shuffle_seed")
    null_spec = cfg.model.with_(kind="null", snr=0.0)
    null = _execute(_lss_null_trial, [(null_spec, seed, k, params) for k in range(n0)], workers, shuffle)
    null = np.array(null, dtype=float).reshape(n0, len(params)).T
    jobs = [(cfg.model.with_(snr=p.omega), seed, i, k, p) for i, p in enumerate(params) for k in range(n1)]
    alt = np.array(_execute(_lss_alt_trial, jobs, workers, shuffle), dtype=float).reshape(len(params), n1)
    return LssSamples(params, null, alt)


def error_table(samples: LssSamples):
    """Rows of the error sweep plus per-omega flag counts.

    A flagged null trial counts as a Type-I error; a flagged spiked trial counts
    as a (correct) rejection.
    """
    rows, flags = [], {}
    for j, p in enumerate(samples.params):
        L0, L1 = samples.null[j], samples.alt[j]
        thr = threshold(p)
        f0, f1 = np.isnan(L0), np.isnan(L1)
        t1 = float(np.mean(f0 | (np.where(f0, 0.0, L0) > thr)))
        t2 = float(np.mean(~f1 & (np.where(f1, math.inf, L1) <= thr)))
        se = math.sqrt(t1 * (1 - t1) / L0.size + t2 * (1 - t2) / L1.size)
        rows.append((p.omega, t1, t2, t1 + t2, predicted_error(p), se, L0.size + L1.size))
        flags[repr(p.omega)] = {"null": int(f0.sum()), "spiked": int(f1.sum())}
    return rows, flags


CLT_COLUMNS = [
    "omega",
    "hypothesis",
    "mean",
    "mean_theory",
    "mean_stderr",
    "variance",
    "variance_theory",
    "variance_stderr",
    "ks_fitted",
    "ks_theory",
    "trials",
    "flagged",
]


def clt_table(samples: LssSamples):
    """Moments and normality of ``L_omega`` per hypothesis; flagged trials are excluded."""
    rows = []
    for j, p in enumerate(samples.params):
        V0 = limiting_variance(p)
        for hyp, L, lam in (("H0", samples.null[j], 0.0), ("H1", samples.alt[j], p.omega)):
            x = L[np.isfinite(L)]
            n = x.size
            if n < 2:
                raise DomainError(f"too few unflagged trials at omega = {p.omega}")
            mean, var = float(np.mean(x)), float(np.var(x, ddof=1))
            m4 = float(np.mean((x - mean) ** 4))
            var_se = math.sqrt(max(m4 - var * var, 0.0) / n)
            m = limiting_mean(lam, p)
            ks_fit = float(stats.kstest(x, "norm", args=(mean, math.sqrt(var))).statistic)
            ks_th = float(stats.kstest(x, "norm", args=(m, math.sqrt(V0))).statistic)
            rows.append((p.omega, hyp, mean, m, math.sqrt(var / n), var, V0, var_se, ks_fit, ks_th, n, L.size - n))
    return rows


def _lss_extras(samples, bins):
    extras = {}
    for j, p in enumerate(samples.params):
        extras[f"hist_null_omega{j}.csv"] = (HIST_COLUMNS, _histogram(samples.null[j], bins))
        extras[f"hist_spiked_omega{j}.csv"] = (HIST_COLUMNS, _histogram(samples.alt[j], bins))
    return extras


def run_error_sweep(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    """Empirical Type-I + Type-II error of the LSS test against its limit, per ``omega``.

    ``cfg.trials`` is split evenly between the null and the spiked model.
    """
    if cfg.trials < 2:
        raise ValidationError("an error sweep needs at least two trials")
    started, t0 = _start()
    n0 = cfg.trials // 2
    samples = lss_samples(cfg, n0, cfg.trials - n0, workers=workers)
    rows, flags = error_table(samples)
    table = ResultTable(ERROR_COLUMNS, rows, name="error_sweep")
    table.extras = _lss_extras(samples, cfg.options.get("bins", 50))
    table.manifest = _manifest(cfg, started, t0, flagged=flags)
    return _finish(table, cfg)


def run_clt_check(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    """Mean, variance and KS distance of ``L_omega`` under both hypotheses.

    ``cfg.trials`` trials are run under each hypothesis.
    """
    if cfg.trials < 2:
        raise ValidationError("a CLT check needs at least two trials")
    started, t0 = _start()
    samples = lss_samples(cfg, cfg.trials, cfg.trials, workers=workers)
    rows, flags = error_table(samples)
    table = ResultTable(CLT_COLUMNS, clt_table(samples), name="clt_check")
    table.extras = {"error.csv": (ERROR_COLUMNS, rows), **_lss_extras(samples, cfg.options.get("bins", 50))}
    table.manifest = _manifest(cfg, started, t0, flagged=flags)
    return _finish(table, cfg)


# -- PCA experiments --------------------------------------------------------------


def _transform_for(cfg, snr):
    noise = cfg.model.noise
    alpha = resolve_alpha(cfg.options.get("alpha"), noise, snr=snr, kind=cfg.model.kind)
    return TransformSpec(alpha, noise)


def _effective_snr(kind, snr, tspec) -> float:
    tm = tspec.moments()
    if kind == "multiplicative":
        return effective_snr_multiplicative(gamma_of_lambda(snr), tm)
    return effective_snr_additive(snr, tm)


def _transition_trial(job):
    spec, seed, i, k, tspec = job
    Y = generate(spec, make_rng(seed, i, k)).values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Yt = entrywise_transform(Y, tspec)
    return top_eigenvalue(gram(Y)), top_eigenvalue(gram(Yt))


TRANSITION_COLUMNS = [
    "snr",
    "alpha",
    "effective_snr",
    "raw_mean",
    "raw_theory",
    "raw_stderr",
    "raw_detect",
    "raw_detect_theory",
    "transformed_mean",
    "transformed_theory",
    "transformed_stderr",
    "transformed_detect",
    "transformed_detect_theory",
    "threshold",
    "trials",
]


def run_transition_sweep(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    """Top eigenvalue of ``YY^T`` and of the transformed matrix against the BBP prediction."""
    model = cfg.model
    if model.kind not in ("additive", "multiplicative"):
        raise ValidationError("a transition sweep needs an additive or multiplicative model")
    started, t0 = _start()
    d, M = model.ratio, model.M
    margin = float(cfg.options.get("margin", default_margin(M)))
    thr = mp_edges(d)[1] + margin
    sqd = math.sqrt(d)
    workers, shuffle, bins = _workers(cfg, workers), cfg.options.get("shuffle_seed"), cfg.options.get("bins", 40)

    rows, extras, per_trial = [], {}, []
    for i, snr in enumerate(cfg.points):
        snr = float(snr)
        tspec = _transform_for(cfg, snr)
        lam_eff = _effective_snr(model.kind, snr, tspec)
        jobs = [(model.with_(snr=snr), cfg.master_seed, i, k, tspec) for k in range(cfg.trials)]
        out = np.array(_execute(_transition_trial, jobs, workers, shuffle), dtype=float)
        raw, tr = out[:, 0], out[:, 1]
        rows.append(
            (
                snr,
                tspec.alpha,
                lam_eff,
                float(np.mean(raw)),
                bbp_outlier(snr, d),
                _se(raw),
                float(np.mean(raw > thr)),
                float(snr > sqd),
                float(np.mean(tr)),
                bbp_outlier(max(lam_eff, 0.0), d),
                _se(tr),
                float(np.mean(tr > thr)),
                float(lam_eff > sqd),
                thr,
                cfg.trials,
            )
        )
        extras[f"hist_raw_snr{i}.csv"] = (HIST_COLUMNS, _histogram(raw, bins))
        extras[f"hist_transformed_snr{i}.csv"] = (HIST_COLUMNS, _histogram(tr, bins))
        per_trial += [(snr, k, raw[k], tr[k]) for k in range(cfg.trials)]
    extras["trials.csv"] = (["snr", "trial", "mu1_raw", "mu1_transformed"], per_trial)
    table = ResultTable(TRANSITION_COLUMNS, rows, extras=extras, name="transition_sweep")
    table.manifest = _manifest(cfg, started, t0)
    return _finish(table, cfg)


def reconstruction_snr(M, N, fisher) -> float:
    """Default SNR halfway between the transformed and the raw PCA thresholds."""
    sqd = math.sqrt(M / N)
    return 0.5 * (sqd + sqd / fisher)


def _reconstruction_trial(job):
    spec, seed, i, k, tspec, u = job
    data = generate(spec, make_rng(seed, i, k), u=u)
    truth = data.planted_u
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        Yt = entrywise_transform(data.values, tspec)
    _, u_raw, _ = top_singular_pair(data.values)
    _, u_tr, _ = top_singular_pair(Yt)
    return overlap(u_raw, truth), overlap(u_tr, truth)


RECONSTRUCTION_COLUMNS = [
    "N",
    "method",
    "snr",
    "effective_snr",
    "overlap_mean",
    "overlap_theory",
    "stderr",
    "win_fraction",
    "trials",
]


def run_reconstruction(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    """Overlap of the top left singular vector with the planted spike, raw vs transformed PCA.

    The model is additive with Rademacher ``v``; the spike comes from
    ``options.spike_file`` when given, else from ``model.prior_u``. The SNR is
    ``options.snr`` or, per ``N``, :func:`reconstruction_snr`.
    """
    model = cfg.model
    if model.kind != "additive":
        raise ValidationError("the reconstruction experiment uses the additive model")
    started, t0 = _start()
    u = None
    if cfg.options.get("spike_file"):
        u = load_spike(cfg.options["spike_file"])
        if u.size != model.M:
            raise ValidationError(f"spike file has {u.size} entries but M = {model.M}")
    noise = model.noise
    workers, shuffle = _workers(cfg, workers), cfg.options.get("shuffle_seed")
    rows, per_trial = [], []
    for i, N in enumerate(cfg.points):
        N = int(N)
        if N < model.M:
            raise ValidationError(f"N = {N} is below M = {model.M}")
        d = model.M / N
        snr = float(cfg.options.get("snr", reconstruction_snr(model.M, N, noise.fisher)))
        spec = model.with_(N=N, snr=snr)
        tspec = _transform_for(cfg, snr)
        lam_eff = _effective_snr("additive", snr, tspec)
        jobs = [(spec, cfg.master_seed, i, k, tspec, u) for k in range(cfg.trials)]
        out = np.array(_execute(_reconstruction_trial, jobs, workers, shuffle), dtype=float)
        raw, tr = out[:, 0], out[:, 1]
        wins = float(np.mean(tr >= raw))
        for method, vals, lam in (("raw", raw, snr), ("transformed", tr, lam_eff)):
            rows.append(
                (
                    N,
                    method,
                    snr,
                    lam,
                    float(np.mean(vals)),
                    math.sqrt(overlap_limit(lam, d)),
                    _se(vals),
                    wins if method == "transformed" else 1.0 - wins,
                    cfg.trials,
                )
            )
        per_trial += [(N, k, raw[k], tr[k]) for k in range(cfg.trials)]
    extras = {"trials.csv": (["N", "trial", "overlap_raw", "overlap_transformed"], per_trial)}
    table = ResultTable(RECONSTRUCTION_COLUMNS, rows, extras=extras, name="reconstruction")
    table.manifest = _manifest(cfg, started, t0)
    return _finish(table, cfg)


def _kde_trial(job):
    spec, seed, i, k, tspec = job
    Y = generate(spec, make_rng(seed, i, k)).values
    N = Y.shape[1]
    raw = top_eigenvalue(gram(Y))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        oracle = top_eigenvalue(gram(entrywise_transform(Y, tspec)))
        try:
            fitted = kde_fit(math.sqrt(N) * Y)
            kde_spec = TransformSpec(tspec.alpha, fitted)
            kde = top_eigenvalue(gram(entrywise_transform(Y, kde_spec)))
        except SpikedDetectError:
            return raw, math.nan, oracle
    return raw, kde, oracle


KDE_COLUMNS = [
    "snr",
    "effective_snr",
    "raw_mean",
    "raw_theory",
    "raw_detect",
    "kde_mean",
    "kde_stderr",
    "kde_detect",
    "oracle_mean",
    "oracle_stderr",
    "oracle_detect",
    "transformed_theory",
    "detect_theory",
    "threshold",
    "trials",
    "flagged",
]


def run_kde_pipeline(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    """Estimate the noise density from each data matrix and transform with the estimated score.

    The oracle transform (true score) and raw PCA are reported alongside.
    A KDE failure flags the trial; it is excluded from the KDE columns.
    """
    model = cfg.model
    if model.kind not in ("additive", "multiplicative", "null"):
        raise ValidationError(f"unsupported model kind {model.kind!r}")
    started, t0 = _start()
    d, M = model.ratio, model.M
    margin = float(cfg.options.get("margin", default_margin(M)))
    thr = mp_edges(d)[1] + margin
    workers, shuffle = _workers(cfg, workers), cfg.options.get("shuffle_seed")
    rows, per_trial = [], []
    for i, snr in enumerate(cfg.points):
        snr = float(snr)
        kind = model.kind if snr > 0 else "null"
        spec = model.with_(snr=snr, kind=kind)
        tspec = _transform_for(cfg, snr)
        lam_eff = _effective_snr(model.kind, snr, tspec) if snr > 0 else 0.0
        jobs = [(spec, cfg.master_seed, i, k, tspec) for k in range(cfg.trials)]
        out = np.array(_execute(_kde_trial, jobs, workers, shuffle), dtype=float)
        raw, kde, orc = out[:, 0], out[:, 1], out[:, 2]
        ok = np.isfinite(kde)
        rows.append(
            (
                snr,
                lam_eff,
                float(np.mean(raw)),
                bbp_outlier(snr, d),
                float(np.mean(raw > thr)),
                float(np.mean(kde[ok])) if ok.any() else math.nan,
                _se(kde[ok]),
                float(np.mean(kde[ok] > thr)) if ok.any() else math.nan,
                float(np.mean(orc)),
                _se(orc),
                float(np.mean(orc > thr)),
                bbp_outlier(lam_eff, d),
                float(lam_eff > math.sqrt(d)),
                thr,
                cfg.trials,
                int((~ok).sum()),
            )
        )
        per_trial += [(snr, k, raw[k], kde[k], orc[k]) for k in range(cfg.trials)]
    extras = {"trials.csv": (["snr", "trial", "mu1_raw", "mu1_kde", "mu1_oracle"], per_trial)}
    table = ResultTable(KDE_COLUMNS, rows, extras=extras, name="kde_pipeline")
    table.manifest = _manifest(cfg, started, t0)
    return _finish(table, cfg)


RUNNERS = {
    "ErrorSweep": run_error_sweep,
    "TransitionSweep": run_transition_sweep,
    "CltCheck": run_clt_check,
    "Reconstruction": run_reconstruction,
    "KdePipeline": run_kde_pipeline,
}


def run_experiment(cfg: ExperimentConfig, *, workers=None) -> ResultTable:
    return RUNNERS[cfg.experiment](cfg, workers=workers)
