"""Spiked rectangular ensembles.

Additive model ``Y = sqrt(lam) u v^T + X`` and multiplicative model
``Y = (I + lam u u^T)^{1/2} X``. The noise ``X`` has i.i.d. entries
``xi / sqrt(N)`` with ``xi ~ g``.

Random streams are Philox generators keyed by ``(seed, *path)`` through
:class:`numpy.random.SeedSequence`, so trial ``k`` of an experiment always
sees the same bits regardless of scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, ValidationError
from .noise import NoiseModel, gaussian_noise, noise_from_dict

__all__ = [
    "Prior",
    "Spherical",
    "IidRademacher",
    "IidCustom",
    "ModelSpec",
    "DataMatrix",
    "make_rng",
    "child_rng",
    "sample_prior",
    "sample_noise",
    "generate",
    "generate_additive",
    "generate_multiplicative",
    "generate_null",
    "gamma_of_lambda",
    "lambda_of_gamma",
    "load_spike",
    "prior_from_name",
]

KINDS = ("additive", "multiplicative", "null")


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator for ``seed`` and an optional integer path (trial index, ...)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def child_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return make_rng(master_seed, trial_index)


# -- priors -----------------------------------------------------------------


class Prior:
    name = "abstract"

    def sample(self, dim: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Spherical(Prior):
    """Uniform on the unit sphere (normalised Gaussian vector)."""

    name = "spherical"

    def sample(self, dim, rng):
        w = rng.standard_normal(dim)
        return w / np.linalg.norm(w)


@dataclass(frozen=True)
class IidRademacher(Prior):
    """Entries ``+-1/sqrt(dim)``, exactly unit norm."""

    name = "rademacher"

    def sample(self, dim, rng):
        return (2.0 * rng.integers(0, 2, size=dim) - 1.0) / math.sqrt(dim)


@dataclass(frozen=True)
class IidCustom(Prior):
    """I.i.d. entries ``sampler(rng, dim) / sqrt(dim)``.

    ``sampler`` must return ``dim`` draws with mean zero and unit variance; the
    resulting vector has ``E ||u||^2 = 1`` but is not normalised.
    """

    sampler: Callable = field(compare=False)
    name = "custom"

    def sample(self, dim, rng):
        return np.asarray(self.sampler(rng, dim), dtype=float) / math.sqrt(dim)


def prior_from_name(name: str) -> Prior:
    if name == "spherical":
        return Spherical()
    if name == "rademacher":
        return IidRademacher()
    raise ValidationError(f"unknown prior {name!r} (custom priors are not serialisable)")


def sample_prior(kind: Prior, dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim < 1:
        raise ValidationError("dimension must be positive")
    return kind.sample(dim, rng)


# -- spec / data ------------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    M: int
    N: int
    snr: float = 0.0
    prior_u: Prior = field(default_factory=IidRademacher)
    prior_v: Prior = field(default_factory=IidRademacher)
    noise: NoiseModel = field(default_factory=gaussian_noise)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.M) < 1 or int(self.N) < 1:
            raise ValidationError("M and N must be positive")
        if self.M > self.N:
            raise ValidationError(f"M = {self.M} exceeds N = {self.N}; only M <= N is supported")
        if not (self.snr >= 0) or not math.isfinite(self.snr):
            raise DomainError(f"SNR must be a finite nonnegative number, got {self.snr}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 bits")

    @property
    def ratio(self) -> float:
        return self.M / self.N

    @property
    def gamma(self) -> float:
        return gamma_of_lambda(self.snr)

    def with_(self, **changes) -> "ModelSpec":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "M": self.M,
            "N": self.N,
            "snr": self.snr,
            "prior_u": self.prior_u.name,
            "prior_v": self.prior_v.name,
            "noise": self.noise.to_dict(),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        noise = doc.get("noise", {"kind": "gaussian"})
        if isinstance(noise, str):
            noise = {"kind": noise}
        return cls(
            kind=doc.get("kind", "additive"),
            M=int(doc["M"]),
            N=int(doc["N"]),
            snr=float(doc.get("snr", 0.0)),
            prior_u=prior_from_name(doc.get("prior_u", "rademacher")),
            prior_v=prior_from_name(doc.get("prior_v", "rademacher")),
            noise=noise_from_dict(noise),
            seed=int(doc.get("seed", 0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    spec: ModelSpec
    planted_u: Optional[np.ndarray] = None
    planted_v: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values.shape != (self.spec.M, self.spec.N):
            raise ValidationError("matrix shape does not match its spec")
        self.values.setflags(write=False)

    @property
    def shape(self):
        return self.values.shape


# -- generation -------------------------------------------------------------


def sample_noise(noise: NoiseModel, M: int, N: int, rng: np.random.Generator) -> np.ndarray:
    """``M x N`` matrix of i.i.d. ``xi / sqrt(N)`` with ``xi ~ noise``."""
    if M < 1 or N < 1:
        raise ValidationError("M and N must be positive")
    return noise.sample(rng, (M, N)) / math.sqrt(N)


def gamma_of_lambda(lam) -> float:
    """``gamma = sqrt(1 + lam) - 1``, the inverse of ``lam = 2 gamma + gamma^2``."""
    lam = float(lam)
    if not lam >= 0:
        raise DomainError(f"SNR must be nonnegative, got {lam}")
    # expm1/log1p form keeps relative precision for small lam
    return math.expm1(0.5 * math.log1p(lam))


def lambda_of_gamma(gamma) -> float:
    gamma = float(gamma)
    return 2.0 * gamma + gamma * gamma


def _rng_for(spec: ModelSpec, rng):
    return make_rng(spec.seed) if rng is None else rng


def generate_null(spec: ModelSpec, rng=None) -> DataMatrix:
    rng = _rng_for(spec, rng)
    X = sample_noise(spec.noise, spec.M, spec.N, rng)
    return DataMatrix(X, spec)


def generate_additive(spec: ModelSpec, rng=None, *, u=None) -> DataMatrix:
    """``Y = sqrt(lam) u v^T + X``; noise is drawn first, then ``u`` and ``v``.

    A fixed spike ``u`` (e.g. loaded from a file) may be passed instead of
    sampling it from ``spec.prior_u``.
    """
    if spec.kind != "additive":
        raise ValidationError(f"spec kind is {spec.kind!r}, expected 'additive'")
    rng = _rng_for(spec, rng)
    X = sample_noise(spec.noise, spec.M, spec.N, rng)
    u = sample_prior(spec.prior_u, spec.M, rng) if u is None else _check_spike(u, spec.M)
    v = sample_prior(spec.prior_v, spec.N, rng)
    if spec.snr == 0:
        Y = X
    else:
        Y = X + math.sqrt(spec.snr) * np.outer(u, v)
    return DataMatrix(Y, spec, u, v)


def generate_multiplicative(spec: ModelSpec, rng=None, *, u=None) -> DataMatrix:
    """``Y = (I + gamma u u^T) X`` with ``gamma = sqrt(1 + lam) - 1``.

    For unit ``u`` this is exactly ``(I + lam u u^T)^{1/2} X``. Computed as
    ``X + gamma u (u^T X)`` without forming an ``M x M`` matrix.
    """
    if spec.kind != "multiplicative":
        raise ValidationError(f"spec kind is {spec.kind!r}, expected 'multiplicative'")
    rng = _rng_for(spec, rng)
    X = sample_noise(spec.noise, spec.M, spec.N, rng)
    u = sample_prior(spec.prior_u, spec.M, rng) if u is None else _check_spike(u, spec.M)
    gamma = gamma_of_lambda(spec.snr)
    if gamma == 0:
        Y = X
    else:
        Y = X + gamma * np.outer(u, u @ X)
    return DataMatrix(Y, spec, u, None)


def generate(spec: ModelSpec, rng=None, **kw) -> DataMatrix:
    if spec.kind == "additive":
        return generate_additive(spec, rng, **kw)
    if spec.kind == "multiplicative":
        return generate_multiplicative(spec, rng, **kw)
    return generate_null(spec, rng)


def _check_spike(u, M):
    u = np.asarray(u, dtype=float)
    if u.shape != (M,):
        raise ValidationError(f"spike has shape {u.shape}, expected ({M},)")
    return u


def load_spike(path) -> np.ndarray:
    """Read one number per line and normalise to unit length."""
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    try:
        u = np.array([float(ln) for ln in lines if ln and not ln.startswith("#")])
    except ValueError as exc:
        raise ValidationError(f"bad spike file {path}: {exc}") from exc
    norm = np.linalg.norm(u)
    if u.size == 0 or norm == 0 or not np.isfinite(norm):
        raise ValidationError(f"spike file {path} has no usable direction")
    return u / norm
