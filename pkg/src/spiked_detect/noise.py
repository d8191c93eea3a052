"""Noise densities for the normalised entries ``sqrt(N) X_ij``.

A :class:`NoiseModel` bundles a unit-variance symmetric density ``g``, its
score ``h = -g'/g`` and the derivative ``h'``, a sampler, and the moments that
enter the effective-SNR and LSS formulas. Three analytic families are built
in (Gaussian, the Gaussian-Rademacher bimodal mixture, unit-variance
Student-t) and :func:`kde_fit` produces a grid-backed estimate from data.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, signal, special

from .errors import DomainError, NumericalError, ValidationError

__all__ = [
    "NoiseModel",
    "GaussianNoise",
    "BimodalNoise",
    "StudentTNoise",
    "KdeNoise",
    "TransformMoments",
    "gaussian_noise",
    "bimodal_noise",
    "student_t_noise",
    "fisher_information",
    "transform_moments",
    "kde_fit",
    "estimate_w4",
    "split_half_w4",
    "load_samples",
    "noise_to_dict",
    "noise_from_dict",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
TAIL_DENSITY = 1e-12
MAX_RADIUS = 40.0


class NoiseModel:
    """Base class. Subclasses provide ``density``, ``score``, ``score_derivative`` and ``sample``."""

    name = "abstract"

    def density(self, x):
        raise NotImplementedError

    def score(self, x):
        raise NotImplementedError

    def score_derivative(self, x):
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size):
        raise NotImplementedError

    def density_derivative(self, x):
        return -self.score(x) * self.density(x)

    def to_dict(self) -> dict:
        raise NotImplementedError

    # -- quadrature -------------------------------------------------------
    @functools.cached_property
    def radius(self) -> float:
        """Smallest ``R`` (capped at 40) with ``g(+-R) < 1e-12``."""

        def tail(r):
            return max(self.density(r), self.density(-r))

        r = 1.0
        while tail(r) >= TAIL_DENSITY:
            if r >= MAX_RADIUS:
                return MAX_RADIUS
            r += 0.5
        if r == 1.0:
            return r
        return float(
            optimize.brentq(lambda t: math.log(tail(t)) - math.log(TAIL_DENSITY), r - 0.5, r, xtol=1e-10)
        )

    def expect(self, fn, *, tol: float = 1e-12) -> float:
        """``E[fn(xi)]`` for ``xi ~ g`` by adaptive quadrature on ``[-R, R]``."""
        R = self.radius

        def integrand(x):
            return fn(x) * self.density(x)

        total = 0.0
        # split at 0 and at the bulk scale so the adaptive rule sees smooth pieces
        edges = [-R, -2.0, 0.0, 2.0, R] if R > 2.0 else [-R, 0.0, R]
        if R >= MAX_RADIUS:
            # heavy tails: the cap was hit, so integrate the rest on infinite intervals
            edges = [-np.inf, *edges, np.inf]
        for a, b in zip(edges[:-1], edges[1:]):
            val, err = integrate.quad(integrand, a, b, epsabs=tol, epsrel=1e-13, limit=400)
            if not np.isfinite(val):
                raise NumericalError("divergent integrand in noise expectation")
            total += val
        return float(total)

    # -- moments ----------------------------------------------------------
    @functools.cached_property
    def fisher(self) -> float:
        return fisher_information(self)

    @functools.cached_property
    def w3(self) -> float:
        return self.expect(lambda x: x**3)

    @functools.cached_property
    def w4(self) -> float:
        return self.expect(lambda x: x**4)

    def __repr__(self):
        return f"{type(self).__name__}()"


class GaussianNoise(NoiseModel):
    name = "gaussian"

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * x * x) / _SQRT_2PI

    def score(self, x):
        return np.asarray(x, dtype=float) * 1.0

    def score_derivative(self, x):
        return np.ones_like(np.asarray(x, dtype=float))

    def sample(self, rng, size):
        return rng.standard_normal(size)

    @property
    def fisher(self) -> float:
        return 1.0

    @property
    def w3(self) -> float:
        return 0.0

    @property
    def w4(self) -> float:
        return 3.0

    def to_dict(self):
        return {"kind": "gaussian"}


class BimodalNoise(NoiseModel):
    """Law of ``Z/2 + (sqrt(3)/2) R`` with ``Z`` standard normal and ``R`` Rademacher.

    ``g(x) = (exp(-2(x - a)^2) + exp(-2(x + a)^2)) / sqrt(2 pi)`` with
    ``a = sqrt(3)/2``, and the score has the closed form
    ``h(x) = 4x - 2 sqrt(3) tanh(2 sqrt(3) x)``.
    """

    name = "bimodal"
    shift = math.sqrt(3.0) / 2.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        a = self.shift
        return np.exp(np.logaddexp(-2.0 * (x - a) ** 2, -2.0 * (x + a) ** 2)) / _SQRT_2PI

    def score(self, x):
        x = np.asarray(x, dtype=float)
        c = 4.0 * self.shift
        return 4.0 * x - c * np.tanh(c * x)

    def score_derivative(self, x):
        x = np.asarray(x, dtype=float)
        c = 4.0 * self.shift
        t = np.tanh(c * x)
        return 4.0 - c * c * (1.0 - t * t)

    def sample(self, rng, size):
        z = rng.standard_normal(size)
        signs = 2.0 * rng.integers(0, 2, size=size) - 1.0
        return 0.5 * z + self.shift * signs

    @property
    def w3(self) -> float:
        return 0.0

    @property
    def w4(self) -> float:
        # E[(a + b)^4] = E a^4 + 6 E a^2 E b^2 + E b^4 with a ~ N(0, 1/4), b = +-sqrt(3)/2
        return 3.0 / 16.0 + 6.0 * 0.25 * 0.75 + 9.0 / 16.0

    def to_dict(self):
        return {"kind": "bimodal"}


class StudentTNoise(NoiseModel):
    """Student-t with ``nu > 2`` degrees of freedom rescaled to unit variance."""

    name = "student_t"

    def __init__(self, nu: float = 5.0):
        if nu <= 2:
            raise DomainError("Student-t needs nu > 2 for a finite variance")
        self.nu = float(nu)
        self._s = math.sqrt(self.nu / (self.nu - 2.0))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        nu, s = self.nu, self._s
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return s * np.exp(logc - 0.5 * (nu + 1) * np.log1p((s * x) ** 2 / nu))

    def score(self, x):
        x = np.asarray(x, dtype=float)
        nu, s = self.nu, self._s
        return s * s * (nu + 1) * x / (nu + (s * x) ** 2)

    def score_derivative(self, x):
        x = np.asarray(x, dtype=float)
        nu, s = self.nu, self._s
        q = (s * x) ** 2
        return s * s * (nu + 1) * (nu - q) / (nu + q) ** 2

    def sample(self, rng, size):
        return rng.standard_t(self.nu, size) / self._s

    @property
    def w3(self) -> float:
        return 0.0

    @property
    def w4(self) -> float:
        if self.nu <= 4:
            return math.inf
        return 3.0 * (self.nu - 2.0) / (self.nu - 4.0)

    def to_dict(self):
        return {"kind": "student_t", "params": {"nu": self.nu}}

    def __repr__(self):
        return f"StudentTNoise(nu={self.nu:g})"


class KdeNoise(NoiseModel):
    """Symmetrised Gaussian-kernel density estimate stored on a uniform grid.

    ``g``, ``g'`` and ``g''`` are tabulated on a grid symmetric about zero and
    linearly interpolated. Where ``g < 1e-12`` the score is continued linearly
    from the last reliable grid points.
    """

    name = "kde"

    def __init__(self, grid, g, dg, d2g, bandwidth: float, n_samples: int):
        self.grid = np.asarray(grid, dtype=float)
        self.g = np.asarray(g, dtype=float)
        self.dg = np.asarray(dg, dtype=float)
        self.d2g = np.asarray(d2g, dtype=float)
        self.bandwidth = float(bandwidth)
        self.n_samples = int(n_samples)
        if not (self.grid.shape == self.g.shape == self.dg.shape == self.d2g.shape):
            raise ValidationError("KDE grid arrays must share one shape")
        self._build_score()

    def _build_score(self):
        x, g = self.grid, self.g
        ok = np.flatnonzero(g >= TAIL_DENSITY)
        if ok.size < 3:
            raise NumericalError("KDE has fewer than three grid points above the density floor")
        lo, hi = ok[0], ok[-1]
        h = np.empty_like(x)
        hp = np.empty_like(x)
        core = slice(lo, hi + 1)
        h[core] = -self.dg[core] / g[core]
        hp[core] = (self.dg[core] ** 2 - g[core] * self.d2g[core]) / g[core] ** 2
        dx = x[1] - x[0]
        self._slope_lo = (h[lo + 1] - h[lo]) / dx
        self._slope_hi = (h[hi] - h[hi - 1]) / dx
        h[:lo] = h[lo] + self._slope_lo * (x[:lo] - x[lo])
        h[hi + 1 :] = h[hi] + self._slope_hi * (x[hi + 1 :] - x[hi])
        hp[:lo] = self._slope_lo
        hp[hi + 1 :] = self._slope_hi
        self._h, self._hp = h, hp
        self.reliable = (float(x[lo]), float(x[hi]))

    def density(self, x):
        return np.interp(x, self.grid, self.g, left=0.0, right=0.0)

    def density_derivative(self, x):
        return np.interp(x, self.grid, self.dg, left=0.0, right=0.0)

    def score(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.grid, self._h)
        x0, x1 = self.grid[0], self.grid[-1]
        below, above = x < x0, x > x1
        if np.any(below) or np.any(above):
            out = np.where(below, self._h[0] + self._slope_lo * (x - x0), out)
            out = np.where(above, self._h[-1] + self._slope_hi * (x - x1), out)
        return out

    def score_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid, self._hp, left=self._slope_lo, right=self._slope_hi)

    def clamped_fraction(self, x) -> float:
        """Fraction of ``x`` falling in the linearly continued tail of the score."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.reliable
        return float(np.mean((x < lo) | (x > hi))) if x.size else 0.0

    @functools.cached_property
    def _cdf(self):
        c = integrate.cumulative_trapezoid(self.g, self.grid, initial=0.0)
        return c / c[-1]

    def sample(self, rng, size):
        return np.interp(rng.random(size), self._cdf, self.grid)

    @property
    def radius(self) -> float:
        return float(self.grid[-1])

    def expect(self, fn, *, tol=None) -> float:
        return float(integrate.trapezoid(fn(self.grid) * self.g, self.grid))

    @property
    def w3(self) -> float:
        return self.expect(lambda x: x**3)

    def to_dict(self):
        return {
            "kind": "kde",
            "bandwidth": self.bandwidth,
            "n_samples": self.n_samples,
            "grid": {
                "x0": float(self.grid[0]),
                "dx": float(self.grid[1] - self.grid[0]),
                "g": self.g.tolist(),
                "dg": self.dg.tolist(),
                "d2g": self.d2g.tolist(),
            },
        }

    def __repr__(self):
        return f"KdeNoise(n_samples={self.n_samples}, bandwidth={self.bandwidth:.4g})"


@functools.lru_cache(maxsize=None)
def gaussian_noise() -> GaussianNoise:
    """Standard normal noise: ``h(x) = x``, ``F_g = 1``, ``w4 = 3``."""
    return GaussianNoise()


@functools.lru_cache(maxsize=None)
def bimodal_noise() -> BimodalNoise:
    return BimodalNoise()


@functools.lru_cache(maxsize=None)
def student_t_noise(nu: float = 5.0) -> StudentTNoise:
    return StudentTNoise(nu)


def fisher_information(model: NoiseModel) -> float:
    """``F_g = int g'(x)^2 / g(x) dx``.

    Adaptive quadrature on ``[-R, R]``; grid-backed models use the trapezoid
    rule on their own grid.
    """
    if isinstance(model, KdeNoise):
        g = model.g
        mask = g > 0
        return float(integrate.trapezoid(np.where(mask, model.dg**2 / np.where(mask, g, 1.0), 0.0), model.grid))

    def integrand(x):
        g = model.density(x)
        if g <= 0:
            raise DomainError(f"density is not positive at x = {x}")
        return model.density_derivative(x) ** 2 / g

    R = model.radius
    pieces = [(-R, -2.0), (-2.0, 0.0), (0.0, 2.0), (2.0, R)]
    if R >= MAX_RADIUS:
        pieces += [(-np.inf, -R), (R, np.inf)]
    total = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        val, _ = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-13, limit=400)
        total += val
    return float(total)


@dataclass(frozen=True)
class TransformMoments:
    """``m = E f'(xi)``, ``v = E f(xi)^2``, ``e = E xi f(xi)`` for ``xi ~ g``."""

    m: float
    v: float
    e: float


def transform_moments(model: NoiseModel, f, df) -> TransformMoments:
    """Quadrature values of ``(m_f, v_f, e_f)`` for a transform ``f`` with derivative ``df``."""
    m = model.expect(df)
    v = model.expect(lambda x: f(x) ** 2)
    e = model.expect(lambda x: x * f(x))
    if not all(np.isfinite([m, v, e])):
        raise NumericalError("transform moments diverged")
    if v <= 0:
        raise NumericalError("transform has zero second moment under the noise")
    return TransformMoments(m, v, e)


def kde_fit(samples, bandwidth: float | None = None, *, points_per_bandwidth: int = 32) -> KdeNoise:
    """Gaussian-kernel density estimate of ``samples``, symmetrised about zero.

    The kernel sum ``(1/(n delta)) sum phi((x - s_i)/delta)`` and its first two
    derivatives are evaluated on a grid by linear binning and FFT convolution
    with the analytic kernel (and kernel-derivative) profiles. The default
    bandwidth is ``n ** (-1/5)``.
    """
    s = np.asarray(samples, dtype=float).ravel()
    n = s.size
    if n < 1000:
        raise ValidationError(f"KDE needs at least 1000 samples, got {n}")
    if not np.all(np.isfinite(s)):
        raise ValidationError("samples contain non-finite values")
    delta = float(bandwidth) if bandwidth is not None else n ** (-0.2)
    if delta <= 0:
        raise ValidationError("bandwidth must be positive")

    dx = delta / points_per_bandwidth
    half = np.max(np.abs(s)) + 10.0 * delta
    K = int(math.ceil(half / dx))
    grid = (np.arange(2 * K + 1) - K) * dx

    # linear binning
    t = (s + K * dx) / dx
    i = np.clip(np.floor(t).astype(np.int64), 0, 2 * K - 1)
    w = t - i
    counts = np.bincount(i, weights=1.0 - w, minlength=2 * K + 1)
    counts += np.bincount(i + 1, weights=w, minlength=2 * K + 1)
    counts = 0.5 * (counts + counts[::-1]) / n

    J = int(math.ceil(9.0 * delta / dx))
    u = np.arange(-J, J + 1) * dx / delta
    phi = np.exp(-0.5 * u * u) / _SQRT_2PI
    g = signal.fftconvolve(counts, phi / delta, mode="same")
    dg = signal.fftconvolve(counts, -u * phi / delta**2, mode="same")
    d2g = signal.fftconvolve(counts, (u * u - 1.0) * phi / delta**3, mode="same")
    g = np.maximum(g, 0.0)
    # enforce exact parity lost to FFT round-off
    g = 0.5 * (g + g[::-1])
    dg = 0.5 * (dg - dg[::-1])
    d2g = 0.5 * (d2g + d2g[::-1])
    return KdeNoise(grid, g, dg, d2g, delta, n)


def _values(Y) -> np.ndarray:
    return np.asarray(getattr(Y, "values", Y), dtype=float)


def estimate_w4(Y) -> float:
    """``(1/MN) sum (sqrt(N) Y_ij)^4``: the normalised fourth moment of the entries."""
    Y = _values(Y)
    if Y.ndim != 2 or min(Y.shape) < 1:
        raise ValidationError("estimate_w4 needs a nonempty 2-D matrix")
    N = Y.shape[1]
    return float(np.mean((math.sqrt(N) * Y) ** 4))


def split_half_w4(Y):
    """``estimate_w4`` on the left and right column halves, normalised by the full ``N``."""
    Y = _values(Y)
    N = Y.shape[1]
    if N < 2:
        raise ValidationError("need at least two columns to split")
    k = N // 2
    scaled = math.sqrt(N) * Y
    return float(np.mean(scaled[:, :k] ** 4)), float(np.mean(scaled[:, k:] ** 4))


def load_samples(path) -> np.ndarray:
    """Read numbers separated by whitespace and/or commas."""
    text = Path(path).read_text()
    tokens = text.replace(",", " ").split()
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ValidationError(f"non-numeric token in {path}: {exc}") from exc


def noise_to_dict(model: NoiseModel) -> dict:
    return model.to_dict()


def noise_from_dict(doc: dict) -> NoiseModel:
    kind = doc.get("kind")
    if kind == "gaussian":
        return gaussian_noise()
    if kind == "bimodal":
        return bimodal_noise()
    if kind == "student_t":
        return student_t_noise(float(doc.get("params", {}).get("nu", 5.0)))
    if kind == "kde":
        grid = doc["grid"]
        n = len(grid["g"])
        x = grid["x0"] + grid["dx"] * np.arange(n)
        return KdeNoise(x, grid["g"], grid["dg"], grid["d2g"], doc["bandwidth"], doc["n_samples"])
    raise ValidationError(f"unknown noise kind {kind!r}")
