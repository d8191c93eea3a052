"""Dense symmetric eigenvalues and Marchenko-Pastur reference functions.

Everything here is deterministic. The ratio ``d = M / N`` is restricted to
``(0, 1]``; the Marchenko-Pastur law with an atom at zero (``M > N``) is not
supported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import integrate

from .errors import DomainError, NumericalError, ValidationError

__all__ = [
    "SpectralSummary",
    "check_ratio",
    "sym_eigenvalues",
    "top_eigenvalue",
    "top_eigenpair",
    "gram",
    "spectral_summary",
    "mp_edges",
    "mp_density",
    "stieltjes",
    "bbp_outlier",
    "overlap_limit",
    "mp_integral",
]


def check_ratio(d) -> float:
    """Return ``d`` as a float, raising :class:`DomainError` unless ``0 < d <= 1``."""
    d = float(d)
    if not (0.0 < d <= 1.0) or not np.isfinite(d):
        raise DomainError(f"ratio d = M/N must lie in (0, 1], got {d!r}")
    return d


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray  # descending
    d: float
    edges: tuple

    @property
    def largest(self) -> float:
        return float(self.eigenvalues[0])


def _check_symmetric(S: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {S.shape}")
    if S.size == 0:
        raise ValidationError("empty matrix")
    if not np.all(np.isfinite(S)):
        raise ValidationError("matrix contains non-finite entries")
    scale = np.max(np.abs(S))
    if np.max(np.abs(S - S.T)) > rtol * max(scale, np.finfo(float).tiny):
        raise ValidationError("matrix is not symmetric")
    return S


def sym_eigenvalues(S) -> np.ndarray:
    """Full spectrum of a real symmetric matrix, sorted in descending order.

    Uses LAPACK's tridiagonal reduction followed by an implicit QL/QR sweep
    (``dsyevd`` through :func:`numpy.linalg.eigvalsh`), which is deterministic
    for identical input bits.
    """
    S = _check_symmetric(S)
    try:
        w = np.linalg.eigvalsh(S)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails
        raise NumericalError(f"symmetric eigensolver did not converge: {exc}") from exc
    return w[::-1].copy()


def top_eigenpair(S):
    """Largest eigenvalue and a unit eigenvector of a symmetric matrix."""
    S = _check_symmetric(S)
    m = S.shape[0]
    try:
        w, v = scipy.linalg.eigh(S, subset_by_index=[m - 1, m - 1], driver="evr")
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericalError(f"symmetric eigensolver did not converge: {exc}") from exc
    return float(w[0]), v[:, 0]


def top_eigenvalue(S) -> float:
    S = _check_symmetric(S)
    m = S.shape[0]
    w = scipy.linalg.eigh(S, eigvals_only=True, subset_by_index=[m - 1, m - 1], driver="evr")
    return float(w[0])


def gram(Y) -> np.ndarray:
    """``Y @ Y.T`` symmetrised exactly (BLAS can leave last-bit asymmetry)."""
    Y = np.asarray(Y, dtype=float)
    S = Y @ Y.T
    return 0.5 * (S + S.T)


def spectral_summary(Y) -> SpectralSummary:
    Y = np.asarray(Y, dtype=float)
    M, N = Y.shape
    d = check_ratio(M / N)
    return SpectralSummary(sym_eigenvalues(gram(Y)), d, mp_edges(d))


def mp_edges(d):
    """Support edges ``((1 - sqrt d)^2, (1 + sqrt d)^2)`` of the MP law."""
    d = check_ratio(d)
    r = np.sqrt(d)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(x, d):
    """Marchenko-Pastur density (variance-1/N normalisation), vectorised in ``x``."""
    lo, hi = mp_edges(d)
    x = np.asarray(x, dtype=float)
    inside = (x > lo) & (x < hi)
    xs = np.where(inside, x, 0.5 * (lo + hi))
    val = np.sqrt((xs - lo) * (hi - xs)) / (2.0 * np.pi * d * xs)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def stieltjes(z, d) -> float:
    """Stieltjes transform ``s(z) = int dmu_MP(x) / (x - z)`` for real ``z`` off the bulk.

    The branch is the one decaying like ``-1/z``. Both branches are written in
    rationalised form ``2 / (a -+ sqrt(disc))`` which avoids cancellation near
    ``z = 0``.
    """
    d = check_ratio(d)
    lo, hi = mp_edges(d)
    z = float(z)
    if lo < z < hi:
        raise DomainError(f"z = {z} lies inside the MP support ({lo}, {hi})")
    a = 1.0 - d - z
    disc = max((z - lo) * (z - hi), 0.0)
    root = np.sqrt(disc)
    if z >= hi:
        return 2.0 / (a - root)
    denom = a + root
    if denom == 0.0:
        raise DomainError("Stieltjes transform diverges at z = 0 when d = 1")
    return 2.0 / denom


def bbp_outlier(lam, d) -> float:
    """Almost-sure limit of the top eigenvalue of ``Y Y^T`` for a rank-one spike of SNR ``lam``."""
    d = check_ratio(d)
    lam = float(lam)
    if lam < 0:
        raise DomainError(f"SNR must be nonnegative, got {lam}")
    if lam > np.sqrt(d):
        return (1.0 + lam) * (1.0 + d / lam)
    return mp_edges(d)[1]


def overlap_limit(lam, d) -> float:
    """Limiting squared overlap ``|<u_hat, u>|^2`` of the top left singular vector.

    Standard rectangular BBP result: ``(1 - d/lam^2) / (1 + d/lam)`` above
    ``sqrt(d)`` and zero below.
    """
    d = check_ratio(d)
    lam = float(lam)
    if lam <= np.sqrt(d):
        return 0.0
    return (1.0 - d / lam**2) / (1.0 + d / lam)


def mp_integral(f, d, *, tol: float = 1e-10) -> float:
    """``int f(x) dmu_MP(x)`` by adaptive quadrature.

    The substitution ``x = lo + (hi - lo) sin^2(theta)`` turns the square-root
    edge behaviour into a smooth integrand on ``[0, pi/2]``.
    """
    d = check_ratio(d)
    lo, hi = mp_edges(d)
    width = hi - lo

    def integrand(theta):
        s, c = np.sin(theta), np.cos(theta)
        x = lo + width * s * s
        fx = f(x)
        if not np.isfinite(fx):
            raise NumericalError(f"integrand is not finite at x = {x}")
        # density * dx/dtheta, with the sqrt factors cancelled analytically
        return fx * width**2 * s * s * c * c / (np.pi * d * x)

    val, err = integrate.quad(integrand, 0.0, 0.5 * np.pi, epsabs=tol * 1e-2, epsrel=1e-13, limit=400)
    if err > tol:
        raise NumericalError(f"MP quadrature error estimate {err:.2e} exceeds tolerance {tol:.0e}")
    return float(val)
