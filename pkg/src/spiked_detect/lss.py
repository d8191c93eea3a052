"""Linear-spectral-statistic test for a subcritical rank-one spike.

The statistic is ``L = sum_i phi(mu_i) - M int phi dmu_MP`` over the
eigenvalues ``mu_i`` of ``Y Y^T`` with

    phi(x) = (omega/d) (2/(w4 - 1) - 1) x - log((1 + d/omega)(1 + omega) - x).

Under both hypotheses ``L`` is asymptotically normal with a common variance
``V0``; the test rejects the null when ``L`` exceeds the midpoint of the two
limiting means. The general CLT for an analytic test function is expressed
through Chebyshev coefficients ``tau_l`` of ``f(sqrt(d) x + 1 + d)`` on
``[-2, 2]``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import special

from .errors import DomainError, LogDetShiftError, NumericalError
from .spectral import check_ratio, gram, mp_integral, sym_eigenvalues

__all__ = [
    "TestParams",
    "Decision",
    "LssTestResult",
    "ChebyshevCoeffs",
    "phi",
    "logdet_shift",
    "lss_statistic",
    "lss_from_eigenvalues",
    "lss_spectral_sum",
    "limiting_mean",
    "limiting_variance",
    "threshold",
    "predicted_error",
    "lr_error",
    "decide",
    "run_test",
    "chebyshev_tau",
    "clt_moments",
    "efficiency",
]


@dataclass(frozen=True)
class TestParams:
    """Hypothesised SNR ``omega`` in ``(0, sqrt(d))``, ratio ``d`` and fourth moment ``w4 > 1``."""

    __test__ = False  # keep pytest from collecting this class

    omega: float
    d: float
    w4: float = 3.0

    def __post_init__(self):
        d = check_ratio(self.d)
        object.__setattr__(self, "d", d)
        if not (0.0 < self.omega < math.sqrt(d)):
            raise DomainError(f"omega must lie in (0, sqrt(d)) = (0, {math.sqrt(d):.6g}), got {self.omega}")
        if not (self.w4 > 1.0) or not math.isfinite(self.w4):
            raise DomainError(f"w4 must exceed 1, got {self.w4}")

    @property
    def r(self) -> float:
        """``omega^2 / d``."""
        return self.omega**2 / self.d

    @property
    def kappa(self) -> float:
        """Weight ``2/(w4 - 1) - 1`` of the trace term; zero for Gaussian noise."""
        return 2.0 / (self.w4 - 1.0) - 1.0


class Decision(str, enum.Enum):
    ACCEPT_H0 = "AcceptH0"
    REJECT_H0 = "RejectH0"


@dataclass(frozen=True)
class LssTestResult:
    statistic: float
    threshold: float
    decision: Decision
    m0: float
    m1: float
    V0: float
    predicted_error: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "threshold": self.threshold,
            "decision": self.decision.value,
            "m0": self.m0,
            "m1": self.m1,
            "V0": self.V0,
            "predicted_error": self.predicted_error,
        }


@dataclass(frozen=True)
class ChebyshevCoeffs:
    tau: np.ndarray
    L: int

    def __getitem__(self, k):
        return self.tau[k]


def logdet_shift(p: TestParams) -> float:
    """``(1 + d/omega)(1 + omega)``: the singularity of ``phi``."""
    return (1.0 + p.d / p.omega) * (1.0 + p.omega)


def phi(x, p: TestParams):
    """The optimal LSS test function, vectorised in ``x``."""
    x = np.asarray(x, dtype=float)
    arg = logdet_shift(p) - x
    if np.any(arg <= 0):
        raise DomainError("phi is undefined at or beyond the log-det shift")
    out = (p.omega / p.d) * p.kappa * x - np.log(arg)
    return float(out) if out.ndim == 0 else out


def _mp_log_integral(p: TestParams) -> float:
    """Closed form of ``int log(shift - x) dmu_MP(x)``."""
    w, d = p.omega, p.d
    return w / d - math.log(w / d) - (1.0 - d) / d * math.log1p(w)


def lss_from_eigenvalues(eigenvalues, p: TestParams, M: int | None = None) -> float:
    """Closed-form statistic from the spectrum of ``Y Y^T``.

    ``-log det(shift I - YY^T) + (omega/d) kappa (Tr YY^T - M) + M * c(omega, d)``.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    M = ev.size if M is None else int(M)
    shift = logdet_shift(p)
    top = float(np.max(ev))
    if top >= shift:
        raise LogDetShiftError(top, shift)
    logdet = float(np.sum(np.log(shift - ev)))
    trace = float(np.sum(ev))
    return -logdet + (p.omega / p.d) * p.kappa * (trace - M) + M * _mp_log_integral(p)


def lss_spectral_sum(eigenvalues, p: TestParams) -> float:
    """``sum phi(mu_i) - M int phi dmu_MP`` with the centring by quadrature."""
    ev = np.asarray(eigenvalues, dtype=float)
    shift = logdet_shift(p)
    if np.max(ev) >= shift:
        raise LogDetShiftError(np.max(ev), shift)
    centre = mp_integral(lambda x: phi(x, p), p.d)
    return float(np.sum(phi(ev, p)) - ev.size * centre)


def lss_statistic(Y, p: TestParams) -> float:
    Y = np.asarray(getattr(Y, "values", Y), dtype=float)
    return lss_from_eigenvalues(sym_eigenvalues(gram(Y)), p)


def limiting_mean(lam, p: TestParams) -> float:
    """Limiting mean ``m(lam)`` of the statistic when the true SNR is ``lam``.

    The first two terms depend on the test parameter ``omega`` and the last two
    on ``lam``; at ``lam = 0`` this is the null mean. The fourth-cumulant term
    enters with a plus sign, ``+ (r/2)(w4 - 3)``, which is what the general CLT
    mean gives for ``phi`` (see :func:`clt_moments`) and what simulation with
    non-Gaussian noise shows.
    """
    lam = float(lam)
    d = p.d
    if not (0.0 <= lam < math.sqrt(d)):
        raise DomainError(f"true SNR must lie in [0, sqrt(d)), got {lam}")
    s = lam * lam / d
    return -0.5 * math.log1p(-p.r) + 0.5 * p.r * (p.w4 - 3.0) - math.log1p(-s) + s * p.kappa


def limiting_variance(p: TestParams) -> float:
    return -2.0 * math.log1p(-p.r) + 2.0 * p.r * p.kappa


def threshold(p: TestParams) -> float:
    """Critical value: midpoint of the null and alternative means."""
    return -math.log1p(-p.r) + 0.5 * p.r * (2.0 / (p.w4 - 1.0) + p.w4 - 4.0)


def predicted_error(p: TestParams) -> float:
    """Limiting Type-I + Type-II error ``erfc(sqrt(V0) / (4 sqrt 2))``."""
    return float(special.erfc(math.sqrt(limiting_variance(p)) / (4.0 * math.sqrt(2.0))))


def lr_error(omega, d) -> float:
    """Limiting error of the likelihood-ratio test under Gaussian noise (reference curve)."""
    d = check_ratio(d)
    r = float(omega) ** 2 / d
    if not 0 <= r < 1:
        raise DomainError("omega must lie in [0, sqrt(d))")
    return float(special.erfc(0.25 * math.sqrt(-math.log1p(-r))))


def decide(L, p: TestParams) -> Decision:
    return Decision.ACCEPT_H0 if L <= threshold(p) else Decision.REJECT_H0


def run_test(Y, p: TestParams) -> LssTestResult:
    """Statistic, decision and the limiting quantities for one data matrix."""
    L = lss_statistic(Y, p)
    return LssTestResult(
        statistic=L,
        threshold=threshold(p),
        decision=decide(L, p),
        m0=limiting_mean(0.0, p),
        m1=limiting_mean(p.omega, p),
        V0=limiting_variance(p),
        predicted_error=predicted_error(p),
    )


# -- Chebyshev machinery -------------------------------------------------------


def _eval(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.array([float(f(t)) for t in x])
    return y


def chebyshev_tau(f, L: int, nodes: int | None = None) -> ChebyshevCoeffs:
    """``tau_l(f) = (1/pi) int_{-2}^{2} T_l(x/2) f(x) / sqrt(4 - x^2) dx`` for ``l <= L``.

    Gauss-Chebyshev rule with ``n >= 4L`` nodes (default at least 4096); all
    coefficients come out of one type-II DCT.
    """
    L = int(L)
    if L < 0:
        raise DomainError("truncation must be nonnegative")
    n = max(4096, 4 * (L + 1)) if nodes is None else int(nodes)
    if n < 4 * L:
        raise DomainError(f"need at least 4L = {4 * L} nodes, got {n}")
    theta = np.pi * (np.arange(n) + 0.5) / n
    fx = _eval(f, 2.0 * np.cos(theta))
    if not np.all(np.isfinite(fx)):
        raise NumericalError("f is not finite at every Chebyshev node")
    tau = scipy.fft.dct(fx, type=2)[: L + 1] / (2.0 * n)
    return ChebyshevCoeffs(tau, L)


def clt_moments(f, lam, d, w4, *, tol: float = 1e-12, max_terms: int = 10_000):
    """Limiting mean and variance of ``sum f(mu_i) - M int f dmu_MP``.

    ``lam`` is the true SNR. Series are summed until their terms drop below
    ``tol``; Chebyshev coefficients are recomputed with more nodes if needed.

    The fourth-cumulant correction is ``+ (w4 - 3) tau_2``. For ``f(x) = x^2``
    this reproduces the exact identity ``E Tr (YY^T)^2 - M(1 + d) = d (w4 - 2)``.
    """
    d = check_ratio(d)
    lam = float(lam)
    if not (0.0 <= lam < math.sqrt(d)):
        raise DomainError(f"the mean series diverges unless 0 <= lam < sqrt(d); got {lam}")
    sd = math.sqrt(d)

    def ft(x):
        return _eval(f, sd * np.asarray(x, dtype=float) + 1.0 + d)

    q = lam / sd
    L = 256
    while True:
        tau = chebyshev_tau(ft, L).tau
        ell = np.arange(L + 1)
        mean_terms = q ** ell[1:] * tau[1:]
        var_terms = 2.0 * ell[1:] * tau[1:] ** 2
        big = np.flatnonzero((np.abs(mean_terms) >= tol) | (np.abs(var_terms) >= tol))
        last = big[-1] + 1 if big.size else 0
        if last < L // 2:
            break
        if L >= max_terms:
            raise NumericalError(f"Chebyshev series did not reach tolerance {tol} within {max_terms} terms")
        L = min(4 * L, max_terms)
    edge = (ft(np.array([2.0]))[0] + ft(np.array([-2.0]))[0]) / 4.0
    mean = edge - 0.5 * tau[0] + (w4 - 3.0) * tau[2] + float(np.sum(mean_terms[:last]))
    var = float(np.sum(var_terms[:last])) + (w4 - 3.0) * tau[1] ** 2
    return float(mean), var


def efficiency(f, p: TestParams) -> float:
    """``|m_H1(f) - m_H0(f)| / sqrt(V(f))`` with the alternative at ``lam = omega``."""
    m0, v = clt_moments(f, 0.0, p.d, p.w4)
    m1, _ = clt_moments(f, p.omega, p.d, p.w4)
    if not v > 1e-300:
        raise DomainError("test function has zero limiting variance")
    return abs(m1 - m0) / math.sqrt(v)
