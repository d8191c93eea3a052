import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from spiked_detect.errors import DomainError, ValidationError
from spiked_detect.spectral import (
    bbp_outlier,
    gram,
    mp_density,
    mp_edges,
    mp_integral,
    overlap_limit,
    spectral_summary,
    stieltjes,
    sym_eigenvalues,
    top_eigenpair,
    top_eigenvalue,
)


def _mp_expect(fn, d):
    """``int fn dmu_MP`` with QUADPACK's algebraic end-point weights."""
    lo, hi = mp_edges(d)
    if d < 1:
        g, w = (lambda x: fn(x) / (2 * math.pi * d * x)), (0.5, 0.5)
    else:
        g, w = (lambda x: fn(x) / (2 * math.pi)), (-0.5, 0.5)
    return integrate.quad(g, lo, hi, weight="alg", wvar=w, epsabs=1e-13)[0]


def _mp_eigs(S):
    mpmath.mp.dps = 40
    E, _ = mpmath.eigsy(mpmath.matrix(S.tolist()))
    return np.sort(np.array([float(e) for e in E]))[::-1]


def test_eigenvalues_match_high_precision(rng):
    for n in (3, 6, 9):
        A = rng.standard_normal((n, n))
        S = A + A.T
        np.testing.assert_allclose(sym_eigenvalues(S), _mp_eigs(S), rtol=0, atol=1e-12)


def test_eigenvalues_descending_and_top(rng):
    Y = rng.standard_normal((40, 80)) / math.sqrt(80)
    S = gram(Y)
    w = sym_eigenvalues(S)
    assert np.all(np.diff(w) <= 0)
    assert top_eigenvalue(S) == pytest.approx(w[0], abs=1e-12)
    mu, v = top_eigenpair(S)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    np.testing.assert_allclose(S @ v, mu * v, atol=1e-10)


def test_asymmetric_rejected():
    with pytest.raises(ValidationError):
        sym_eigenvalues(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValidationError):
        sym_eigenvalues(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        sym_eigenvalues(np.array([[np.nan]]))


def test_zero_matrix_top_eigenvalue():
    assert top_eigenvalue(gram(np.zeros((5, 10)))) == 0.0


def test_edges_and_ratio_domain():
    lo, hi = mp_edges(0.5)
    assert hi == pytest.approx(2.914213562373095)
    assert lo == pytest.approx((1 - math.sqrt(0.5)) ** 2)
    for bad in (0.0, 1.5, -1, float("nan")):
        with pytest.raises(DomainError):
            mp_edges(bad)
    with pytest.raises(DomainError):
        spectral_summary(np.ones((4, 2)))


@pytest.mark.parametrize("d", [0.1, 0.5, 1.0])
def test_density_is_normalised(d):
    assert _mp_expect(lambda x: 1.0, d) == pytest.approx(1.0, abs=1e-10)
    lo, hi = mp_edges(d)
    mid = 0.5 * (lo + hi)
    assert mp_density(mid, d) * 2 * math.pi * d * mid == pytest.approx(math.sqrt((mid - lo) * (hi - mid)))
    assert mp_density(hi + 0.1, d) == 0.0


@pytest.mark.parametrize("d", [0.25, 0.5, 1.0])
def test_mp_integral_moments(d):
    # moments of the MP law: 1, 1 + d, 1 + 3d + d^2
    assert mp_integral(lambda x: 1.0, d) == pytest.approx(1.0, abs=1e-10)
    assert mp_integral(lambda x: x, d) == pytest.approx(1.0, abs=1e-10)
    assert mp_integral(lambda x: x * x, d) == pytest.approx(1 + d, abs=1e-10)
    assert mp_integral(lambda x: x**3, d) == pytest.approx(1 + 3 * d + d * d, abs=1e-10)


@pytest.mark.parametrize("d,z", [(0.5, 3.5), (0.5, 10.0), (0.5, 0.01), (0.5, -2.0), (0.2, 2.5), (1.0, 5.0)])
def test_stieltjes_against_quadrature(d, z):
    ref = _mp_expect(lambda x: 1.0 / (x - z), d)
    assert stieltjes(z, d) == pytest.approx(ref, rel=1e-7)


def test_stieltjes_special_values():
    assert stieltjes(0.0, 0.5) == pytest.approx(1 / (1 - 0.5), rel=1e-14)
    z = 1e6
    assert stieltjes(z, 0.5) == pytest.approx(-1 / z, rel=1e-5)
    with pytest.raises(DomainError):
        stieltjes(1.0, 0.5)
    with pytest.raises(DomainError):
        stieltjes(0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(0.01, 5.0))
def test_stieltjes_solves_quadratic(d, gap):
    # s solves d z s^2 + (z - 1 + d) s + 1 = 0
    hi = mp_edges(d)[1]
    z = hi + gap
    s = stieltjes(z, d)
    assert d * z * s * s + (z - 1 + d) * s + 1 == pytest.approx(0.0, abs=1e-10)
    assert s < 0


def test_bbp_and_overlap():
    assert bbp_outlier(0.9, 0.5) == pytest.approx(1.9 * (1 + 0.5 / 0.9))
    assert bbp_outlier(0.9, 0.5) == pytest.approx(2.955556, abs=1e-6)
    assert bbp_outlier(0.3, 0.5) == pytest.approx(mp_edges(0.5)[1])
    assert overlap_limit(0.5, 0.5) == 0.0
    assert overlap_limit(2.0, 0.5) == pytest.approx((1 - 0.5 / 4) / (1 + 0.25))
    with pytest.raises(DomainError):
        bbp_outlier(-1, 0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(1.0001, 10.0))
def test_bbp_above_edge(d, factor):
    lam = math.sqrt(d) * factor
    assert bbp_outlier(lam, d) > mp_edges(d)[1]
    assert 0 < overlap_limit(lam, d) < 1


def test_null_spectrum_fills_bulk(rng):
    M, N = 400, 800
    Y = rng.standard_normal((M, N)) / math.sqrt(N)
    s = spectral_summary(Y)
    lo, hi = s.edges
    assert s.largest < hi + 0.1
    assert s.eigenvalues[-1] > lo - 0.05
    assert np.mean(s.eigenvalues) == pytest.approx(1.0, abs=0.02)


def _charpoly_roots(S):
    """Eigenvalues as roots of det(xI - S), coefficients by Faddeev-LeVerrier in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    n = S.shape[0]
    A = mpmath.matrix(S.tolist())
    coeffs = [mpmath.mpf(1)]
    Mk = mpmath.zeros(n, n)
    for k in range(1, n + 1):
        Mk = A * Mk + coeffs[-1] * mpmath.eye(n)
        AM = A * Mk
        coeffs.append(-sum(AM[i, i] for i in range(n)) / k)
    roots = mpmath.polyroots(coeffs, maxsteps=500, extraprec=200)
    return np.sort([float(mpmath.re(r)) for r in roots])[::-1]


def test_eigenvalues_match_charpoly_roots(rng):
    Y = rng.standard_normal((8, 16))
    S = gram(Y)
    np.testing.assert_allclose(sym_eigenvalues(S), _charpoly_roots(S), atol=1e-8)


def test_eigenvalue_small_cases():
    np.testing.assert_array_equal(sym_eigenvalues(np.eye(4)), [1, 1, 1, 1])
    np.testing.assert_allclose(sym_eigenvalues(np.diag([3.0, 1.0, 2.0])), [3, 2, 1])


def test_trace_and_gram_duality(rng):
    for _ in range(5):
        Y = rng.standard_normal((6, 10))
        a = sym_eigenvalues(gram(Y))
        b = sym_eigenvalues(gram(Y.T))[:6]
        np.testing.assert_allclose(a, b, atol=1e-8)
        S = gram(Y)
        assert abs(a.sum() - np.trace(S)) <= 1e-8 * 6 * np.max(np.abs(S))


def test_edge_examples():
    assert mp_edges(1.0) == (0.0, 4.0)
    assert mp_edges(0.25) == pytest.approx((0.25, 2.25))
    assert stieltjes(4.0, 1.0) == pytest.approx(-0.5, abs=1e-12)
    assert stieltjes(4.0, 0.5) == pytest.approx(_mp_expect(lambda x: 1.0 / (x - 4.0), 0.5), abs=1e-8)


def test_stieltjes_self_consistency_random_points():
    r = np.random.default_rng(100)
    for _ in range(100):
        d = float(r.uniform(0.05, 1.0))
        lo, hi = mp_edges(d)
        z = float(r.uniform(hi + 1e-3, hi + 20)) if (r.random() < 0.6 or lo < 1e-3) else float(r.uniform(-5, lo - 1e-4))
        if d == 1.0 and z == 0.0:
            continue
        s = stieltjes(z, d)
        assert s == pytest.approx(1.0 / (1 - d - d * z * s - z), abs=1e-10)


def test_bbp_continuity():
    for d in (0.1, 0.5, 1.0):
        r = math.sqrt(d)
        assert bbp_outlier(r, d) == pytest.approx(mp_edges(d)[1])
        assert bbp_outlier(r * (1 + 1e-9), d) == pytest.approx(mp_edges(d)[1], abs=1e-8)


def test_mp_integral_of_log_shift():
    w, d = 0.45, 0.5
    shift = (1 + d / w) * (1 + w)
    ref = w / d - math.log(w / d) - (1 - d) / d * math.log(1 + w)
    assert mp_integral(lambda x: math.log(shift - x), d) == pytest.approx(ref, abs=1e-10)
