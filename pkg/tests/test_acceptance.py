"""Exit criteria 1-12 at their pinned tolerances.

Each test records one PASS/FAIL line (shown in the terminal summary) and
then asserts. Monte Carlo seeds are fixed constants chosen before any run.
"""

import math
import time

import numpy as np
import pytest
from scipy import special

from spiked_detect.harness.experiments import ExperimentConfig, lss_samples, error_table, clt_table
from spiked_detect.harness.experiments import run_kde_pipeline, run_transition_sweep
from spiked_detect.lss import (
    TestParams,
    chebyshev_tau,
    efficiency,
    lr_error,
    lss_from_eigenvalues,
    lss_spectral_sum,
    phi,
    predicted_error,
)
from spiked_detect.models import ModelSpec, generate, make_rng
from spiked_detect.noise import bimodal_noise, fisher_information, gaussian_noise
from spiked_detect.spectral import bbp_outlier, gram, mp_edges, sym_eigenvalues
from spiked_detect.transform import alpha_star, lambda_g, lambda_h_alpha, pca_detect

pytestmark = pytest.mark.acceptance

D = 0.5
D_PLUS = mp_edges(D)[1]


def _clock():
    t0 = time.perf_counter()
    return lambda: time.perf_counter() - t0


def test_c01_fisher_information(acceptance):
    elapsed = _clock()
    fg = fisher_information(gaussian_noise())
    fb = fisher_information(bimodal_noise())
    t = elapsed()
    ok = abs(fg - 1) <= 1e-10 and abs(fb - 2.50810) <= 1e-4 and t < 1
    acceptance(1, ok, f"F(gaussian)={fg:.12f} F(bimodal)={fb:.8f} (target 2.50810 +- 1e-4) in {t:.2f}s")
    assert ok


def test_c02_bbp_baseline(acceptance):
    elapsed = _clock()
    means = {}
    for lam in (0.9, 0.4945):
        spec = ModelSpec("additive", 512, 1024, snr=lam)
        mus = [pca_detect(generate(spec, make_rng(2002, int(lam * 1e4), s))).largest_eigenvalue for s in range(100)]
        means[lam] = float(np.mean(mus))
    t = elapsed()
    target = bbp_outlier(0.9, D)
    ok = (
        abs(means[0.9] / 2.955556 - 1) <= 0.02
        and abs(means[0.4945] / D_PLUS - 1) <= 0.02
        and abs(target - 2.955556) < 1e-6
        and t < 120
    )
    acceptance(
        2,
        ok,
        f"mean mu1 {means[0.9]:.4f} vs 2.955556, {means[0.4945]:.4f} vs d+ {D_PLUS:.6f} (2% bands) in {t:.0f}s",
    )
    assert ok


def test_c03_additive_transform(acceptance):
    elapsed = _clock()
    b = bimodal_noise()
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "TransitionSweep",
            "model": {"kind": "additive", "M": 1024, "N": 2048, "noise": "bimodal"},
            "grid": {"snr": [0.4945]},
            "trials": 100,
            "master_seed": 3003,
            "options": {"alpha": 0.0},
        }
    )
    r = run_transition_sweep(cfg).records()[0]
    t = elapsed()
    lam_f = 0.4945 * b.fisher
    target = (1 + lam_f) * (1 + D / lam_f)
    ok = (
        r["raw_detect"] <= 0.05
        and r["transformed_detect"] >= 0.95
        and abs(r["transformed_mean"] / 3.1434 - 1) <= 0.03
        and t < 600
    )
    acceptance(
        3,
        ok,
        f"raw detect {r['raw_detect']:.2f} (<=0.05), transformed detect {r['transformed_detect']:.2f} (>=0.95), "
        f"mean {r['transformed_mean']:.4f} vs 3.1434 (closed form {target:.4f}, 3%) in {t:.0f}s",
    )
    assert ok


def test_c04_multiplicative_transform(acceptance):
    elapsed = _clock()
    gamma = 0.35
    lam = 2 * gamma + gamma**2
    F = bimodal_noise().fisher
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "TransitionSweep",
            "model": {"kind": "multiplicative", "M": 1024, "N": 2048, "noise": "bimodal"},
            "grid": {"snr": [lam]},
            "trials": 100,
            "master_seed": 4004,
            "options": {"alpha": alpha_star(gamma, F)},
        }
    )
    r = run_transition_sweep(cfg).records()[0]
    t = elapsed()
    lg = lambda_g(gamma, F)
    target = (1 + lg) * (1 + D / lg)
    ok = lg > math.sqrt(D) and abs(r["transformed_mean"] / target - 1) <= 0.03 and t < 600
    acceptance(
        4, ok, f"lambda_g={lg:.4f}, mean {r['transformed_mean']:.4f} vs {target:.4f} (3%) in {t:.0f}s"
    )
    assert ok


def test_c05_transform_optimality(acceptance):
    elapsed = _clock()
    worst_gap, worst_slope = -math.inf, 0.0
    h = 1e-5
    for gamma in (0.1, 0.2239, 0.5, 1.0):
        for F in (1.0, 1.5, 2.50810):
            a = alpha_star(gamma, F)
            best = lambda_h_alpha(gamma, a, F)
            grid = np.linspace(-0.5, 3 * math.sqrt(F), 200)
            vals = np.array([lambda_h_alpha(gamma, x, F) for x in grid])
            worst_gap = max(worst_gap, float(np.max(vals - best)))
            slope = (lambda_h_alpha(gamma, a + h, F) - lambda_h_alpha(gamma, a - h, F)) / (2 * h)
            worst_slope = max(worst_slope, abs(slope))
    t = elapsed()
    ok = worst_gap <= 1e-12 and worst_slope < 1e-6 and t < 1
    acceptance(5, ok, f"max(lambda_h - lambda_g)={worst_gap:.2e}, max|d/dalpha| at alpha_g={worst_slope:.2e} in {t:.2f}s")
    assert ok


def test_c06_closed_form_consistency(acceptance):
    elapsed = _clock()
    rng = np.random.default_rng(6006)
    worst = 0.0
    for k in range(50):
        M = int(rng.integers(40, 200))
        N = int(rng.integers(M, 3 * M))
        d = M / N
        p = TestParams(float(rng.uniform(0.1, 0.6)) * math.sqrt(d), d, float(rng.uniform(1.5, 9.0)))
        Y = generate(ModelSpec("null", M, N), make_rng(6006, k)).values
        ev = sym_eigenvalues(gram(Y))
        worst = max(worst, abs(lss_spectral_sum(ev, p) - lss_from_eigenvalues(ev, p)))
    t = elapsed()
    ok = worst < 1e-8 and t < 30
    acceptance(6, ok, f"max |spectral sum - closed form| over 50 matrices = {worst:.2e} in {t:.1f}s")
    assert ok


def _clt_criterion(number, noise, w4, err_band, seed, acceptance):
    elapsed = _clock()
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "CltCheck",
            "model": {"kind": "additive", "M": 256, "N": 512, "noise": noise},
            "grid": {"omega": [0.15, 0.25, 0.35, 0.45]},
            "trials": 2000,
            "master_seed": seed,
            "options": {"w4": w4},
        }
    )
    samples = lss_samples(cfg, 2000, 2000)
    clt = clt_table(samples)
    errs, _ = error_table(samples)
    t = elapsed()
    problems, worst_z, worst_var, worst_err = [], 0.0, 0.0, 0.0
    for row in clt:
        omega, hyp, mean, m_th, se, var, v0 = row[:7]
        z = abs(mean - m_th) / se
        rel = abs(var / v0 - 1)
        worst_z, worst_var = max(worst_z, z), max(worst_var, rel)
        if z > 3:
            problems.append(f"{hyp}@{omega} mean off by {z:.1f} SE")
        if rel > 0.10:
            problems.append(f"{hyp}@{omega} variance ratio {var / v0:.3f}")
    for omega, _, _, emp, th, se, _ in errs:
        band = max(err_band, 3 * se)
        worst_err = max(worst_err, abs(emp - th))
        if abs(emp - th) > band:
            problems.append(f"error@{omega} {emp:.3f} vs {th:.3f} (band {band:.3f})")
    ok = not problems and t < 900
    detail = f"max mean |z|={worst_z:.2f} (<=3), max var rel dev={worst_var:.3f} (<=0.10), max |err - theory|={worst_err:.3f} in {t:.0f}s"
    if problems:
        detail += "; " + "; ".join(problems)
    acceptance(number, ok, detail)
    return ok


def test_c07_clt_gaussian(acceptance):
    assert _clt_criterion(7, "gaussian", 3.0, 0.03, 7007, acceptance)


def test_c08_gaussian_anchor(acceptance):
    elapsed = _clock()
    worst = 0.0
    for d in (0.25, 0.5, 1.0):
        for omega in np.linspace(0.001, 0.999, 100) * math.sqrt(d):
            p = TestParams(float(omega), d, 3.0)
            worst = max(worst, abs(predicted_error(p) - lr_error(omega, d)))
    # the LR curve written out independently
    w = np.linspace(0.01, 0.7, 100)
    lit = special.erfc(0.25 * np.sqrt(-np.log(1 - w**2 / D)))
    worst = max(worst, float(np.max(np.abs(lit - [predicted_error(TestParams(float(x), D)) for x in w]))))
    t = elapsed()
    ok = worst <= 1e-12 and t < 1
    acceptance(8, ok, f"max |predicted_error - LR error| = {worst:.1e} in {t:.2f}s")
    assert ok


def test_c09_chebyshev(acceptance):
    elapsed = _clock()
    worst_tau = 0.0
    for omega, w4 in ((0.45, 3.0), (0.3, 1.875)):
        p = TestParams(omega, D, w4)
        sd = math.sqrt(D)
        tau = chebyshev_tau(lambda x: phi(sd * x + 1 + D, p), 20).tau
        ref = np.array([0.0] + [2 * omega / (sd * (w4 - 1))] + [(omega / sd) ** l / l for l in range(2, 21)])
        worst_tau = max(worst_tau, float(np.max(np.abs(tau[1:] - ref[1:]))))
    worst_gen = 0.0
    for tt in (0.1, 0.3, 0.5):
        tau = chebyshev_tau(lambda x: -np.log(1 - tt * x + tt * tt), 80).tau
        y = np.linspace(-1, 1, 101)
        # sum_l tau_l T_l(y) rebuilt from quadrature coefficients vs the closed form
        series = np.polynomial.chebyshev.chebval(y, np.r_[0.0, tau[1:]])
        worst_gen = max(worst_gen, float(np.max(np.abs(series + 0.5 * np.log(1 - 2 * tt * y + tt * tt)))))
        ell = np.arange(1, 81)
        worst_gen = max(worst_gen, float(np.max(np.abs(tau[1:] - tt**ell / ell))))
    t = elapsed()
    ok = worst_tau <= 1e-8 and worst_gen <= 1e-8 and t < 5
    acceptance(9, ok, f"max tau error (l<=20) {worst_tau:.1e}, generating-function error {worst_gen:.1e} in {t:.2f}s")
    assert ok


def test_c10_efficiency(acceptance):
    elapsed = _clock()
    p = TestParams(0.45, D, 3.0)
    f = lambda x: phi(x, p)  # noqa: E731
    best = efficiency(f, p)
    rng = np.random.default_rng(1010)
    beaten = 0
    top = 0.0
    for _ in range(100):
        deg = int(rng.integers(1, 7))
        poly = np.polynomial.Polynomial(rng.standard_normal(deg + 1))
        e = efficiency(poly, p)
        top = max(top, e)
        beaten += e <= best
    affine = max(abs(efficiency(lambda x, a=a, c=c: a * f(x) + c, p) - best) for a, c in ((2.0, 1.0), (-0.3, 5.0), (7.0, -2.0)))
    t = elapsed()
    ok = beaten == 100 and affine <= 1e-10 and t < 10
    acceptance(10, ok, f"phi efficiency {best:.6f} >= all 100 polynomials (best {top:.6f}); affine drift {affine:.1e} in {t:.1f}s")
    assert ok


def test_c11_kde_pipeline(acceptance):
    elapsed = _clock()
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "KdePipeline",
            "model": {"kind": "additive", "M": 1024, "N": 2048, "noise": "bimodal"},
            "grid": {"snr": [0.4945]},
            "trials": 100,
            "master_seed": 1111,
        }
    )
    r = run_kde_pipeline(cfg).records()[0]
    t = elapsed()
    ok = r["kde_detect"] >= 0.90 and r["raw_detect"] <= 0.10 and r["flagged"] == 0 and t < 900
    acceptance(11, ok, f"KDE detect {r['kde_detect']:.2f} (>=0.90), raw detect {r['raw_detect']:.2f} (<=0.10) in {t:.0f}s")
    assert ok


def test_c12_universality(acceptance):
    assert _clt_criterion(12, "bimodal", 1.875, 0.04, 1212, acceptance)
