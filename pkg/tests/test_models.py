import json
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from spiked_detect.errors import DomainError, ValidationError
from spiked_detect.models import (
    DataMatrix,
    IidCustom,
    IidRademacher,
    ModelSpec,
    Spherical,
    gamma_of_lambda,
    generate,
    generate_additive,
    generate_multiplicative,
    generate_null,
    lambda_of_gamma,
    load_spike,
    make_rng,
    sample_prior,
)
from spiked_detect.noise import bimodal_noise


def test_spec_validation():
    with pytest.raises(ValidationError):
        ModelSpec("additive", 10, 5)
    with pytest.raises(ValidationError):
        ModelSpec("quadratic", 5, 10)
    with pytest.raises(DomainError):
        ModelSpec("additive", 5, 10, snr=-0.1)
    with pytest.raises(ValidationError):
        ModelSpec("additive", 5, 10, seed=2**64)


def test_spec_json_round_trip():
    spec = ModelSpec("multiplicative", 8, 16, snr=0.7, prior_u=Spherical(), noise=bimodal_noise(), seed=9)
    back = ModelSpec.from_json(spec.to_json())
    assert back.to_dict() == spec.to_dict()
    assert json.loads(spec.to_json())["noise"] == {"kind": "bimodal"}
    assert ModelSpec.from_dict({"M": 2, "N": 3, "noise": "bimodal"}).noise.fisher > 2


def test_generation_is_deterministic():
    spec = ModelSpec("additive", 20, 40, snr=1.0, seed=3)
    a, b = generate(spec), generate(spec)
    np.testing.assert_array_equal(a.values, b.values)
    c = generate(spec.with_(seed=4))
    assert not np.array_equal(a.values, c.values)
    assert not a.values.flags.writeable


def test_trial_streams_differ():
    x = make_rng(7, 0).standard_normal(5)
    y = make_rng(7, 1).standard_normal(5)
    z = make_rng(7, 0).standard_normal(5)
    assert not np.array_equal(x, y)
    np.testing.assert_array_equal(x, z)


def test_additive_structure():
    spec = ModelSpec("additive", 30, 60, snr=2.0, seed=1)
    data = generate_additive(spec)
    X = generate_null(spec.with_(kind="null")).values
    # noise is drawn first, so the null draw with the same stream is the noise part
    np.testing.assert_allclose(data.values - X, math.sqrt(2.0) * np.outer(data.planted_u, data.planted_v), atol=1e-14)
    assert np.linalg.norm(data.planted_u) == pytest.approx(1.0)
    assert np.linalg.norm(data.planted_v) == pytest.approx(1.0)


def test_zero_snr_is_pure_noise():
    spec = ModelSpec("additive", 10, 20, snr=0.0, seed=5)
    X = generate_null(spec.with_(kind="null")).values
    np.testing.assert_array_equal(generate(spec).values, X)


def test_multiplicative_matches_matrix_square_root():
    spec = ModelSpec("multiplicative", 12, 30, snr=1.3, prior_u=Spherical(), seed=2)
    data = generate_multiplicative(spec)
    X = generate_null(spec.with_(kind="null")).values
    u = data.planted_u
    root = scipy.linalg.sqrtm(np.eye(12) + 1.3 * np.outer(u, u)).real
    np.testing.assert_allclose(data.values, root @ X, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1e6))
def test_gamma_round_trip(lam):
    g = gamma_of_lambda(lam)
    assert g >= 0
    assert lambda_of_gamma(g) == pytest.approx(lam, rel=1e-12, abs=1e-300)


def test_gamma_small_lambda_precision():
    assert gamma_of_lambda(1e-12) == pytest.approx(5e-13, rel=1e-9)
    with pytest.raises(DomainError):
        gamma_of_lambda(-1)


def test_priors():
    rng = np.random.default_rng(0)
    u = sample_prior(IidRademacher(), 16, rng)
    assert np.allclose(np.abs(u), 0.25)
    s = sample_prior(Spherical(), 16, rng)
    assert np.linalg.norm(s) == pytest.approx(1.0)
    c = sample_prior(IidCustom(lambda r, n: r.standard_normal(n)), 10_000, rng)
    assert np.sum(c * c) == pytest.approx(1.0, abs=0.05)
    with pytest.raises(ValidationError):
        sample_prior(Spherical(), 0, rng)


def test_noise_scaling():
    spec = ModelSpec("null", 200, 400, seed=1)
    Y = generate(spec).values
    assert np.mean(Y * Y) * 400 == pytest.approx(1.0, abs=0.02)


def test_fixed_spike(tmp_path):
    p = tmp_path / "u.txt"
    p.write_text("3\n0\n4\n")
    u = load_spike(p)
    np.testing.assert_allclose(u, [0.6, 0, 0.8])
    data = generate(ModelSpec("additive", 3, 5, snr=1.0), u=u)
    np.testing.assert_array_equal(data.planted_u, u)
    with pytest.raises(ValidationError):
        generate(ModelSpec("additive", 4, 5, snr=1.0), u=u)
    p.write_text("0\n0\n")
    with pytest.raises(ValidationError):
        load_spike(p)


def test_data_matrix_shape_checked():
    with pytest.raises(ValidationError):
        DataMatrix(np.zeros((3, 3)), ModelSpec("null", 3, 4))
