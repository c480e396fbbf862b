import numpy as np
import pytest

from growthlab.market import MarketSpec, TiltSpec, density_paths, simulate_paths
from growthlab.sensitivity import (
    expansion_record, first_order_check, response_quotient,
    second_order_check,
)

COV = np.array([[0.5, 0.1], [0.1, 0.4]])
DRIFT = np.array([0.8, 0.5])
EPS = np.array([0.2, 0.1, 0.05, 0.025])


def make_bundle(n_paths=400, seed=5, n_steps=40, cov=COV):
    spec = MarketSpec(dim=2, n_steps=n_steps, covariance=cov, drift=DRIFT)
    return simulate_paths(spec, n_paths, seed)


def test_response_identity_is_exact_pathwise():
    b = make_bundle()
    rec = density_paths(b, TiltSpec(lam1=np.array([0.5, -0.3])))
    for eps in (1.0, 0.4, 0.1, 0.01):
        q = response_quotient(b, rec, eps)
        assert np.max(np.abs(q["direct"] - q["formula"])) < 1e-8


def test_identity_survives_rank_deficient_covariance():
    cov = np.array([[0.5, 0.5], [0.5, 0.5]])
    b = make_bundle(cov=cov)
    rec = density_paths(b, TiltSpec(lam1=np.array([0.3, 0.1])))
    q = response_quotient(b, rec, 0.25)
    assert np.max(np.abs(q["direct"] - q["formula"])) < 1e-8


def test_zero_tilt_gives_zero_everywhere():
    b = make_bundle(n_paths=50)
    rec = density_paths(b, TiltSpec(lam1=np.zeros(2)))
    assert np.max(np.abs(rec.z - 1.0)) == 0.0
    q = response_quotient(b, rec, 0.5)
    assert np.max(np.abs(q["direct"])) < 1e-12
    assert np.max(np.abs(q["formula"])) < 1e-12
    first = first_order_check(b, rec, EPS)
    assert np.max(first["fv_error"]) == 0.0
    assert np.max(first["qv_error"]) == 0.0
    assert first["order_fv"] is None and first["order_qv"] is None


def test_first_order_error_halves_with_eps():
    b = make_bundle()
    rec = density_paths(b, TiltSpec(lam1=np.array([0.5, -0.3])))
    first = first_order_check(b, rec, EPS)
    for ratio in first["fv_ratios"]:
        assert 1.6 < ratio < 2.4
    assert 0.8 <= first["order_fv"] <= 1.2
    assert 0.8 <= first["order_qv"] <= 1.2


def test_second_order_error_is_first_order_in_eps():
    b = make_bundle()
    rec = density_paths(b, TiltSpec(lam1=np.array([0.5, -0.3])))
    second = second_order_check(b, rec, EPS)
    assert 0.8 <= second["order_fv"] <= 1.2
    assert 0.8 <= second["order_qv"] <= 1.2


def test_expansion_limits_match_small_eps_quotient():
    b = make_bundle(n_paths=100)
    rec = density_paths(b, TiltSpec(lam1=np.array([0.4, -0.2])))
    exp_rec = expansion_record(b, rec)
    eps = 1e-6
    q = response_quotient(b, rec, eps)
    # the quotient converges to the first-order limit as eps -> 0
    assert np.max(np.abs(q["formula"] - exp_rec.first_order)) < 1e-5


def test_orthogonal_noise_does_not_change_the_quotient():
    # the response identity only sees the market component of the tilt;
    # an orthogonal density factor scales Z but cancels from lam_eps
    b = make_bundle(n_paths=100)
    lam = np.array([0.4, -0.2])
    rec_flat = density_paths(b, TiltSpec(lam1=lam))
    rec_orth = density_paths(b, TiltSpec(lam1=lam, orthogonal_vol=0.5))
    assert not np.allclose(rec_flat.z, rec_orth.z)
    q_flat = response_quotient(b, rec_flat, 0.2)
    q_orth = response_quotient(b, rec_orth, 0.2)
    assert np.max(np.abs(q_orth["direct"] - q_orth["formula"])) < 1e-8
    exp_flat = expansion_record(b, rec_flat)
    exp_orth = expansion_record(b, rec_orth)
    assert not np.allclose(exp_flat.first_order, exp_orth.first_order)


def test_eps_one_reproduces_full_tilt():
    b = make_bundle(n_paths=60)
    rec = density_paths(b, TiltSpec(lam1=np.array([0.3, 0.2])))
    q = response_quotient(b, rec, 1.0)
    # at eps = 1 the perturbed market is the fully tilted one
    assert np.max(np.abs(q["direct"] - q["formula"])) < 1e-8
    assert np.max(np.abs(q["direct"][:, 0])) == 0.0


def test_rejects_eps_outside_unit_interval():
    b = make_bundle(n_paths=10)
    rec = density_paths(b, TiltSpec(lam1=np.array([0.3, 0.2])))
    with pytest.raises(ValueError):
        response_quotient(b, rec, 0.0)
    with pytest.raises(ValueError):
        response_quotient(b, rec, 1.5)
