import numpy as np
import pytest

from growthlab.constraints import Ball, Box, FullSpace
from growthlab.market import MarketSpec, simulate_paths
from growthlab.numeraire import (
    growth_path, growth_rate, numeraire_fractions, numeraire_paths,
    relative_log_error, terminal_deflation, wealth_paths, wealth_process_gap,
)
from growthlab.quadform import cov_inner, cov_norm, optimal_fraction

COV = np.array([[0.5, 0.1], [0.1, 0.4]])
DRIFT = np.array([0.8, 0.5])


def make_bundle(n_paths=200, seed=0, n_steps=30, **kwargs):
    spec = MarketSpec(dim=2, n_steps=n_steps, covariance=COV, drift=DRIFT,
                      **kwargs)
    return simulate_paths(spec, n_paths, seed)


def test_one_dimensional_box_closed_form():
    c = np.array([[1.0]])
    mu = 0.9
    f = optimal_fraction(c, np.array([mu]), Box([0.0], [mu / 2.0]))
    assert f[0] == pytest.approx(mu / 2.0, abs=1e-10)
    g = growth_rate(c, np.array([mu]), f)
    assert g == pytest.approx(3.0 * mu * mu / 8.0, abs=1e-10)


def test_wealth_decomposition_matches_manual_computation():
    b = make_bundle(n_paths=50)
    fractions = numeraire_fractions(b, Ball(1.2))
    w = wealth_paths(b, fractions)
    ca = np.einsum("kij,kj->ki", b.cov, b.drift)
    manual_db = (np.einsum("ki,ki->k", fractions, ca)
                 - 0.5 * np.einsum("ki,kij,kj->k", fractions, b.cov,
                                   fractions)) * b.dG
    assert np.max(np.abs(w.dB - manual_db[None, :])) < 1e-12
    manual_dl = np.einsum("ki,pki->pk", fractions, b.dM)
    assert np.max(np.abs(w.dL - manual_dl)) < 1e-12
    assert np.max(np.abs(w.log_wealth[:, -1] - w.terminal_log_wealth)) < 1e-12


def test_growth_rate_of_optimum_dominates_any_feasible_strategy():
    b = make_bundle(n_paths=1)
    constraint = Ball(1.0)
    fractions = numeraire_fractions(b, constraint)
    rng = np.random.default_rng(5)
    for _ in range(20):
        other = constraint.project(rng.standard_normal(2) * 2.0)
        for k in range(b.n_steps):
            g_opt = growth_rate(b.cov[k], b.drift[k], fractions[k])
            g_other = growth_rate(b.cov[k], b.drift[k], other)
            assert g_opt >= g_other - 1e-10


def test_growth_path_sandwich_and_unconstrained_bound():
    b = make_bundle()
    gp = growth_path(b.cov, b.drift, Ball(0.8), b.dG)
    assert np.all(gp.integrand >= -1e-12)
    bound = 0.5 * np.array([cov_inner(b.cov[k], b.drift[k], b.drift[k])
                            for k in range(b.n_steps)])
    assert np.all(gp.integrand <= bound + 1e-12)
    assert np.max(np.abs(gp.unconstrained_bound - bound)) < 1e-12
    assert gp.total <= float(np.sum(gp.unconstrained_bound * b.dG)) + 1e-12
    assert gp.cumulative[0] == 0.0
    assert gp.cumulative[-1] == pytest.approx(gp.total, rel=1e-12)


def test_growing_boxes_approach_unconstrained_growth():
    b = make_bundle()
    totals = []
    for half in (0.25, 0.5, 1.0, 2.0, 4.0):
        box = Box([-half, -half], [half, half])
        totals.append(growth_path(b.cov, b.drift, box, b.dG).total)
    assert all(t2 >= t1 - 1e-12 for t1, t2 in zip(totals, totals[1:]))
    unconstrained = growth_path(b.cov, b.drift, FullSpace(), b.dG)
    assert totals[-1] == pytest.approx(unconstrained.total, rel=1e-9)
    assert unconstrained.total == pytest.approx(
        float(np.sum(unconstrained.unconstrained_bound * b.dG)), rel=1e-12)


def test_per_step_deflation_inequality_is_exact():
    # log E-factor per step: <pi - phi, c (a - phi)> dG <= 0 for every
    # feasible pi, which makes X / X_hat a supermartingale
    b = make_bundle(n_paths=1)
    constraint = Ball(1.0)
    phi = numeraire_fractions(b, constraint)
    rng = np.random.default_rng(9)
    for _ in range(50):
        pi = constraint.project(rng.standard_normal(2) * 3.0)
        for k in range(b.n_steps):
            gap = cov_inner(b.cov[k], pi - phi[k], b.drift[k] - phi[k])
            assert gap * b.dG[k] <= 1e-10


def test_terminal_deflation_monte_carlo():
    b = make_bundle(n_paths=20_000, seed=3)
    constraint = Ball(1.0)
    benchmark = numeraire_paths(b, constraint)
    rng = np.random.default_rng(11)
    for _ in range(5):
        pi = constraint.project(rng.standard_normal(2) * 2.0)
        w = wealth_paths(b, np.broadcast_to(pi, (b.n_steps, 2)))
        ratio, se = terminal_deflation(w, benchmark)
        assert ratio <= 1.0 + 3.0 * se


def test_wealth_gap_metrics_vanish_for_identical_strategies():
    b = make_bundle(n_paths=20)
    fractions = numeraire_fractions(b, Ball(1.0))
    w1 = wealth_paths(b, fractions)
    w2 = wealth_paths(b, fractions.copy())
    gaps = wealth_process_gap(w1, w2)
    assert np.max(gaps["fv"]) == 0.0
    assert np.max(gaps["qv"]) == 0.0
    assert np.max(gaps["sup"]) == 0.0
    rel = relative_log_error(w1, w2)
    assert rel["a_over_b"] == 0.0 and rel["b_over_a"] == 0.0


def test_per_path_drifts_give_per_path_fractions():
    b = make_bundle(n_paths=6, n_steps=8)
    rng = np.random.default_rng(2)
    drifts = rng.standard_normal((6, 8, 2))
    fractions = numeraire_fractions(b, Ball(0.9), drifts=drifts)
    assert fractions.shape == (6, 8, 2)
    for p in range(6):
        for k in range(8):
            ref = optimal_fraction(b.cov[k], drifts[p, k], Ball(0.9))
            assert np.max(np.abs(fractions[p, k] - ref)) < 1e-8


def test_per_step_constraint_sequence():
    b = make_bundle(n_paths=4, n_steps=6)
    sets = [Ball(0.5 + 0.1 * k) for k in range(6)]
    fractions = numeraire_fractions(b, sets)
    for k in range(6):
        assert np.linalg.norm(fractions[k]) <= sets[k].radius + 1e-9


def test_fullspace_fractions_equal_drift():
    b = make_bundle(n_paths=3)
    fractions = numeraire_fractions(b, FullSpace())
    assert np.max(np.abs(fractions - b.drift)) < 1e-9
