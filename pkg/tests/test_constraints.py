import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from growthlab.constraints import (
    Ball, Box, FullSpace, HalfspacePolytope, Intersection,
    NonnegativeOrthant, constraint_from_config, hausdorff_distance,
    truncated_pair_distance,
)
from growthlab.errors import InfeasibleConstraint

from oracles import member_mask, support_gap_distance


def test_ball_pair_distance_is_radius_gap():
    assert truncated_pair_distance(Ball(1.0), Ball(1.5), radius=5.0, dim=2) \
        == pytest.approx(0.5, abs=1e-12)
    # truncation tighter than both balls: sets coincide
    assert truncated_pair_distance(Ball(2.0), Ball(3.0), radius=1.0, dim=2) \
        == pytest.approx(0.0, abs=1e-12)
    # truncation between the radii
    assert truncated_pair_distance(Ball(0.5), Ball(3.0), radius=1.0, dim=2) \
        == pytest.approx(0.5, abs=1e-12)


def test_fullspace_vs_ball_distance():
    # truncated full space is the truncation ball itself
    assert truncated_pair_distance(FullSpace(), Ball(0.8), radius=2.0, dim=3) \
        == pytest.approx(1.2, abs=1e-12)


def test_box_pair_distance_matches_vertex_formula():
    a = Box([-0.5, -0.25], [0.75, 1.0])
    b = Box([-0.25, -0.25], [0.5, 0.5])
    # both boxes live inside the truncation ball: distance is the largest
    # per-axis bound gap measured at the farthest vertex
    d = truncated_pair_distance(a, b, radius=10.0, dim=2)
    ref = np.linalg.norm([0.25, 0.5])
    assert d == pytest.approx(ref, abs=1e-9)


def test_truncated_distance_against_support_scan():
    a = Box([-0.6, -0.4], [0.8, 0.3])
    b = Ball(0.5)
    d = truncated_pair_distance(a, b, radius=2.0, dim=2)
    ref = support_gap_distance(a, b, radius=2.0, dim=2)
    # support gaps on a direction net lower-bound the Hausdorff distance
    assert d >= ref - 2e-3
    assert d <= ref + 0.05


def test_identical_sets_have_zero_distance():
    box = Box([-1.0, -1.0], [1.0, 1.0])
    assert truncated_pair_distance(box, box, radius=3.0, dim=2) == 0.0
    assert hausdorff_distance(Ball(1.0), Ball(1.0), radius=4.0, dim=2) \
        == pytest.approx(0.0, abs=1e-12)


def test_projection_is_idempotent_and_feasible():
    rng = np.random.default_rng(0)
    sets = [
        Ball(0.8),
        Box([-0.5, -1.0, -0.25], [1.0, 0.5, 0.75]),
        NonnegativeOrthant(),
        HalfspacePolytope(normals=[[1.0, 1.0, 0.0]], offsets=[1.0]),
        Intersection([Ball(1.5), NonnegativeOrthant()]),
    ]
    for constraint in sets:
        for _ in range(25):
            x = rng.standard_normal(3) * 2.0
            p = constraint.project(x)
            assert constraint.contains(p, tol=1e-8)
            p2 = constraint.project(p)
            assert np.max(np.abs(p2 - p)) < 1e-8


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_projection_is_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    constraint = [
        Ball(float(rng.uniform(0.2, 2.0))),
        Box(-rng.uniform(0.1, 1.0, d), rng.uniform(0.1, 1.0, d)),
        NonnegativeOrthant(),
    ][seed % 3]
    x = rng.standard_normal(d) * 3.0
    y = rng.standard_normal(d) * 3.0
    px, py = constraint.project(x), constraint.project(y)
    assert np.linalg.norm(px - py) <= np.linalg.norm(x - y) + 1e-9


def test_box_must_straddle_origin():
    with pytest.raises(InfeasibleConstraint):
        Box([0.5, 0.5], [1.0, 1.0]).validate(2)


def test_halfspace_offsets_must_admit_origin():
    with pytest.raises(InfeasibleConstraint):
        HalfspacePolytope(normals=[[1.0, 0.0]], offsets=[-0.5]).validate(2)


def test_config_round_trip():
    sets = [
        FullSpace(),
        Ball(0.75),
        Box([-1.0, -0.5], [0.25, 1.0]),
        NonnegativeOrthant(),
        HalfspacePolytope(normals=[[1.0, 1.0]], offsets=[1.0]),
        Intersection([Ball(1.0), NonnegativeOrthant()]),
    ]
    for constraint in sets:
        rebuilt = constraint_from_config(constraint.to_config())
        assert rebuilt == constraint


def test_config_rejects_unknown_keys():
    with pytest.raises(InfeasibleConstraint):
        constraint_from_config({"type": "ball", "radius": 1.0, "color": "red"})
    with pytest.raises(InfeasibleConstraint):
        constraint_from_config({"radius": 1.0})


def test_member_mask_agrees_with_contains():
    rng = np.random.default_rng(3)
    sets = [
        Ball(0.9),
        Box([-0.5, -0.25], [0.5, 1.0]),
        NonnegativeOrthant(),
        Intersection([Ball(1.2), Box([-1.0, -1.0], [1.0, 1.0])]),
    ]
    pts = rng.standard_normal((500, 2))
    for constraint in sets:
        ours = np.array([bool(constraint.contains(p)) for p in pts])
        ref = member_mask(constraint, pts, tol=0.0)
        disagree = np.mean(ours != ref)
        assert disagree < 0.01  # boundary-tolerance differences only
