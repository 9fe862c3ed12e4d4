import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localoco import (
    BallSet,
    BallSublevelSet,
    InfeasibleSetError,
    IntersectionSet,
    NumericalError,
    QuadraticFunction,
    StructuralError,
    SublevelSet,
    UsageError,
    min_over_ball,
    project_ball,
    project_intersection,
    project_sublevel,
)
from localoco.geometry import is_empty_local, nearest_distance_to_sublevel

from oracles import grid_project, random_quadratic

UNIT_DISK = SublevelSet(QuadraticFunction(np.eye(2), [0, 0], -0.5))


# -- examples -----------------------------------------------------------------------


@pytest.mark.parametrize(
    "y, ball, expected",
    [
        ([0.5, 0], BallSet([0, 0], 1), [0.5, 0]),
        ([3, 0], BallSet([0, 0], 1), [1, 0]),
        ([3, 4], BallSet([0, 0], 5), [3, 4]),
    ],
)
def test_project_ball_examples(y, ball, expected):
    np.testing.assert_allclose(project_ball(y, ball), expected, atol=1e-15)


def test_project_sublevel_unit_disk():
    np.testing.assert_allclose(project_sublevel([2, 0], UNIT_DISK), [1, 0], atol=1e-12)
    np.testing.assert_allclose(grid_project([2, 0], UNIT_DISK), [1, 0], atol=1e-2)


def test_project_sublevel_interior_fixed():
    y = np.array([0.3, -0.2])
    np.testing.assert_array_equal(project_sublevel(y, UNIT_DISK), y)


def test_project_sublevel_ellipse_matches_grid():
    s = SublevelSet(QuadraticFunction(np.diag([2.0, 1.0]), [1, 0], -1.0))
    p = project_sublevel([-2, 0], s)
    np.testing.assert_allclose(p, grid_project([-2, 0], s), atol=1e-2)
    # the ellipse reaches x = 0 on the axis, the nearest point to (-2, 0)
    np.testing.assert_allclose(p, [0, 0], atol=1e-10)


def test_project_sublevel_empty():
    with pytest.raises(InfeasibleSetError):
        project_sublevel([0, 0], SublevelSet(QuadraticFunction(np.eye(2), [0, 0], 0.1)))


def test_project_sublevel_single_point_set():
    s = SublevelSet(QuadraticFunction(np.eye(2), [1, 1], 0.0))
    np.testing.assert_array_equal(project_sublevel([3, -2], s), [1, 1])


def test_intersection_member_fixed():
    s = IntersectionSet((BallSet([0, 0], 1), BallSet([0.5, 0], 1)))
    np.testing.assert_array_equal(project_intersection([0.2, 0.1], s), [0.2, 0.1])


def test_intersection_two_disks():
    s = IntersectionSet((BallSet([0, 0], 1), BallSet([1.5, 0], 1)))
    np.testing.assert_allclose(project_intersection([-2, 0], s), [0.5, 0], atol=1e-9)
    np.testing.assert_allclose(grid_project([-2, 0], s), [0.5, 0], atol=1e-2)


def test_intersection_thin_ellipse_and_ball(rng):
    thin = SublevelSet(QuadraticFunction(np.diag([50.0, 0.5]), [0, 0], -0.5))
    s = IntersectionSet((thin, BallSet([0.3, 0.2], 1.0)))
    for _ in range(5):
        y = rng.uniform(-2, 2, 2)
        np.testing.assert_allclose(project_intersection(y, s), grid_project(y, s), atol=1e-2)


def test_intersection_dimension_mismatch():
    with pytest.raises(StructuralError):
        IntersectionSet((BallSet([0, 0], 1), BallSet([0, 0, 0], 1)))
    with pytest.raises(UsageError):
        IntersectionSet(())


def test_dykstra_nonconvergence_carries_iterate():
    s = IntersectionSet((BallSet([0, 0], 1), BallSet([1.9, 0], 1), BallSet([0.95, 0.5], 1)))
    with pytest.raises(NumericalError) as err:
        project_intersection([0.95, -3.0], s, tol=1e-15, max_iter=2)
    assert err.value.iterate is not None and err.value.residual is not None


def test_ball_sublevel_disjoint():
    s = BallSublevelSet(BallSet([3, 0], 1), UNIT_DISK)
    with pytest.raises(InfeasibleSetError):
        s.project([4, 0])


@pytest.mark.parametrize(
    "g, ball, x, val",
    [
        (QuadraticFunction(np.eye(2), [0.2, 0.1], -1.0), BallSet([0, 0], 1), [0.2, 0.1], -1.0),
        (QuadraticFunction(np.eye(2), [3, 0]), BallSet([0, 0], 1), [1, 0], 2.0),
        (QuadraticFunction(np.eye(2), [3, 0], -0.5), BallSet([0, 0], 1), [1, 0], 1.5),
    ],
)
def test_min_over_ball_examples(g, ball, x, val):
    xm, vm = min_over_ball(g, ball)
    np.testing.assert_allclose(xm, x, atol=1e-10)
    assert vm == pytest.approx(val, abs=1e-10)


def test_emptiness_flag():
    g = QuadraticFunction(np.eye(2), [3, 0], -0.5)
    assert is_empty_local(g, BallSet([0, 0], 1))
    assert not is_empty_local(g, BallSet([0, 0], 2.5))


# -- randomized instances ------------------------------------------------------------


def _random_ball_sublevel(rng, n=2):
    g = random_quadratic(rng, n, offset=-rng.uniform(0.2, 2.0), lo=0.5, hi=4.0)
    a = g.center + rng.standard_normal(n) * 1.5
    dist = nearest_distance_to_sublevel(a, g) + rng.uniform(0.05, 1.5)
    return BallSublevelSet(BallSet(a, dist), SublevelSet(g))


@st.composite
def ball_sublevel_sets(draw, n=2):
    return _random_ball_sublevel(np.random.default_rng(draw(st.integers(0, 2**32 - 1))), n)


@settings(max_examples=100, deadline=None)
@given(ball_sublevel_sets(), st.integers(0, 2**32 - 1))
def test_project_sublevel_kkt(s, seed):
    y = np.random.default_rng(seed).standard_normal(2) * 4
    g = s.sublevel.g
    p = project_sublevel(y, s.sublevel)
    if g(y) <= 0:
        np.testing.assert_array_equal(p, y)
        return
    assert abs(g(p)) <= 1e-8
    d, n = y - p, g.grad(p)
    cos = d @ n / (np.linalg.norm(d) * np.linalg.norm(n))
    assert np.arccos(min(cos, 1.0)) <= 1e-6


@settings(max_examples=100, deadline=None)
@given(ball_sublevel_sets(n=3), st.integers(0, 2**32 - 1))
def test_ball_sublevel_exact_matches_dykstra(s, seed):
    y = np.random.default_rng(seed).standard_normal(3) * 4
    exact = s.project(y)
    dyk = project_intersection(y, IntersectionSet(s.parts), tol=1e-13, max_iter=200_000)
    assert s.contains(exact, 1e-9)
    assert np.linalg.norm(exact - dyk) <= 1e-6


@settings(max_examples=100, deadline=None)
@given(ball_sublevel_sets(), st.integers(0, 2**32 - 1))
def test_membership_after_projection(s, seed):
    y = np.random.default_rng(seed).standard_normal(2) * 4
    assert s.sublevel.g(project_sublevel(y, s.sublevel)) <= 1e-8
    assert np.linalg.norm(project_ball(y, s.ball) - s.ball.center) <= s.ball.radius + 1e-12


@settings(max_examples=100, deadline=None)
@given(ball_sublevel_sets())
def test_shortcut_identity(s):
    """Projecting the ball's own center onto ball ∩ sublevel gives the plain sublevel projection."""
    a = s.ball.center
    np.testing.assert_allclose(s.project(a), project_sublevel(a, s.sublevel), atol=1e-12)
    np.testing.assert_allclose(
        project_intersection(a, IntersectionSet(s.parts)), project_sublevel(a, s.sublevel), atol=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(ball_sublevel_sets())
def test_emptiness_cross_check(s):
    g, ball = s.sublevel.g, s.ball
    for r in (0.5 * ball.radius, ball.radius):
        b = BallSet(ball.center, r)
        far = nearest_distance_to_sublevel(b.center, g) > r
        if abs(nearest_distance_to_sublevel(b.center, g) - r) > 1e-9:
            assert is_empty_local(g, b) == far
