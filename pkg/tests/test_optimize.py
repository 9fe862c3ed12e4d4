import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from localoco import BallSet, IntersectionSet, OptimizeRequest, QuadraticFunction, UsageError, optimize_step
from localoco.optimize import StepSizeWarning, contraction_factor, projected_point

from oracles import random_quadratic, region_argmin

HALF_NORM_SQ = QuadraticFunction(np.eye(2), [0, 0])
BIG = BallSet([0, 0], 10)


def test_full_step_reaches_minimizer():
    x = optimize_step(OptimizeRequest(HALF_NORM_SQ, BIG, mu=1.0, start=[4, 0], alpha=1.0))
    np.testing.assert_allclose(x, [0, 0], atol=1e-15)


def test_half_step():
    x = optimize_step(OptimizeRequest(HALF_NORM_SQ, BIG, mu=1.0, start=[4, 0], alpha=0.5))
    np.testing.assert_allclose(x, [2, 0], atol=1e-15)


def test_fixed_point_at_constrained_minimizer():
    region = BallSet([3, 0], 1)
    x = optimize_step(OptimizeRequest(HALF_NORM_SQ, region, mu=2.0, start=[2, 0]))
    np.testing.assert_allclose(x, [2, 0], atol=1e-15)


def test_plain_gradient_callable():
    x = optimize_step(OptimizeRequest(lambda z: np.asarray(z), BIG, mu=1.0, start=[4, 0], alpha=0.5))
    np.testing.assert_allclose(x, [2, 0])


def test_small_mu_warns():
    h = QuadraticFunction(np.diag([4.0, 1.0]), [0, 0])
    with pytest.warns(StepSizeWarning):
        optimize_step(OptimizeRequest(h, BIG, mu=1.0, start=[1, 1]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        optimize_step(OptimizeRequest(h, BIG, mu=4.0, start=[1, 1]))


def test_outside_start_projected_or_rejected():
    region = BallSet([0, 0], 1)
    x, _ = projected_point(OptimizeRequest(HALF_NORM_SQ, region, mu=1.0, start=[3, 0]))
    np.testing.assert_allclose(x, [1, 0])
    x, _ = projected_point(OptimizeRequest(HALF_NORM_SQ, region, mu=1.0, start=[1 + 1e-10, 0]))
    assert x[0] == 1 + 1e-10
    with pytest.raises(UsageError):
        optimize_step(OptimizeRequest(HALF_NORM_SQ, region, mu=1.0, start=[3, 0], strict=True))


@pytest.mark.parametrize("kw", [{"mu": 0.0}, {"mu": -1.0}, {"alpha": 0.0}, {"alpha": 1.2}])
def test_request_validation(kw):
    with pytest.raises(UsageError):
        OptimizeRequest(**{"h": HALF_NORM_SQ, "region": BIG, "mu": 1.0, "start": [0, 0], **kw})


def test_contraction_factor():
    assert contraction_factor(1.0, 4.0, 0.5) == pytest.approx(np.sqrt(1 - 0.125))
    assert contraction_factor(1.0, 1.0, 1.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1.0), st.floats(1.0, 4.0))
def test_step_stays_in_region_and_contracts(seed, alpha, mu_scale):
    rng = np.random.default_rng(seed)
    h = random_quadratic(rng, 2, scale=3.0)
    c1 = rng.standard_normal(2)
    theta = rng.uniform(0, 2 * np.pi)
    c2 = c1 + rng.uniform(0.0, 2.5) * np.array([np.cos(theta), np.sin(theta)])
    region = IntersectionSet((BallSet(c1, 1.5), BallSet(c2, 1.5)))
    start = region.project(rng.standard_normal(2) * 2)
    mu = mu_scale * h.smoothness
    x_star = region_argmin(h, region)
    x_next = optimize_step(OptimizeRequest(h, region, mu, start, alpha))
    assert region.contains(x_next, 1e-8)
    c = contraction_factor(h.strong_convexity, mu, alpha)
    assert np.linalg.norm(x_star - x_next) <= c * np.linalg.norm(x_star - start) + 1e-9
