"""
Unit tests for the min-max objectives and simplex projection
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.exceptions import DimensionError, ValidationError
from core.objective import (
    QuadraticProblem,
    RobustLogisticRegression,
    RobustLogRegParams,
    estimate_gradient_variance,
    project_simplex,
    quad_problem,
    rlr_grad_x,
    rlr_grad_y,
    rlr_local_value,
)


def _finite_difference(fn, point: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.empty_like(point)
    for k in range(point.shape[0]):
        step = np.zeros_like(point)
        step[k] = h
        grad[k] = (fn(point + step) - fn(point - step)) / (2 * h)
    return grad


@pytest.mark.unit
class TestProjectSimplex:
    """Euclidean projection onto the probability simplex"""

    def test_symmetric_point(self):
        np.testing.assert_allclose(project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3)

    def test_feasible_point_unchanged(self):
        np.testing.assert_allclose(project_simplex([1.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    def test_threshold_example(self):
        np.testing.assert_allclose(project_simplex([0.8, 0.4]), [0.7, 0.3])

    def test_negative_entries_clipped(self):
        np.testing.assert_allclose(project_simplex([-1.0, 2.0]), [0.0, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.integers(1, 8), elements=st.floats(-10, 10)))
    def test_lands_in_simplex(self, v):
        y = project_simplex(v)
        assert np.all(y >= 0)
        assert y.sum() == pytest.approx(1.0, abs=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, 4, elements=st.floats(-5, 5)),
        arrays(np.float64, 4, elements=st.floats(-5, 5)),
    )
    def test_non_expansive(self, u, v):
        gap = np.linalg.norm(project_simplex(u) - project_simplex(v))
        assert gap <= np.linalg.norm(u - v) + 1e-9


def _one_sample_problem(a, b, lambda1=1.0, lambda2=0.001, alpha=10.0):
    params = RobustLogRegParams(lambda1=lambda1, lambda2=lambda2, alpha=alpha)
    return RobustLogisticRegression([np.array([a], dtype=float)], [np.array([b], dtype=float)], params)


@pytest.mark.unit
class TestRobustLogisticRegression:
    """Values and gradients of the robust logistic regression objective"""

    def test_value_at_origin(self, rlr):
        y = np.full(rlr.m, 1.0 / rlr.m)
        value = rlr.local_value(0, np.zeros(rlr.d1), y)
        assert value == pytest.approx(rlr.m * y[0] * math.log(2.0))

    def test_uniform_weights_have_zero_divergence(self, rlr):
        assert rlr.divergence(np.full(rlr.m, 1.0 / rlr.m)) == pytest.approx(0.0, abs=1e-15)

    def test_scalar_value(self):
        problem = _one_sample_problem([1.0], 1.0)
        value = rlr_local_value(problem, 0, [1.0], [1.0])
        expected = math.log1p(math.exp(-1.0)) + 0.001 * 10.0 / 11.0
        assert value == pytest.approx(expected, rel=1e-12)

    def test_scalar_grad_x(self):
        problem = _one_sample_problem([2.0], -1.0)
        x = np.array([0.5])
        grad = rlr_grad_x(problem, 0, x, [1.0])
        # d/dx log(1 + exp(-b a x)) = -b a sigmoid(-b a x), plus the regularizer term
        expected = 2.0 / (1.0 + math.exp(-1.0)) + problem.regularizer_grad(x)[0]
        assert grad[0] == pytest.approx(expected, rel=1e-12)

    def test_regularizer_gradient_bound(self):
        problem = _one_sample_problem([1.0], 1.0)
        grid = np.linspace(-3.0, 3.0, 60001)
        peak = np.max(np.abs(problem.regularizer_grad(grid)))
        bound = 0.001 * math.sqrt(27.0 * 10.0 / 64.0)
        assert peak == pytest.approx(bound, rel=1e-5)
        assert problem.meta.L_g == pytest.approx(1.0 + 2.0 + bound, rel=1e-12)

    def test_grad_x_vanishes_without_weight(self, rlr):
        grad = rlr.grad_x(0, np.zeros(rlr.d1), np.array([0.0, 0.5, 0.5]))
        np.testing.assert_allclose(grad, 0.0)

    def test_grad_y_two_agents(self):
        params = RobustLogRegParams(lambda1=0.25)
        problem = RobustLogisticRegression(
            [np.array([[1.0]]), np.array([[1.0]])],
            [np.array([1.0]), np.array([-1.0])],
            params,
        )
        grad = rlr_grad_y(problem, 0, [0.0], [0.75, 0.25])
        np.testing.assert_allclose(grad, [2 * math.log(2.0) - 0.25, 0.25], rtol=1e-12)

    def test_grad_y_at_uniform_weights(self, rlr):
        x = np.full(rlr.d1, 0.3)
        grad = rlr.grad_y(1, x, np.full(rlr.m, 1.0 / rlr.m))
        expected = np.zeros(rlr.m)
        expected[1] = rlr.m * rlr.batch_loss(1, x)
        np.testing.assert_allclose(grad, expected, atol=1e-14)

    def test_finite_differences(self, rlr, rng):
        for _ in range(50):
            agent = int(rng.integers(rlr.m))
            x = rng.standard_normal(rlr.d1)
            y = project_simplex(rng.random(rlr.m))
            gx = _finite_difference(lambda v: rlr.local_value(agent, v, y), x)
            gy = _finite_difference(lambda v: rlr.local_value(agent, x, v, check=False), y)
            np.testing.assert_allclose(rlr.grad_x(agent, x, y), gx, rtol=1e-5, atol=1e-7)
            np.testing.assert_allclose(rlr.grad_y(agent, x, y), gy, rtol=1e-5, atol=1e-7)

    def test_average_of_locals_matches_global(self, rlr, rng):
        x = rng.standard_normal(rlr.d1)
        y = project_simplex(rng.random(rlr.m))
        assert rlr.value(x, y) == pytest.approx(rlr.global_value(x, y), rel=1e-12)

    def test_oracle_matches_full_gradient(self, rlr, rng):
        x = rng.standard_normal(rlr.d1)
        y = project_simplex(rng.random(rlr.m))
        np.testing.assert_allclose(rlr.grad_y_oracle(x)(y), rlr.full_grad_y(x, y), atol=1e-12)

    def test_scores_are_linear(self, rlr, synth_data, rng):
        x = rng.standard_normal(rlr.d1)
        np.testing.assert_allclose(rlr.scores(synth_data.features, x), synth_data.features @ x)

    def test_y_outside_simplex_rejected(self, rlr):
        with pytest.raises(ValidationError):
            rlr.local_value(0, np.zeros(rlr.d1), np.array([0.5, 0.5, 0.5]))

    def test_empty_batch_rejected(self, rlr):
        with pytest.raises(ValidationError, match="nonempty"):
            rlr.grad_x(0, np.zeros(rlr.d1), np.full(3, 1 / 3), np.array([], dtype=int))

    def test_default_lambda1(self, rlr):
        assert rlr.lambda1 == pytest.approx(1.0 / 9.0)
        assert rlr.meta.mu == pytest.approx(1.0)

    def test_params_reject_nonpositive(self):
        with pytest.raises(ValueError, match="alpha must be positive"):
            RobustLogRegParams(alpha=0)

    def test_mismatched_blocks(self):
        with pytest.raises(DimensionError):
            RobustLogisticRegression([np.ones((2, 1))], [np.ones(3)])


@pytest.mark.unit
class TestQuadraticProblem:
    """Quadratic test problem with a known saddle point"""

    def test_saddle_point_is_stationary(self, quad):
        np.testing.assert_allclose(quad.full_grad_x(quad.x_star, quad.y_star), 0.0, atol=1e-10)
        np.testing.assert_allclose(quad.full_grad_y(quad.x_star, quad.y_star), 0.0, atol=1e-10)

    def test_scalar_blocks(self):
        problem = QuadraticProblem.from_blocks([[1.0]], [[0.0]], [[1.0]], [-1.0], [1.0])
        np.testing.assert_allclose(problem.x_star, [1.0])
        np.testing.assert_allclose(problem.y_star, [1.0])

    def test_strong_concavity(self, quad):
        assert quad.meta.mu >= 1.0 - 1e-9
        assert quad.meta.kappa >= 1.0

    def test_best_response(self, quad, rng):
        x = rng.standard_normal(quad.d1)
        y = quad.best_response(x)
        np.testing.assert_allclose(quad.full_grad_y(x, y), 0.0, atol=1e-10)

    def test_finite_differences(self, noisy_quad, rng):
        for _ in range(50):
            agent = int(rng.integers(noisy_quad.m))
            batch = rng.integers(0, noisy_quad.shard_size(agent), size=3)
            x = rng.standard_normal(noisy_quad.d1)
            y = rng.standard_normal(noisy_quad.d2)
            gx = _finite_difference(lambda v: noisy_quad.local_value(agent, v, y, batch), x)
            gy = _finite_difference(lambda v: noisy_quad.local_value(agent, x, v, batch), y)
            np.testing.assert_allclose(noisy_quad.grad_x(agent, x, y, batch), gx, rtol=1e-5, atol=1e-6)
            np.testing.assert_allclose(noisy_quad.grad_y(agent, x, y, batch), gy, rtol=1e-5, atol=1e-6)

    def test_full_shard_gradient_is_exact(self, noisy_quad, rng):
        x = rng.standard_normal(noisy_quad.d1)
        y = rng.standard_normal(noisy_quad.d2)
        mean = np.mean([noisy_quad.grad_x(i, x, y) for i in range(noisy_quad.m)], axis=0)
        np.testing.assert_allclose(mean, noisy_quad.full_grad_x(x, y), atol=1e-12)

    def test_samples_are_noisy(self, noisy_quad):
        x = np.zeros(noisy_quad.d1)
        y = np.zeros(noisy_quad.d2)
        assert estimate_gradient_variance(noisy_quad, x, y) > 0.0

    def test_noise_free_variance_is_zero(self, quad):
        x = np.zeros(quad.d1)
        y = np.zeros(quad.d2)
        assert estimate_gradient_variance(quad, x, y, draws=8) == pytest.approx(0.0, abs=1e-20)

    def test_deterministic(self):
        a = quad_problem(3, 2, 2, seed=5)
        b = quad_problem(3, 2, 2, seed=5)
        np.testing.assert_array_equal(a.A, b.A)
        np.testing.assert_array_equal(a.x_star, b.x_star)

    def test_rejects_zero_dimension(self):
        with pytest.raises(ValidationError):
            quad_problem(0, 2, 2, seed=0)

    def test_agent_out_of_range(self, quad):
        with pytest.raises(ValidationError):
            quad.grad_x(quad.m, np.zeros(quad.d1), np.zeros(quad.d2))
