"""
Unit tests for AUROC, consensus error and stationarity
"""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.exceptions import DimensionError, ValidationError
from core.metrics import auroc, best_response_estimate, consensus_error, stationarity_norm
from core.models import StationarityConfig


class _Stacked:
    def __init__(self, X, Y):
        self.X = np.asarray(X, dtype=float)
        self.Y = np.asarray(Y, dtype=float)


@pytest.mark.unit
class TestAuroc:
    """Ranking quality of classifier scores"""

    def test_perfect_ranking(self):
        assert auroc([0.9, 0.8, 0.1], [1, 1, -1]) == 1.0

    def test_all_ties(self):
        assert auroc([0.3] * 6, [1, -1, 1, -1, 1, -1]) == 0.5

    def test_three_of_four_pairs(self):
        assert auroc([0.9, 0.2, 0.6, 0.4], [1, -1, -1, 1]) == pytest.approx(0.75)

    def test_reversed_scores(self, rng):
        scores = rng.standard_normal(50)
        labels = np.where(rng.random(50) > 0.5, 1.0, -1.0)
        assert auroc(-scores, labels) == pytest.approx(1.0 - auroc(scores, labels))

    def test_monotone_transform_invariance(self, rng):
        scores = rng.standard_normal(40)
        labels = np.where(scores + rng.standard_normal(40) > 0, 1.0, -1.0)
        assert auroc(np.exp(scores) * 3.0 + 1.0, labels) == pytest.approx(auroc(scores, labels))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.tuples(st.integers(-1000, 1000), st.booleans()), min_size=2, max_size=40))
    def test_invariant_under_increasing_maps(self, pairs):
        scores = np.array([s for s, _ in pairs], dtype=float)
        labels = np.array([1.0 if positive else -1.0 for _, positive in pairs])
        assume(0 < np.sum(labels > 0) < labels.size)
        base = auroc(scores, labels)
        assert 0.0 <= base <= 1.0
        assert auroc(scores ** 3 + 2.0 * scores, labels) == base
        assert auroc(0.5 * scores - 40.0, labels) == base

    def test_single_class(self):
        with pytest.raises(ValidationError):
            auroc([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            auroc([0.1, 0.2, 0.3], [1, -1])


@pytest.mark.unit
class TestConsensusError:
    """Spread of agent iterates around their mean"""

    def test_identical_agents(self):
        assert consensus_error(_Stacked(np.ones((3, 2)), np.ones((3, 4)))) == (0.0, 0.0)

    def test_two_agents(self):
        ex, ey = consensus_error(_Stacked([[0.0], [2.0]], [[1.0], [1.0]]))
        assert ex == pytest.approx(2.0)
        assert ey == 0.0

    @settings(max_examples=60, deadline=None)
    @given(
        arrays(np.float64, (4, 3), elements=st.floats(-10, 10)),
        arrays(np.float64, 3, elements=st.floats(-10, 10)),
    )
    def test_invariant_under_common_shift(self, X, shift):
        Y = np.zeros((4, 2))
        ex, _ = consensus_error(_Stacked(X, Y))
        shifted, _ = consensus_error(_Stacked(X + shift, Y))
        permuted, _ = consensus_error(_Stacked(X[::-1], Y))
        assert shifted == pytest.approx(ex, rel=1e-9, abs=1e-9)
        assert permuted == pytest.approx(ex, rel=1e-9, abs=1e-9)

    def test_one_round_of_uniform_mixing(self, rng):
        X = rng.standard_normal((4, 3))
        W = np.full((4, 4), 0.25)
        ex, _ = consensus_error(_Stacked(W @ X, np.zeros((4, 1))))
        assert ex == pytest.approx(0.0, abs=1e-25)


@pytest.mark.unit
class TestStationarity:
    """||grad Phi(x_bar)|| through the inner maximization"""

    def test_zero_at_saddle(self, quad):
        assert stationarity_norm(quad, quad.x_star) == pytest.approx(0.0, abs=1e-9)

    def test_matches_closed_form(self, quad, rng):
        x = rng.standard_normal(quad.d1)
        y = np.linalg.solve(quad.C_bar, quad.B_bar.T @ x + quad.q_bar)
        expected = np.linalg.norm(quad.full_grad_x(x, y))
        assert stationarity_norm(quad, x) == pytest.approx(expected, rel=1e-10)

    def test_inner_ascent_on_simplex(self, rlr, rng):
        x = rng.standard_normal(rlr.d1)
        cfg = StationarityConfig(inner_steps=2000, tol=1e-12)
        y = best_response_estimate(rlr, x, cfg)
        assert np.all(y >= 0) and y.sum() == pytest.approx(1.0)
        eta = 1.0 / rlr.meta.L
        step = rlr.project_y(y + eta * rlr.grad_y_oracle(x)(y))
        np.testing.assert_allclose(step, y, atol=1e-8)

    def test_inner_ascent_improves_value(self, rlr, rng):
        x = rng.standard_normal(rlr.d1)
        y0 = rlr.default_y0()
        y = best_response_estimate(rlr, x, StationarityConfig(inner_steps=500))
        assert rlr.global_value(x, y) >= rlr.global_value(x, y0) - 1e-12

    def test_warm_start(self, rlr, rng):
        x = rng.standard_normal(rlr.d1)
        cfg = StationarityConfig(inner_steps=3000, tol=1e-12)
        cold = stationarity_norm(rlr, x, cfg)
        warm = stationarity_norm(rlr, x, cfg, y_start=np.array([0.9, 0.05, 0.05]))
        assert warm == pytest.approx(cold, rel=1e-5)

    def test_lipschitz_in_x(self, quad, rng):
        # grad Phi is (L + L kappa)-Lipschitz
        bound = quad.meta.L * (1.0 + quad.meta.kappa)
        for _ in range(5):
            a = rng.standard_normal(quad.d1)
            b = rng.standard_normal(quad.d1)
            gap = abs(stationarity_norm(quad, a) - stationarity_norm(quad, b))
            assert gap <= bound * np.linalg.norm(a - b) + 1e-9

    def test_config_validation(self):
        with pytest.raises(ValueError):
            StationarityConfig(inner_steps=0)
        with pytest.raises(ValueError):
            StationarityConfig(inner_eta=-1.0)
