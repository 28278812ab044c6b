"""
Unit tests for noise calibration, the moments accountant and step-size presets
"""

import math

import numpy as np
import pytest

from core.exceptions import PrivacyError
from core.models import PrivacyBudget
from core.privacy import (
    accountant_gamma,
    calibrate_sigma,
    check_theta_regime,
    compose_moments,
    gaussian_moment,
    lipschitz_bound_G,
    renyi_gaussian,
    speedup_schedule,
    tail_bound_gamma,
    theorem1_schedule,
    theta_regime_floor,
)


@pytest.mark.unit
class TestCalibrateSigma:
    """Gaussian noise level for a (theta, gamma) budget"""

    def test_single_round_value(self):
        budget = PrivacyBudget(theta=1.0, gamma=math.exp(-1.0))
        sigma_x, sigma_y = calibrate_sigma(budget, T=1, m=1)
        assert sigma_x == pytest.approx(math.sqrt(5.0), abs=1e-12)
        assert sigma_x == sigma_y

    def test_more_agents_halve_noise(self):
        budget = PrivacyBudget(theta=0.5, gamma=1e-4, L_g=3.0)
        one, _ = calibrate_sigma(budget, 100, 1)
        four, _ = calibrate_sigma(budget, 100, 4)
        assert four / one == pytest.approx(0.5, rel=1e-14)

    def test_monotonicity_grid(self):
        Ts = [1, 5, 50, 500]
        thetas = [0.01, 0.1, 1.0, 10.0]
        gammas = [1e-2, 1e-5]
        ms = [1, 10]
        for gamma in gammas:
            for m in ms:
                for theta in thetas:
                    budget = PrivacyBudget(theta=theta, gamma=gamma)
                    sigmas = [calibrate_sigma(budget, T, m)[0] for T in Ts]
                    assert sigmas == sorted(sigmas)
                    assert len(set(sigmas)) == len(sigmas)
                for T in Ts:
                    sigmas = [calibrate_sigma(PrivacyBudget(theta=t, gamma=gamma), T, m)[0] for t in thetas]
                    assert all(a > b for a, b in zip(sigmas, sigmas[1:]))

    def test_smaller_gamma_needs_more_noise(self):
        loose, _ = calibrate_sigma(PrivacyBudget(theta=0.05, gamma=1e-3), 1000, 10)
        tight, _ = calibrate_sigma(PrivacyBudget(theta=0.05, gamma=1e-5), 1000, 10)
        assert tight > loose

    def test_bad_horizon(self):
        with pytest.raises(PrivacyError):
            calibrate_sigma(PrivacyBudget(theta=1.0, gamma=0.1), 0, 1)

    @pytest.mark.parametrize("theta,gamma,message", [
        (-1.0, 0.1, "theta must be positive"),
        (1.0, 1.0, "gamma must lie in"),
    ])
    def test_budget_rejected(self, theta, gamma, message):
        with pytest.raises(ValueError, match=message):
            PrivacyBudget(theta=theta, gamma=gamma)


@pytest.mark.unit
class TestMomentsAccountant:
    """Renyi divergence, composition and the tail bound"""

    def test_renyi_identical_means(self):
        assert renyi_gaussian([1.0, 2.0], [1.0, 2.0], 0.5, 2.0) == 0.0

    def test_renyi_value(self):
        assert renyi_gaussian([0.0], [2.0], 1.0, 3.0) == pytest.approx(6.0)

    def test_renyi_without_noise(self):
        assert renyi_gaussian([0.0], [1.0], 0.0, 2.0) == math.inf

    def test_renyi_order_must_exceed_one(self):
        with pytest.raises(PrivacyError):
            renyi_gaussian([0.0], [1.0], 1.0, 1.0)

    def test_compose_sums(self):
        assert compose_moments([0.1] * 10) == pytest.approx(1.0, abs=1e-15)
        assert compose_moments([]) == 0.0

    def test_compose_rejects_negative(self):
        with pytest.raises(PrivacyError):
            compose_moments([0.1, -0.2])

    def test_tail_bound_of_zero_moment(self):
        assert tail_bound_gamma(lambda lam: 0.0, 0.5, lambda_max=64) == pytest.approx(math.exp(-32.0))

    def test_tail_bound_is_at_most_one(self):
        assert tail_bound_gamma(lambda lam: 100.0 * lam, 0.1) == 1.0

    def test_gaussian_moment(self):
        assert gaussian_moment(2, 1.0, 1.0) == pytest.approx(3.0)
        assert gaussian_moment(2, 1.0, 0.0) == math.inf

    @pytest.mark.parametrize("gamma", [1e-3, 1e-5])
    @pytest.mark.parametrize("T", [1, 3, 10])
    @pytest.mark.parametrize("theta", [1.0, 5.0])
    def test_calibrated_sigma_meets_budget(self, gamma, T, theta):
        budget = PrivacyBudget(theta=theta, gamma=gamma)
        sigma, _ = calibrate_sigma(budget, T, m=1)
        achieved = accountant_gamma(sigma, sensitivity=budget.L_g, T=T, theta=theta)
        assert achieved <= gamma

    def test_more_noise_lowers_gamma(self):
        low = accountant_gamma(5.0, 1.0, 10, 1.0)
        high = accountant_gamma(10.0, 1.0, 10, 1.0)
        assert high < low


@pytest.mark.unit
class TestLipschitzBound:
    """Bound on the momentum estimator norm"""

    def test_value(self):
        assert lipschitz_bound_G(2.0, 0.5) == pytest.approx(4.0)

    def test_full_weight(self):
        assert lipschitz_bound_G(3.0, 1.0) == 3.0

    @pytest.mark.parametrize("beta", [0.0, 1.5])
    def test_rejects_beta(self, beta):
        with pytest.raises(PrivacyError):
            lipschitz_bound_G(1.0, beta)


@pytest.mark.unit
class TestSchedules:
    """Step-size and horizon presets"""

    def test_beta_single_agent(self):
        hp = theorem1_schedule(0.1, kappa=2.0, lam=0.5, m=1, L=1.0)
        assert hp.beta_x == pytest.approx(5e-4)

    def test_beta_many_agents(self):
        hp = theorem1_schedule(0.1, kappa=2.0, lam=0.5, m=100, L=1.0)
        assert hp.beta_x == pytest.approx(5e-3)

    @pytest.mark.parametrize("kappa", [1.0, 3.0, 7.5])
    def test_momentum_ratio(self, kappa):
        hp = theorem1_schedule(0.05, kappa=kappa, lam=0.2, m=4, L=2.0)
        assert hp.beta_y / hp.beta_x == pytest.approx(1.0 / (25.0 * kappa ** 2), rel=1e-12)

    def test_integer_fields_are_ceiled(self):
        hp = theorem1_schedule(0.1, kappa=2.0, lam=0.5, m=10, L=1.0)
        beta_x = 0.1 / 20.0
        assert hp.T == math.ceil(1500.0 * 8.0 / (0.25 * 0.1 * beta_x))
        assert hp.b0 == math.ceil(20.0 * 2.0 * 0.1 / beta_x)
        assert hp.batch == 1

    def test_b0_clamped_to_shard(self):
        hp = theorem1_schedule(0.1, kappa=2.0, lam=0.5, m=10, L=1.0, shard_size=50)
        assert hp.b0 == 50

    def test_step_sizes(self):
        hp = theorem1_schedule(0.1, kappa=1.0, lam=0.0, m=10, L=2.0)
        assert hp.eta_x == pytest.approx(hp.beta_x / (750.0 * 2.0 * 0.1))
        assert hp.eta_y == pytest.approx(hp.beta_x / (75.0 * 2.0 * 0.1))

    @pytest.mark.parametrize("epsilon", [0.01, 0.1, 1.0])
    @pytest.mark.parametrize("kappa", [1.0, 4.0, 30.0])
    @pytest.mark.parametrize("lam", [0.0, 0.5, 0.95])
    @pytest.mark.parametrize("m", [1, 10, 200])
    def test_step_size_ceilings(self, epsilon, kappa, lam, m):
        L = 3.0
        hp = theorem1_schedule(epsilon, kappa=kappa, lam=lam, m=m, L=L)
        assert hp.eta_y <= 1.0 / (5.0 * L)
        assert hp.eta_x <= (1.0 - lam) ** 2 / (500.0 * L)

    @pytest.mark.parametrize("lam", [1.0, 1.2, -0.1])
    def test_rejects_spectral_gap(self, lam):
        with pytest.raises(PrivacyError):
            theorem1_schedule(0.1, kappa=1.0, lam=lam, m=2, L=1.0)

    def test_speedup(self):
        hp = speedup_schedule(1000, 0.1, kappa=1.0, lam=0.0, m=10, L=1.0)
        assert hp.beta_x == pytest.approx(10 ** (1 / 3) / (20.0 * 1000 ** (2 / 3)))
        assert hp.T == math.ceil(30000.0 * 1000)

    def test_speedup_needs_long_warmup(self):
        with pytest.raises(PrivacyError, match="T0"):
            speedup_schedule(999, 0.1, kappa=1.0, lam=0.0, m=10, L=1.0)


@pytest.mark.unit
class TestThetaRegime:
    """Accuracy-coupled lower bound on theta"""

    def test_floor_formula(self):
        floor = theta_regime_floor(1.0, 4, math.exp(-1.0), 4, 1.0)
        assert floor == pytest.approx(1.0)

    def test_warning_below_floor(self):
        budget = PrivacyBudget(theta=0.5, gamma=math.exp(-1.0))
        message = check_theta_regime(budget, d=4, m=4, epsilon=1.0)
        assert message is not None and "below the regime floor" in message

    def test_no_warning_in_regime(self):
        budget = PrivacyBudget(theta=2.0, gamma=math.exp(-1.0))
        assert check_theta_regime(budget, d=4, m=4, epsilon=1.0) is None

    def test_sigma_is_finite_for_realistic_budget(self):
        sigma, _ = calibrate_sigma(PrivacyBudget(theta=0.05, gamma=1 / 30000, L_g=12.0), 5700, 10)
        assert np.isfinite(sigma) and sigma > 0
