"""
Noise calibration and moments-accountant primitives
"""

import math
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from loguru import logger

from .exceptions import PrivacyError
from .models import HyperParams, PrivacyBudget

LAMBDA_MAX = 64

MomentFn = Callable[[int], float]


def _log_inv_gamma(gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise PrivacyError(
            "gamma must lie in (0, 1)",
            details={'gamma': gamma},
            suggestion="log(1/gamma) must be positive",
        )
    return math.log(1.0 / gamma)


def calibrate_sigma(budget: PrivacyBudget, T: int, m: int) -> Tuple[float, float]:
    """
    Gaussian noise level making T rounds (theta, gamma)-DP

    sigma = c L_g sqrt((8T(T+1)(2T+1)/3 + 4T) log(1/gamma)) / (2 theta sqrt(m))

    Args:
        budget: Privacy budget
        T: Number of iterations
        m: Number of agents

    Returns:
        (sigma_x, sigma_y), equal by construction
    """
    if T < 1 or m < 1:
        raise PrivacyError("T and m must be at least 1", details={'T': T, 'm': m})
    log_term = _log_inv_gamma(budget.gamma)
    rounds = 8.0 * T * (T + 1) * (2 * T + 1) / 3.0 + 4.0 * T
    sigma = budget.c * budget.L_g * math.sqrt(rounds * log_term) / (2.0 * budget.theta * math.sqrt(m))
    return sigma, sigma


def renyi_gaussian(mu_a, mu_b, sigma: float, rho: float) -> float:
    """Order-rho Renyi divergence between N(mu_a, sigma^2 I) and N(mu_b, sigma^2 I)"""
    if rho <= 1.0:
        raise PrivacyError("rho must exceed 1", details={'rho': rho})
    if sigma < 0.0:
        raise PrivacyError("sigma must be non-negative", details={'sigma': sigma})
    diff = np.asarray(mu_a, dtype=float) - np.asarray(mu_b, dtype=float)
    sq = float(diff @ diff) if diff.ndim else float(diff * diff)
    if sigma == 0.0:
        return 0.0 if sq == 0.0 else math.inf
    return rho * sq / (2.0 * sigma ** 2)


def compose_moments(per_step_alpha: Iterable[float]) -> float:
    """Moments add across adaptive compositions"""
    values = list(per_step_alpha)
    if any(a < 0 for a in values):
        raise PrivacyError("moment bounds must be non-negative")
    return float(math.fsum(values))


def tail_bound_gamma(alpha: MomentFn, theta: float, lambda_max: int = LAMBDA_MAX) -> float:
    """
    min over integer lambda in [1, lambda_max] of exp(alpha(lambda) - lambda theta)

    Returns:
        gamma clamped to (0, 1]
    """
    if lambda_max < 1:
        raise PrivacyError("lambda_max must be at least 1", details={'lambda_max': lambda_max})
    exponent = min(alpha(lam) - lam * theta for lam in range(1, lambda_max + 1))
    gamma = math.exp(min(exponent, 0.0))
    return max(gamma, np.finfo(float).tiny)


def gaussian_moment(lam: int, sensitivity: float, sigma: float) -> float:
    """Log moment of the Gaussian mechanism: lambda(lambda+1) Delta^2 / (2 sigma^2)"""
    if sigma <= 0.0:
        return math.inf
    return lam * (lam + 1) * sensitivity ** 2 / (2.0 * sigma ** 2)


def accountant_gamma(
    sigma: float,
    sensitivity: float,
    T: int,
    theta: float,
    lambda_max: int = LAMBDA_MAX,
) -> float:
    """gamma achieved by T Gaussian steps at noise sigma, via compose + tail bound"""
    def alpha(lam: int) -> float:
        return compose_moments([gaussian_moment(lam, sensitivity, sigma)] * T)

    return tail_bound_gamma(alpha, theta, lambda_max)


def lipschitz_bound_G(L: float, beta_x: float) -> float:
    """G <= L + (1 - beta) G  gives  G <= L / beta"""
    if not L > 0:
        raise PrivacyError("L must be positive", details={'L': L})
    if not 0.0 < beta_x <= 1.0:
        raise PrivacyError(
            "beta_x must lie in (0, 1]",
            details={'beta_x': beta_x},
            suggestion="The momentum bound is undefined at beta_x = 0",
        )
    return L / beta_x


def _schedule(
    beta_x: float,
    T: float,
    epsilon: float,
    kappa: float,
    lam: float,
    L: float,
    shard_size: Optional[int],
) -> HyperParams:
    gap = (1.0 - lam) ** 2
    b0 = math.ceil(20.0 * kappa * epsilon / beta_x)
    if shard_size is not None:
        b0 = min(b0, shard_size)
    return HyperParams(
        eta_x=gap * beta_x / (750.0 * kappa ** 3 * L * epsilon),
        eta_y=gap * beta_x / (75.0 * kappa * L * epsilon),
        beta_x=beta_x,
        beta_y=beta_x / (25.0 * kappa ** 2),
        b0=max(1, b0),
        batch=1,
        T=math.ceil(T),
    )


def _check_schedule_inputs(epsilon: float, kappa: float, lam: float) -> None:
    if not epsilon > 0:
        raise PrivacyError("epsilon must be positive", details={'epsilon': epsilon})
    if kappa < 1.0:
        raise PrivacyError("kappa must be at least 1", details={'kappa': kappa})
    if not 0.0 <= lam < 1.0:
        raise PrivacyError(
            "spectral gap lambda must lie in [0, 1)",
            details={'lambda': lam},
            suggestion="The communication graph must be connected",
        )


def theorem1_schedule(
    epsilon: float,
    kappa: float,
    lam: float,
    m: int,
    L: float,
    shard_size: Optional[int] = None,
) -> HyperParams:
    """
    Step sizes, momentum weights, b0 and T reaching an epsilon-stationary point

    Args:
        epsilon: Target accuracy
        kappa: Condition number L / mu
        lam: Spectral gap of the mixing matrix
        m: Number of agents
        L: Gradient Lipschitz constant
        shard_size: Upper clamp for b0

    Returns:
        HyperParams preset (noise fields left at zero)
    """
    _check_schedule_inputs(epsilon, kappa, lam)
    beta_x = epsilon * min(1.0, m * epsilon) / 20.0
    T = 1500.0 * kappa ** 3 / ((1.0 - lam) ** 2 * epsilon * beta_x)
    return _schedule(beta_x, T, epsilon, kappa, lam, L, shard_size)


def speedup_schedule(
    T0: int,
    epsilon: float,
    kappa: float,
    lam: float,
    m: int,
    L: float,
    shard_size: Optional[int] = None,
) -> HyperParams:
    """Horizon-driven preset: T = 30000 kappa^3 T0 / (1-lambda)^2 with T0 >= 10 m^2"""
    _check_schedule_inputs(epsilon, kappa, lam)
    if T0 < 10 * m ** 2:
        raise PrivacyError(
            "T0 must be at least 10 m^2",
            details={'T0': T0, 'm': m},
        )
    beta_x = m ** (1.0 / 3.0) / (20.0 * T0 ** (2.0 / 3.0))
    T = 30000.0 * kappa ** 3 * T0 / (1.0 - lam) ** 2
    return _schedule(beta_x, T, epsilon, kappa, lam, L, shard_size)


def theta_regime_floor(L_g: float, d: int, gamma: float, m: int, epsilon: float) -> float:
    """theta below which the privacy noise dominates the accuracy target (constant 1)"""
    return L_g * math.sqrt(d) * math.sqrt(_log_inv_gamma(gamma)) / (math.sqrt(m) * epsilon ** 4)


def check_theta_regime(budget: PrivacyBudget, d: int, m: int, epsilon: float) -> Optional[str]:
    """
    Report, without enforcing, a theta under the accuracy-coupled floor

    Returns:
        Warning text, or None when theta is in regime
    """
    floor = theta_regime_floor(budget.L_g, d, budget.gamma, m, epsilon)
    if budget.theta >= floor:
        return None
    message = (
        f"theta={budget.theta:g} is below the regime floor {floor:.4g} for "
        f"epsilon={epsilon:g}; the accuracy guarantee does not apply"
    )
    logger.warning(message)
    return message
