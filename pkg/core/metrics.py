"""
Evaluation quantities: AUROC, consensus error, stationarity of the network mean
"""

from typing import Optional, Tuple

import numpy as np
from scipy.stats import rankdata

from .exceptions import DimensionError, ValidationError
from .models import StationarityConfig
from .objective import MinMaxProblem


def auroc(scores, labels) -> float:
    """
    Mann-Whitney estimate of P(score_pos > score_neg), ties counted 1/2

    Args:
        scores: Real scores
        labels: Labels in {-1, +1}

    Returns:
        AUROC in [0, 1]
    """
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels, dtype=float).ravel()
    if s.shape != y.shape:
        raise DimensionError("scores and labels differ in length", expected=y.shape, actual=s.shape)

    pos = y > 0
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("auroc needs both classes present", field="labels")

    ranks = rankdata(s, method='average')
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _spread(stacked: np.ndarray) -> float:
    centered = stacked - stacked.mean(axis=0, keepdims=True)
    return float(np.sum(centered * centered))


def consensus_error(network) -> Tuple[float, float]:
    """(||X - X_bar||_F^2, ||Y - Y_bar||_F^2) of the stacked agent iterates"""
    return _spread(network.X), _spread(network.Y)


def best_response_estimate(
    problem: MinMaxProblem,
    x_bar: np.ndarray,
    cfg: StationarityConfig,
    y_start: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Exact argmax_y when the problem has one, else projected gradient ascent"""
    exact = problem.best_response(x_bar)
    if exact is not None:
        return exact

    oracle = problem.grad_y_oracle(x_bar)
    eta = cfg.inner_eta if cfg.inner_eta is not None else 1.0 / problem.meta.L
    y = problem.project_y(np.array(y_start if y_start is not None else problem.default_y0(), dtype=float))
    for _ in range(cfg.inner_steps):
        y_next = problem.project_y(y + eta * oracle(y))
        # gradient mapping; equals ||grad_y f|| without a constraint
        mapping = np.linalg.norm(y_next - y) / eta
        y = y_next
        if mapping <= cfg.tol:
            break
    return y


def stationarity_norm(
    problem: MinMaxProblem,
    x_bar: np.ndarray,
    cfg: Optional[StationarityConfig] = None,
    y_start: Optional[np.ndarray] = None,
) -> float:
    """||grad_x f(x_bar, y_hat)|| with y_hat approximating argmax_y f(x_bar, y)"""
    cfg = cfg or StationarityConfig()
    y_hat = best_response_estimate(problem, x_bar, cfg, y_start)
    return float(np.linalg.norm(problem.full_grad_x(x_bar, y_hat)))
