"""
Min-max objectives

Each problem is split across m agents: agent i owns f_i and its data shard, and the
global objective is the average (1/m) sum_i f_i.
"""

from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.special import expit

from utils.validators import ArrayValidator
from .exceptions import DimensionError, ValidationError
from .models import ProblemMeta

Batch = Optional[np.ndarray]


def project_simplex(v) -> np.ndarray:
    """
    Euclidean projection onto {y : y_i >= 0, sum y_i = 1} by sort and threshold

    Args:
        v: Vector to project

    Returns:
        Projected vector
    """
    v = ArrayValidator.as_vector(v, "v")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.shape[0] + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    tau = css[cond][-1] / rho
    return np.maximum(v - tau, 0.0)


class MinMaxProblem(ABC):
    """
    Decentralized min-max problem interface

    Subclasses provide per-agent stochastic gradients; batches are arrays of
    indices into the agent's own shard, None meaning the full shard.
    """

    m: int
    d1: int
    d2: int
    meta: ProblemMeta
    simplex_y: bool = False

    @abstractmethod
    def shard_size(self, agent: int) -> int:
        ...

    @abstractmethod
    def local_value(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> float:
        ...

    @abstractmethod
    def grad_x(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        ...

    @abstractmethod
    def grad_y(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        ...

    def shard_sizes(self) -> List[int]:
        return [self.shard_size(i) for i in range(self.m)]

    def default_y0(self) -> np.ndarray:
        if self.simplex_y:
            return np.full(self.d2, 1.0 / self.d2)
        return np.zeros(self.d2)

    def project_y(self, y: np.ndarray) -> np.ndarray:
        return project_simplex(y) if self.simplex_y else y

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean([self.local_value(i, x, y) for i in range(self.m)]))

    def full_grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.mean([self.grad_x(i, x, y) for i in range(self.m)], axis=0)

    def full_grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.mean([self.grad_y(i, x, y) for i in range(self.m)], axis=0)

    def grad_y_oracle(self, x: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        """y -> grad_y f(x, y) for a fixed x"""
        return lambda y: self.full_grad_y(x, y)

    def best_response(self, x: np.ndarray) -> Optional[np.ndarray]:
        """Exact argmax_y f(x, y) when available in closed form"""
        return None

    def _check_batch(self, agent: int, batch: Batch) -> np.ndarray:
        if not 0 <= agent < self.m:
            raise ValidationError("agent index out of range", field="agent", value=agent)
        if batch is None:
            return np.arange(self.shard_size(agent))
        batch = np.asarray(batch, dtype=int)
        if batch.size == 0:
            raise ValidationError("batch must be nonempty", field="batch")
        return batch


class RobustLogRegParams(BaseModel):
    """Divergence weight, regularizer weight and shape; lambda1 defaults to 1/m^2"""
    model_config = ConfigDict(frozen=True, extra='forbid')

    lambda1: Optional[float] = None
    lambda2: float = 0.001
    alpha: float = 10.0

    @field_validator('lambda1', 'lambda2', 'alpha')
    @classmethod
    def _positive(cls, v: Optional[float], info) -> Optional[float]:
        if v is not None and not v > 0:
            raise ValueError(f"{info.field_name} must be positive")
        return v

    def resolved_lambda1(self, m: int) -> float:
        return self.lambda1 if self.lambda1 is not None else 1.0 / m ** 2


class RobustLogisticRegression(MinMaxProblem):
    """
    f_i(x, y) = m y_i l_i(x) - V(y) + g(x)

    l_i is the mean logistic loss over agent i's shard,
    V(y) = lambda1/2 ||m y - 1||^2 and g(x) = lambda2 sum_j alpha x_j^2 / (1 + alpha x_j^2).
    """

    simplex_y = True

    def __init__(
        self,
        features: Sequence[np.ndarray],
        labels: Sequence[np.ndarray],
        params: Optional[RobustLogRegParams] = None,
    ):
        if len(features) != len(labels) or not features:
            raise DimensionError("one feature block and label block per agent required")

        self.features = [np.asarray(a, dtype=float) for a in features]
        self.labels = [np.asarray(b, dtype=float) for b in labels]
        for a, b in zip(self.features, self.labels):
            if a.ndim != 2 or a.shape[0] != b.shape[0] or a.shape[0] == 0:
                raise DimensionError("shard features/labels mismatch", actual=(a.shape, b.shape))

        self.m = len(self.features)
        self.d1 = self.features[0].shape[1]
        self.d2 = self.m
        self.params = params or RobustLogRegParams()
        self.lambda1 = self.params.resolved_lambda1(self.m)
        self.lambda2 = self.params.lambda2
        self.alpha = self.params.alpha
        self.meta = self._estimate_meta()

    @classmethod
    def from_dataset(cls, dataset, sharding, params: Optional[RobustLogRegParams] = None):
        """Build from a Dataset and a Sharding of it"""
        blocks = [dataset.subset(sharding.indices(i)) for i in range(sharding.m)]
        return cls([b.features for b in blocks], [b.labels for b in blocks], params)

    def _estimate_meta(self) -> ProblemMeta:
        """
        L, mu and L_g from the loaded shards

        The regulariser term uses the exact per-coordinate maximum of
        |g'(x_j)| = lambda2 sqrt(27 alpha / 64), not the looser 27 alpha / 256 scale.
        """
        m = self.m
        a_max = max(float(np.max(np.linalg.norm(a, axis=1))) for a in self.features)
        mu = self.lambda1 * m ** 2
        # block bounds: xx (logistic + regularizer curvature), xy coupling, yy penalty
        L = m * a_max ** 2 / 4.0 + 2.0 * self.lambda2 * self.alpha + m * a_max + mu
        L_g = (
            m * a_max
            + self.lambda1 * m * (m + 1)
            + self.lambda2 * np.sqrt(self.d1 * 27.0 * self.alpha / 64.0)
        )
        logger.debug(f"robust logreg meta: L={L:.4f} mu={mu:.4f} L_g={L_g:.4f}")
        return ProblemMeta(L=L, mu=mu, L_g=float(L_g))

    def shard_size(self, agent: int) -> int:
        return self.features[agent].shape[0]

    def _margins(self, agent: int, x: np.ndarray, idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = self.features[agent][idx]
        b = self.labels[agent][idx]
        return a, b, b * (a @ x)

    def batch_loss(self, agent: int, x: np.ndarray, batch: Batch = None) -> float:
        """Mean of log(1 + exp(-b a^T x)) over the batch"""
        idx = self._check_batch(agent, batch)
        _, _, z = self._margins(agent, x, idx)
        return float(np.mean(np.logaddexp(0.0, -z)))

    def divergence(self, y: np.ndarray) -> float:
        r = self.m * y - 1.0
        return 0.5 * self.lambda1 * float(r @ r)

    def regularizer(self, x: np.ndarray) -> float:
        ax2 = self.alpha * x * x
        return self.lambda2 * float(np.sum(ax2 / (1.0 + ax2)))

    def regularizer_grad(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * self.lambda2 * self.alpha * x / (1.0 + self.alpha * x * x) ** 2

    def local_value(
        self,
        agent: int,
        x: np.ndarray,
        y: np.ndarray,
        batch: Batch = None,
        check: bool = True,
    ) -> float:
        if check and not ArrayValidator.in_simplex(y, tol=1e-9):
            raise ValidationError("y must lie in the simplex", field="y")
        loss = self.batch_loss(agent, x, batch)
        return self.m * y[agent] * loss - self.divergence(y) + self.regularizer(x)

    def global_value(self, x: np.ndarray, y: np.ndarray) -> float:
        """sum_i y_i l_i(x) - V(y) + g(x)"""
        losses = np.array([self.batch_loss(i, x) for i in range(self.m)])
        return float(y @ losses) - self.divergence(y) + self.regularizer(x)

    def grad_x(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        idx = self._check_batch(agent, batch)
        a, b, z = self._margins(agent, x, idx)
        weights = -b * expit(-z)
        loss_grad = (weights @ a) / idx.shape[0]
        return self.m * y[agent] * loss_grad + self.regularizer_grad(x)

    def grad_y(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        idx = self._check_batch(agent, batch)
        _, _, z = self._margins(agent, x, idx)
        grad = -self.lambda1 * self.m * (self.m * y - 1.0)
        grad[agent] += self.m * float(np.mean(np.logaddexp(0.0, -z)))
        return grad

    def grad_y_oracle(self, x: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
        # losses do not depend on y; evaluate them once
        losses = np.array([self.batch_loss(i, x) for i in range(self.m)])

        def oracle(y: np.ndarray) -> np.ndarray:
            return losses - self.lambda1 * self.m * (self.m * y - 1.0)

        return oracle

    def scores(self, features: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Classifier scores a^T x"""
        return np.asarray(features, dtype=float) @ x


def rlr_local_value(problem: RobustLogisticRegression, agent: int, x, y) -> float:
    return problem.local_value(agent, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def rlr_grad_x(problem: RobustLogisticRegression, agent: int, x, y, batch: Batch = None) -> np.ndarray:
    return problem.grad_x(agent, np.asarray(x, dtype=float), np.asarray(y, dtype=float), batch)


def rlr_grad_y(problem: RobustLogisticRegression, agent: int, x, y, batch: Batch = None) -> np.ndarray:
    return problem.grad_y(agent, np.asarray(x, dtype=float), np.asarray(y, dtype=float), batch)


class QuadraticProblem(MinMaxProblem):
    """
    f_i(x, y) = 1/2 x^T A_i x + x^T B_i y - 1/2 y^T C_i y + p_i^T x + q_i^T y

    Sample k of agent i shifts the linear terms by (dp_ik, dq_ik); the shifts are
    centered over each shard, so the full-shard gradient is the exact gradient of f_i.
    """

    def __init__(
        self,
        A: np.ndarray,
        B: np.ndarray,
        C: np.ndarray,
        p: np.ndarray,
        q: np.ndarray,
        dp: Optional[np.ndarray] = None,
        dq: Optional[np.ndarray] = None,
    ):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.C = np.asarray(C, dtype=float)
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.m, self.d1, _ = self.A.shape
        self.d2 = self.C.shape[1]
        if self.B.shape != (self.m, self.d1, self.d2) or self.C.shape != (self.m, self.d2, self.d2):
            raise DimensionError("inconsistent quadratic blocks")
        self.dp = np.zeros((self.m, 1, self.d1)) if dp is None else np.asarray(dp, dtype=float)
        self.dq = np.zeros((self.m, 1, self.d2)) if dq is None else np.asarray(dq, dtype=float)

        self.A_bar = self.A.mean(axis=0)
        self.B_bar = self.B.mean(axis=0)
        self.C_bar = self.C.mean(axis=0)
        self.p_bar = self.p.mean(axis=0)
        self.q_bar = self.q.mean(axis=0)
        self.x_star, self.y_star = self._solve_saddle()
        self.meta = self._compute_meta()

    @classmethod
    def from_blocks(cls, A, B, C, p, q) -> "QuadraticProblem":
        """Single agent (2-D blocks) or stacked (3-D blocks) without sample noise"""
        A, B, C = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (A, B, C))
        p, q = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (p, q))
        if A.ndim == 2:
            A, B, C, p, q = A[None], B[None], C[None], p[None], q[None]
        return cls(A, B, C, p, q)

    def _solve_saddle(self) -> Tuple[np.ndarray, np.ndarray]:
        kkt = np.block([
            [self.A_bar, self.B_bar],
            [self.B_bar.T, -self.C_bar],
        ])
        rhs = -np.concatenate([self.p_bar, self.q_bar])
        sol = np.linalg.solve(kkt, rhs)
        return sol[:self.d1], sol[self.d1:]

    def _compute_meta(self) -> ProblemMeta:
        L = max(
            np.linalg.norm(np.block([[A, B], [B.T, -C]]), 2)
            for A, B, C in zip(self.A, self.B, self.C)
        )
        mu = min(np.linalg.eigvalsh(C)[0] for C in self.C)
        at_saddle = max(
            np.linalg.norm(np.concatenate([
                self.grad_x(i, self.x_star, self.y_star),
                self.grad_y(i, self.x_star, self.y_star),
            ]))
            for i in range(self.m)
        )
        spread = float(np.max(np.linalg.norm(np.concatenate([self.dp, self.dq], axis=2), axis=2)))
        # gradient-norm bound on the unit ball around the saddle point
        return ProblemMeta(L=float(L), mu=float(mu), L_g=float(at_saddle + L + spread))

    def shard_size(self, agent: int) -> int:
        return self.dp.shape[1]

    def local_value(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> float:
        idx = self._check_batch(agent, batch)
        lin_x = self.p[agent] + self.dp[agent, idx].mean(axis=0)
        lin_y = self.q[agent] + self.dq[agent, idx].mean(axis=0)
        return float(
            0.5 * x @ self.A[agent] @ x
            + x @ self.B[agent] @ y
            - 0.5 * y @ self.C[agent] @ y
            + lin_x @ x
            + lin_y @ y
        )

    def grad_x(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        idx = self._check_batch(agent, batch)
        shift = self.dp[agent, idx].mean(axis=0)
        return self.A[agent] @ x + self.B[agent] @ y + self.p[agent] + shift

    def grad_y(self, agent: int, x: np.ndarray, y: np.ndarray, batch: Batch = None) -> np.ndarray:
        idx = self._check_batch(agent, batch)
        shift = self.dq[agent, idx].mean(axis=0)
        return self.B[agent].T @ x - self.C[agent] @ y + self.q[agent] + shift

    def full_grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.A_bar @ x + self.B_bar @ y + self.p_bar

    def full_grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.B_bar.T @ x - self.C_bar @ y + self.q_bar

    def best_response(self, x: np.ndarray) -> np.ndarray:
        """y*(x) = C^{-1}(B^T x + q)"""
        return np.linalg.solve(self.C_bar, self.B_bar.T @ x + self.q_bar)


def _random_spd(rng: np.random.Generator, d: int, mu: float, L: float) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eig = rng.uniform(mu, L, size=d)
    eig[0] = mu
    M = (q * eig) @ q.T
    return 0.5 * (M + M.T)


def quad_problem(
    d1: int,
    d2: int,
    m: int,
    seed: int,
    mu: float = 1.0,
    L: float = 4.0,
    coupling: float = 0.5,
    n_samples: int = 16,
    sample_noise: float = 0.0,
) -> QuadraticProblem:
    """
    Random strongly-convex-strongly-concave quadratic with a known saddle point

    Args:
        d1, d2: Dimensions of x and y
        m: Number of agents
        seed: RNG seed
        mu, L: Spectrum bounds of A_i and C_i
        coupling: Scale of the B_i entries
        n_samples: Samples per agent shard
        sample_noise: Scale of the per-sample linear-term shifts

    Returns:
        QuadraticProblem
    """
    if min(d1, d2, m, n_samples) < 1:
        raise ValidationError("dimensions must be at least 1")
    rng = np.random.default_rng(seed)

    A = np.stack([_random_spd(rng, d1, mu, L) for _ in range(m)])
    C = np.stack([_random_spd(rng, d2, mu, L) for _ in range(m)])
    B = coupling * rng.standard_normal((m, d1, d2)) / np.sqrt(max(d1, d2))
    p = rng.standard_normal((m, d1))
    q = rng.standard_normal((m, d2))

    dp = sample_noise * rng.standard_normal((m, n_samples, d1))
    dq = sample_noise * rng.standard_normal((m, n_samples, d2))
    dp -= dp.mean(axis=1, keepdims=True)
    dq -= dq.mean(axis=1, keepdims=True)

    return QuadraticProblem(A, B, C, p, q, dp, dq)


def estimate_gradient_variance(
    problem: MinMaxProblem,
    x: np.ndarray,
    y: np.ndarray,
    draws: int = 64,
    seed: int = 0,
) -> float:
    """
    Mean squared deviation of single-sample gradients from the local full gradient

    Args:
        problem: Problem to sample
        x, y: Evaluation point
        draws: Samples per agent
        seed: RNG seed

    Returns:
        Empirical variance bound over agents (max)
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(problem.m):
        full = np.concatenate([problem.grad_x(i, x, y), problem.grad_y(i, x, y)])
        idx = rng.integers(0, problem.shard_size(i), size=draws)
        dev = [
            np.sum((np.concatenate([
                problem.grad_x(i, x, y, np.array([k])),
                problem.grad_y(i, x, y, np.array([k])),
            ]) - full) ** 2)
            for k in idx
        ]
        worst = max(worst, float(np.mean(dev)))
    return worst
