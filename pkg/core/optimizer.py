"""
Decentralized min-max optimizers over a simulated network of agents

DPMixSGD: local STORM estimators, Gaussian noise on what is shared, gradient
tracking of the noisy estimators and gossip mixing of the iterates. Baselines:
DM-HSGD (no noise), SGDA and DP-SGDA (mixing of iterates only).

State is kept as stacked m x d arrays; row i belongs to agent i. Every round reads
the previous round's arrays and writes fresh ones.
"""

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np
from loguru import logger

from utils.rng import RUN_SCOPE, Purpose, stream
from utils.validators import ArrayValidator, RangeValidator
from .exceptions import DimensionError, DivergenceError
from .metrics import consensus_error, stationarity_norm
from .models import HyperParams, Method, RunLogger, RunRecord, RunRow, StationarityConfig
from .objective import Batch, MinMaxProblem
from .topology import MixingMatrix

Evaluator = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class AgentState:
    """One agent's slice of the network state"""
    x: np.ndarray
    y: np.ndarray
    g: np.ndarray
    g_prev: np.ndarray
    h: np.ndarray
    h_prev: np.ndarray
    g_star: np.ndarray
    g_star_prev: np.ndarray
    h_star: np.ndarray
    h_star_prev: np.ndarray
    v: np.ndarray
    u: np.ndarray


@dataclass
class NetworkState:
    """Stacked per-agent vectors plus the round counter"""
    X: np.ndarray
    Y: np.ndarray
    X_prev: np.ndarray
    Y_prev: np.ndarray
    G: np.ndarray
    G_prev: np.ndarray
    H: np.ndarray
    H_prev: np.ndarray
    G_star: np.ndarray
    G_star_prev: np.ndarray
    H_star: np.ndarray
    H_star_prev: np.ndarray
    V: np.ndarray
    U: np.ndarray
    seed: int
    t: int = 0

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def x_bar(self) -> np.ndarray:
        return self.X.mean(axis=0)

    @property
    def y_bar(self) -> np.ndarray:
        return self.Y.mean(axis=0)

    def agent(self, i: int) -> AgentState:
        return AgentState(
            x=self.X[i], y=self.Y[i],
            g=self.G[i], g_prev=self.G_prev[i],
            h=self.H[i], h_prev=self.H_prev[i],
            g_star=self.G_star[i], g_star_prev=self.G_star_prev[i],
            h_star=self.H_star[i], h_star_prev=self.H_star_prev[i],
            v=self.V[i], u=self.U[i],
        )


def sample_batch(size: int, requested: int, rng: np.random.Generator, replace: bool = True) -> Batch:
    """Local shard indices, or None when the request covers the shard"""
    if requested >= size:
        return None
    if replace:
        return rng.integers(0, size, size=requested)
    return np.sort(rng.choice(size, size=requested, replace=False))


def clip_pair(gx: np.ndarray, gy: np.ndarray, clip: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Rescale (gx, gy) jointly to norm <= clip"""
    if clip is None:
        return gx, gy
    norm = math.sqrt(float(gx @ gx) + float(gy @ gy))
    if norm <= clip:
        return gx, gy
    scale = clip / norm
    return gx * scale, gy * scale


def _fresh_gradients(
    problem: MinMaxProblem,
    agent: int,
    x: np.ndarray,
    y: np.ndarray,
    batch: Batch,
    clip: Optional[float],
) -> Tuple[np.ndarray, np.ndarray]:
    return clip_pair(problem.grad_x(agent, x, y, batch), problem.grad_y(agent, x, y, batch), clip)


def resolve_clip_quantile(problem: MinMaxProblem, hp: HyperParams, seed: int, quantile: float) -> float:
    """
    Threshold clipping the top `quantile` fraction of per-sample gradient norms

    Norms are taken at the initial point over up to b0 samples per agent.
    """
    RangeValidator.in_interval(quantile, "clip_quantile", (0.0, 1.0), closed=(False, False))
    x0, y0 = initial_point(problem, seed)
    norms: List[float] = []
    for i in range(problem.m):
        size = problem.shard_size(i)
        idx = sample_batch(size, hp.b0, stream(seed, i, 0, Purpose.CLIP), replace=False)
        for k in (np.arange(size) if idx is None else idx):
            one = np.array([k])
            gx = problem.grad_x(i, x0, y0, one)
            gy = problem.grad_y(i, x0, y0, one)
            norms.append(math.sqrt(float(gx @ gx) + float(gy @ gy)))
    threshold = float(np.quantile(norms, 1.0 - quantile))
    logger.debug(f"clip threshold {threshold:.6g} from {len(norms)} per-sample norms")
    return threshold


def initial_point(problem: MinMaxProblem, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Shared starting point: small Gaussian x, default y"""
    x0 = 0.01 * stream(seed, RUN_SCOPE, 0, Purpose.INIT_POINT).standard_normal(problem.d1)
    return x0, problem.default_y0()


def _check_dimensions(problem: MinMaxProblem, w: MixingMatrix) -> None:
    if w.m != problem.m:
        raise DimensionError(
            "mixing matrix size does not match the number of agents",
            expected=problem.m,
            actual=w.m,
        )


def init_agents(
    problem: MinMaxProblem,
    hp: HyperParams,
    w: MixingMatrix,
    seed: int,
    x0: Optional[np.ndarray] = None,
    y0: Optional[np.ndarray] = None,
) -> NetworkState:
    """
    Shared (x0, y0) on every agent and b0-batch estimators g0, h0

    Shared and tracked quantities start at zero.
    """
    _check_dimensions(problem, w)
    if x0 is None or y0 is None:
        dx, dy = initial_point(problem, seed)
        x0 = dx if x0 is None else x0
        y0 = dy if y0 is None else y0
    x0 = ArrayValidator.as_vector(x0, "x0", problem.d1)
    y0 = ArrayValidator.as_vector(y0, "y0", problem.d2)

    m = problem.m
    X = np.tile(x0, (m, 1))
    Y = np.tile(y0, (m, 1))
    G = np.empty((m, problem.d1))
    H = np.empty((m, problem.d2))
    for i in range(m):
        rng = stream(seed, i, 0, Purpose.INIT_BATCH)
        batch = sample_batch(problem.shard_size(i), hp.b0, rng, replace=False)
        G[i], H[i] = _fresh_gradients(problem, i, X[i], Y[i], batch, hp.clip)

    zeros_x = np.zeros((m, problem.d1))
    zeros_y = np.zeros((m, problem.d2))
    return NetworkState(
        X=X, Y=Y, X_prev=X.copy(), Y_prev=Y.copy(),
        G=G, G_prev=zeros_x.copy(), H=H, H_prev=zeros_y.copy(),
        G_star=zeros_x.copy(), G_star_prev=zeros_x.copy(),
        H_star=zeros_y.copy(), H_star_prev=zeros_y.copy(),
        V=zeros_x.copy(), U=zeros_y.copy(),
        seed=seed,
    )


def storm_estimate(
    problem: MinMaxProblem,
    agent: int,
    state: AgentState,
    x_prev: np.ndarray,
    y_prev: np.ndarray,
    batch: Batch,
    hp: HyperParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    g_t = (1 - beta_x)(g_{t-1} - grad_x F(prev; z)) + grad_x F(curr; z), same for h

    Both points are evaluated on the same batch z.
    """
    cur_x, cur_y = _fresh_gradients(problem, agent, state.x, state.y, batch, hp.clip)
    old_x, old_y = _fresh_gradients(problem, agent, x_prev, y_prev, batch, hp.clip)
    g = (1.0 - hp.beta_x) * (state.g - old_x) + cur_x
    h = (1.0 - hp.beta_y) * (state.h - old_y) + cur_y
    return g, h


def storm_update(network: NetworkState, problem: MinMaxProblem, hp: HyperParams) -> None:
    """Refresh every agent's estimators for round network.t (t >= 1)"""
    G = np.empty_like(network.G)
    H = np.empty_like(network.H)
    for i in range(network.m):
        rng = stream(network.seed, i, network.t, Purpose.BATCH)
        batch = sample_batch(problem.shard_size(i), hp.batch, rng)
        G[i], H[i] = storm_estimate(
            problem, i, network.agent(i), network.X_prev[i], network.Y_prev[i], batch, hp
        )
    network.G_prev, network.H_prev = network.G, network.H
    network.G, network.H = G, H


def _noise(seed: int, agent: int, t: int, purpose: Purpose, sigma: float, d: int) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(d)
    return sigma * stream(seed, agent, t, purpose).standard_normal(d)


def inject_noise(network: NetworkState, hp: HyperParams) -> None:
    """g* = g + N(0, sigma_x^2 I), h* = h + N(0, sigma_y^2 I), one draw per agent per round"""
    m, d1 = network.G.shape
    d2 = network.H.shape[1]
    G_star = np.empty_like(network.G)
    H_star = np.empty_like(network.H)
    for i in range(m):
        G_star[i] = network.G[i] + _noise(network.seed, i, network.t, Purpose.NOISE_X, hp.sigma_x, d1)
        H_star[i] = network.H[i] + _noise(network.seed, i, network.t, Purpose.NOISE_Y, hp.sigma_y, d2)
    network.G_star_prev, network.H_star_prev = network.G_star, network.H_star
    network.G_star, network.H_star = G_star, H_star


def gradient_track(network: NetworkState, w: MixingMatrix) -> None:
    """v_t = W (v_{t-1} + g*_t - g*_{t-1}); u likewise with h*"""
    network.V = w.w @ (network.V + network.G_star - network.G_star_prev)
    network.U = w.w @ (network.U + network.H_star - network.H_star_prev)


def _project_rows(problem: MinMaxProblem, Y: np.ndarray) -> np.ndarray:
    if not problem.simplex_y:
        return Y
    return np.vstack([problem.project_y(row) for row in Y])


def mix_params(network: NetworkState, w: MixingMatrix, hp: HyperParams, problem: MinMaxProblem) -> None:
    """x <- W (x - eta_x v), y <- P(W (y + eta_y u))"""
    X_next = w.w @ (network.X - hp.eta_x * network.V)
    Y_next = _project_rows(problem, w.w @ (network.Y + hp.eta_y * network.U))
    network.X_prev, network.Y_prev = network.X, network.Y
    network.X, network.Y = X_next, Y_next


def _check_finite(network: NetworkState, *names: str) -> None:
    for name in names:
        bad = ArrayValidator.first_nonfinite_row(getattr(network, name))
        if bad is not None:
            raise DivergenceError(
                f"non-finite {name} at iteration {network.t}, agent {bad}",
                iteration=network.t,
                agent=bad,
            )


def iterate_dpmixsgd(
    problem: MinMaxProblem,
    hp: HyperParams,
    w: MixingMatrix,
    seed: int,
    network: Optional[NetworkState] = None,
) -> Iterator[NetworkState]:
    """
    Yield the network after each of the T rounds

    Round 0 uses the b0-batch estimators from init_agents; later rounds refresh
    them with the STORM recursion. The yielded object is updated in place.
    """
    network = network or init_agents(problem, hp, w, seed)
    for t in range(hp.T):
        network.t = t
        if t > 0:
            storm_update(network, problem, hp)
        inject_noise(network, hp)
        gradient_track(network, w)
        mix_params(network, w, hp, problem)
        _check_finite(network, 'X', 'Y', 'V', 'U')
        yield network


def iterate_sgda(
    problem: MinMaxProblem,
    hp: HyperParams,
    w: MixingMatrix,
    seed: int,
    network: Optional[NetworkState] = None,
) -> Iterator[NetworkState]:
    """
    Local (optionally noisy) gradients, gossip on iterates, no tracking

    Round 0 draws its batch like init_agents; later rounds use per-step batches.
    """
    network = network or init_agents(problem, hp, w, seed)
    for t in range(hp.T):
        network.t = t
        if t > 0:
            G = np.empty_like(network.G)
            H = np.empty_like(network.H)
            for i in range(network.m):
                rng = stream(seed, i, t, Purpose.BATCH)
                batch = sample_batch(problem.shard_size(i), hp.batch, rng)
                G[i], H[i] = _fresh_gradients(problem, i, network.X[i], network.Y[i], batch, hp.clip)
            network.G_prev, network.H_prev = network.G, network.H
            network.G, network.H = G, H
        inject_noise(network, hp)
        network.V, network.U = network.G_star, network.H_star
        mix_params(network, w, hp, problem)
        _check_finite(network, 'X', 'Y')
        yield network


def _run(
    method: Method,
    iterator: Iterator[NetworkState],
    problem: MinMaxProblem,
    hp: HyperParams,
    seed: int,
    run_logger: Optional[RunLogger],
    evaluate: Optional[Evaluator],
    stationarity: Optional[StationarityConfig],
    iters_per_epoch: Optional[int],
) -> RunRecord:
    record = RunRecord(method=method, seed=seed, T=hp.T, sigma_x=hp.sigma_x, sigma_y=hp.sigma_y)
    log_every = run_logger.log_every if run_logger is not None else hp.T
    per_epoch = iters_per_epoch or max(1, math.ceil(max(problem.shard_sizes()) / hp.batch))
    history = np.empty((hp.T, problem.d1))
    start = time.perf_counter()

    network = None
    for network in iterator:
        iteration = network.t + 1
        history[network.t] = network.x_bar
        if iteration % log_every and iteration != hp.T:
            continue
        x_bar, y_bar = network.x_bar, network.y_bar
        ex, ey = consensus_error(network)
        row = RunRow(
            iteration=iteration,
            epoch=iteration / per_epoch,
            x_bar=x_bar,
            y_bar=y_bar,
            consensus_x=ex,
            consensus_y=ey,
            grad_norm=stationarity_norm(problem, x_bar, stationarity, y_start=y_bar),
            wall_ms=(time.perf_counter() - start) * 1000.0,
            auroc_test=evaluate(x_bar) if evaluate is not None else None,
        )
        record.add_row(row)
        if run_logger is not None:
            run_logger.log(row)

    zeta = int(stream(seed, RUN_SCOPE, hp.T, Purpose.OUTPUT).integers(1, hp.T + 1))
    record.zeta = zeta
    record.x_bar_zeta = history[zeta - 1].copy()
    record.x_bar_final = network.x_bar.copy()
    record.y_bar_final = network.y_bar.copy()
    logger.debug(
        f"{method.value} seed={seed} T={hp.T} done: zeta={zeta} "
        f"grad_norm={record.final_row.grad_norm:.4g}"
    )
    return record


def run_dpmixsgd(
    problem: MinMaxProblem,
    hp: HyperParams,
    w: MixingMatrix,
    seed: int,
    run_logger: Optional[RunLogger] = None,
    evaluate: Optional[Evaluator] = None,
    stationarity: Optional[StationarityConfig] = None,
    iters_per_epoch: Optional[int] = None,
    method: Method = Method.DPMIXSGD,
) -> RunRecord:
    """
    Run T rounds of DPMixSGD

    Args:
        problem: Min-max problem split over w.m agents
        hp: Hyperparameters, noise levels included
        w: Mixing matrix
        seed: Run seed
        run_logger: Receives one RunRow per logging interval
        evaluate: x_bar -> test AUROC
        stationarity: Inner-maximization settings for grad_norm
        iters_per_epoch: Epoch length in rounds (default ceil(max shard / batch))

    Returns:
        RunRecord with x_bar_zeta for zeta uniform on {1..T}
    """
    return _run(
        method, iterate_dpmixsgd(problem, hp, w, seed), problem, hp, seed,
        run_logger, evaluate, stationarity, iters_per_epoch,
    )


def run_dm_hsgd(problem, hp, w, seed, run_logger=None, evaluate=None, stationarity=None,
                iters_per_epoch=None) -> RunRecord:
    """DPMixSGD with the noise switched off"""
    return run_dpmixsgd(
        problem, hp.without_noise(), w, seed, run_logger, evaluate, stationarity,
        iters_per_epoch, method=Method.DM_HSGD,
    )


def run_dp_sgda(problem, hp, w, seed, run_logger=None, evaluate=None, stationarity=None,
                iters_per_epoch=None, method: Method = Method.DP_SGDA) -> RunRecord:
    """Gossip SGDA with Gaussian noise on the local gradients"""
    return _run(
        method, iterate_sgda(problem, hp, w, seed), problem, hp, seed,
        run_logger, evaluate, stationarity, iters_per_epoch,
    )


def run_sgda(problem, hp, w, seed, run_logger=None, evaluate=None, stationarity=None,
             iters_per_epoch=None) -> RunRecord:
    """Plain gossip SGDA"""
    return run_dp_sgda(
        problem, hp.without_noise(), w, seed, run_logger, evaluate, stationarity,
        iters_per_epoch, method=Method.SGDA,
    )


RUNNERS = {
    Method.DPMIXSGD: run_dpmixsgd,
    Method.DM_HSGD: run_dm_hsgd,
    Method.SGDA: run_sgda,
    Method.DP_SGDA: run_dp_sgda,
}
