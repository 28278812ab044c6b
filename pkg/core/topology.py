"""
Communication topology: random graphs, Metropolis mixing matrices, spectral gap
"""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np
from loguru import logger

from utils.validators import ArrayValidator, RangeValidator
from .exceptions import TopologyError, ValidationError

Edge = Tuple[int, int]


def _normalize_edges(m: int, edges: Iterable[Edge]) -> FrozenSet[Edge]:
    normalized = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise TopologyError("self-loops are not allowed", details={'edge': (i, j)})
        if not (0 <= i < m and 0 <= j < m):
            raise TopologyError("edge endpoint out of range", details={'edge': (i, j), 'm': m})
        normalized.add((min(i, j), max(i, j)))
    return frozenset(normalized)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph over agents 0..m-1"""
    m: int
    edges: FrozenSet[Edge]
    repaired: bool = False
    repair_edges: Tuple[Edge, ...] = field(default_factory=tuple)

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[Edge]) -> "Graph":
        if m < 1:
            raise ValidationError("m must be at least 1", field="m", value=m)
        return cls(m=m, edges=_normalize_edges(m, edges))

    @classmethod
    def ring(cls, m: int) -> "Graph":
        return cls.from_edges(m, _ring_edges(m))

    @classmethod
    def complete(cls, m: int) -> "Graph":
        return cls.from_edges(m, nx.complete_graph(m).edges())

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def sparsity(self) -> float:
        """p = 2|E| / (m(m-1)); 0 for a single agent"""
        if self.m < 2:
            return 0.0
        return 2.0 * self.num_edges / (self.m * (self.m - 1))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.m, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.m))
        g.add_edges_from(self.edges)
        return g

    def is_connected(self) -> bool:
        return nx.is_connected(self.to_networkx())

    def to_edge_list(self) -> str:
        """One "i j" pair per line, 0-indexed, sorted"""
        return "".join(f"{i} {j}\n" for i, j in sorted(self.edges))

    @classmethod
    def from_edge_list(cls, m: int, text: str) -> "Graph":
        edges: List[Edge] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise TopologyError("malformed edge line", details={'line': lineno, 'text': line})
            edges.append((int(parts[0]), int(parts[1])))
        return cls.from_edges(m, edges)


def _ring_edges(m: int) -> List[Edge]:
    if m < 2:
        return []
    if m == 2:
        return [(0, 1)]
    return [(k, (k + 1) % m) for k in range(m)]


def gen_erdos_renyi(m: int, p: float, seed: int) -> Graph:
    """
    Sample G(m, p); repair disconnected draws with the agent-index ring

    Args:
        m: Number of agents
        p: Edge probability
        seed: RNG seed

    Returns:
        Connected Graph; `repaired` is set when ring edges were added
    """
    if m < 1:
        raise ValidationError("m must be at least 1", field="m", value=m)
    RangeValidator.in_interval(p, "p", (0.0, 1.0))

    sampled = nx.gnp_random_graph(m, p, seed=seed)
    graph = Graph.from_edges(m, sampled.edges())
    if m == 1 or graph.is_connected():
        return graph

    added = tuple(
        (min(i, j), max(i, j)) for i, j in _ring_edges(m)
        if (min(i, j), max(i, j)) not in graph.edges
    )
    logger.debug(f"G({m}, {p}) seed={seed} disconnected; adding {len(added)} ring edges")
    return Graph(
        m=m,
        edges=graph.edges | frozenset(added),
        repaired=True,
        repair_edges=added,
    )


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric doubly-stochastic gossip weights and their spectral gap"""
    w: np.ndarray
    lam: float
    graph: Optional[Graph] = None

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def satisfies_gap(self) -> bool:
        """Spectral gap condition lambda < 1"""
        return self.lam < 1.0

    @classmethod
    def from_array(cls, w, atol: float = 1e-12) -> "MixingMatrix":
        """Wrap an explicit matrix after checking the mixing invariants"""
        arr = ArrayValidator.as_square(w, "mixing matrix").copy()
        if not np.array_equal(arr, arr.T):
            raise TopologyError("mixing matrix must be symmetric")
        if np.any(arr < 0):
            raise TopologyError("mixing matrix must be nonnegative")
        if not np.allclose(arr.sum(axis=1), 1.0, rtol=0.0, atol=atol):
            raise TopologyError("mixing matrix rows must sum to 1")
        arr.setflags(write=False)
        return cls(w=arr, lam=spectral_gap(arr))

    @classmethod
    def uniform(cls, m: int) -> "MixingMatrix":
        """W = 11^T / m"""
        return cls.from_array(np.full((m, m), 1.0 / m))

    @classmethod
    def identity(cls, m: int) -> "MixingMatrix":
        return cls.from_array(np.eye(m))


def metropolis_weights(g: Graph) -> MixingMatrix:
    """
    Metropolis-Hastings weights w_ij = 1 / (1 + max(deg_i, deg_j)) on edges

    Args:
        g: Connected graph

    Returns:
        MixingMatrix with lambda < 1
    """
    if g.m > 1 and not g.is_connected():
        raise TopologyError(
            "graph must be connected",
            details={'m': g.m, 'edges': g.num_edges},
            suggestion="Use gen_erdos_renyi, which repairs disconnected draws",
        )

    deg = g.degrees()
    w = np.zeros((g.m, g.m))
    for i, j in g.edges:
        weight = 1.0 / (1.0 + max(deg[i], deg[j]))
        w[i, j] = weight
        w[j, i] = weight
    np.fill_diagonal(w, 1.0 - w.sum(axis=1))
    w.setflags(write=False)

    return MixingMatrix(w=w, lam=spectral_gap(w), graph=g)


def spectral_gap(w) -> float:
    """
    ||W - 11^T/m||_2

    Symmetric inputs (every Metropolis matrix) use the eigenvalues of the
    deflated matrix; any other square input uses its largest singular value.

    Args:
        w: Square matrix

    Returns:
        The spectral gap lambda
    """
    arr = ArrayValidator.as_square(w, "w")
    m = arr.shape[0]
    deflated = arr - np.full((m, m), 1.0 / m)
    if np.allclose(deflated, deflated.T, rtol=0.0, atol=1e-12):
        return float(np.max(np.abs(np.linalg.eigvalsh(deflated))))
    return float(np.linalg.norm(deflated, 2))


def build_topology(m: int, p: float, seed: int) -> MixingMatrix:
    """Erdos-Renyi graph plus Metropolis weights"""
    graph = gen_erdos_renyi(m, p, seed)
    mixing = metropolis_weights(graph)
    logger.debug(
        f"topology m={m} p={p} seed={seed}: |E|={graph.num_edges} "
        f"repaired={graph.repaired} lambda={mixing.lam:.6f}"
    )
    return mixing
