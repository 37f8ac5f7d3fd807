"""
Directed graphs, left-stochastic combination matrices and Perron centrality
"""
import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import networkx as nx
import numpy as np
import pandas as pd

from social_learning.errors import ConvergenceError, GraphSamplingError

logger = logging.getLogger("graph_core")

MAX_RESAMPLE_ATTEMPTS = 1000
STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class DirectedGraph:
    """Adjacency of a directed graph; entry (l, k) is True iff agent l sends to agent k"""
    adjacency: np.ndarray

    def __post_init__(self):
        adjacency = np.array(self.adjacency, dtype=bool, copy=True)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adjacency.shape}")
        adjacency.setflags(write=False)
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def n_agents(self) -> int:
        return self.adjacency.shape[0]

    def in_neighbors(self, k: int) -> np.ndarray:
        """Agents whose beliefs agent k receives, itself included when it has a self-loop"""
        return np.flatnonzero(self.adjacency[:, k])

    def has_self_loops(self) -> bool:
        return bool(np.all(np.diag(self.adjacency)))

    def edge_count(self) -> int:
        """Number of off-diagonal directed edges"""
        return int(self.adjacency.sum() - np.trace(self.adjacency))

    def to_networkx(self) -> nx.DiGraph:
        return nx.from_numpy_array(self.adjacency.astype(int), create_using=nx.DiGraph)


@dataclass(frozen=True)
class CombinationMatrix:
    """Left-stochastic weights; column k holds the trust agent k places in its in-neighbors"""
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float, copy=True)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ValueError(f"weights must be square, got shape {weights.shape}")
        if np.any(weights < 0):
            raise ValueError("combination weights must be nonnegative")
        if not np.allclose(weights.sum(axis=0), 1.0, rtol=0.0, atol=STOCHASTIC_TOL):
            raise ValueError("combination matrix columns must sum to 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    def support(self) -> DirectedGraph:
        return DirectedGraph(self.weights > 0)


@dataclass(frozen=True)
class PerronVector:
    """Positive eigenvector of a combination matrix at eigenvalue 1, normalized to sum 1"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float, copy=True)
        if np.any(entries <= 0):
            raise ValueError("Perron entries must be strictly positive")
        if abs(entries.sum() - 1.0) > 1e-10:
            raise ValueError("Perron entries must sum to 1")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return self.entries.shape[0]


def is_strongly_connected(g: DirectedGraph) -> bool:
    """
    Check that every agent reaches every other agent along directed edges

    Args:
        g: The graph to check

    Returns:
        True iff forward and reverse reachability from agent 0 both cover all agents
    """
    if g.n_agents == 1:
        return True
    return nx.is_strongly_connected(g.to_networkx())


def generate_erdos_renyi(n: int, p: float, seed: Optional[int] = None,
                         max_attempts: int = MAX_RESAMPLE_ATTEMPTS) -> DirectedGraph:
    """
    Draw a strongly connected directed Erdos-Renyi graph with self-loops on every agent.

    Each attempt draws one n x n uniform matrix in row-major order from
    numpy.random.default_rng(seed); off-diagonal entry (l, k) becomes an edge
    when its uniform is below p. Diagonal draws are discarded and replaced by
    self-loops. Whole graphs are redrawn until one is strongly connected.

    Args:
        n: Number of agents (>= 2)
        p: Edge probability in (0, 1)
        seed: Seed for numpy.random.default_rng
        max_attempts: Resampling budget

    Returns:
        A strongly connected DirectedGraph
    """
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")

    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        adjacency = rng.random((n, n)) < p
        np.fill_diagonal(adjacency, True)
        graph = DirectedGraph(adjacency)
        if is_strongly_connected(graph):
            logger.info(f"Erdos-Renyi graph n={n}, p={p}: {graph.edge_count()} edges after {attempt + 1} draw(s)")
            return graph
        logger.debug(f"Draw {attempt + 1} not strongly connected, resampling")
        if attempt == max_attempts // 2:
            logger.warning(f"Half of the resampling budget used for n={n}, p={p}")

    raise GraphSamplingError(
        f"no strongly connected graph after {max_attempts} draws (p={p} too small for n={n}?)"
    )


def uniform_combination_matrix(g: DirectedGraph) -> CombinationMatrix:
    """
    Averaging rule: every agent weights each of its in-neighbors (itself included) equally

    Args:
        g: Strongly connected graph with self-loops

    Returns:
        The left-stochastic combination matrix with 1/|N_k| on the support of column k
    """
    if not g.has_self_loops():
        raise ValueError("graph must have a self-loop on every agent")
    if not is_strongly_connected(g):
        raise ValueError("graph must be strongly connected")
    adjacency = g.adjacency.astype(float)
    return CombinationMatrix(adjacency / adjacency.sum(axis=0, keepdims=True))


def perron_vector(a: CombinationMatrix, tol: float = 1e-12, max_iter: int = 100000) -> PerronVector:
    """
    Power iteration for the Perron eigenvector, started from the uniform vector

    Args:
        a: Primitive combination matrix
        tol: Stop once ||A u - u||_1 <= tol
        max_iter: Iteration budget

    Returns:
        PerronVector u with A u = u and sum(u) = 1
    """
    weights = a.weights
    u = np.full(a.n_agents, 1.0 / a.n_agents)
    for _ in range(max_iter):
        residual = np.abs(weights @ u - u).sum()
        if residual <= tol:
            return PerronVector(u)
        u = weights @ u
        u /= u.sum()

    raise ConvergenceError(f"power iteration did not reach tol={tol} in {max_iter} iterations")


def normalize_learned_matrix(a_raw: np.ndarray) -> CombinationMatrix:
    """
    Project an unconstrained estimate onto left-stochastic matrices.

    Negative entries are clipped to zero and each column is rescaled to sum 1.
    A column that is zero after clipping becomes the unit self-weight column.
    """
    weights = np.clip(np.asarray(a_raw, dtype=float), 0.0, None)
    sums = weights.sum(axis=0)
    empty = sums <= 0
    weights[:, empty] = 0.0
    weights[empty, empty] = 1.0
    sums[empty] = 1.0
    return CombinationMatrix(weights / sums)


def perturb_topology(g: DirectedGraph, flip_prob: float, seed: Optional[int] = None,
                     max_attempts: int = MAX_RESAMPLE_ATTEMPTS) -> DirectedGraph:
    """
    Toggle each off-diagonal edge independently with probability flip_prob.

    Each attempt draws one n x n uniform matrix in row-major order; entry (l, k)
    with l != k is toggled when its uniform is below flip_prob. Self-loops stay.
    Attempts repeat until the result is strongly connected.

    Args:
        g: Graph to perturb
        flip_prob: Toggle probability in [0, 1)
        seed: Seed for numpy.random.default_rng
        max_attempts: Resampling budget

    Returns:
        The perturbed, strongly connected graph
    """
    if not 0.0 <= flip_prob < 1.0:
        raise ValueError(f"flip_prob must lie in [0, 1), got {flip_prob}")

    rng = np.random.default_rng(seed)
    n = g.n_agents
    for attempt in range(max_attempts):
        flips = rng.random((n, n)) < flip_prob
        np.fill_diagonal(flips, False)
        graph = DirectedGraph(np.logical_xor(g.adjacency, flips))
        if is_strongly_connected(graph):
            logger.debug(f"Topology perturbed: {int(flips.sum())} toggles after {attempt + 1} draw(s)")
            return graph
        if attempt == max_attempts // 2:
            logger.warning(f"Topology perturbation used {attempt} draws without a strongly connected result")

    raise GraphSamplingError(f"no strongly connected perturbation after {max_attempts} draws")


def mixing_gap(a: CombinationMatrix, u: PerronVector, t: int) -> float:
    """Frobenius distance between A^t and u 1^T"""
    power = np.linalg.matrix_power(a.weights, t)
    limit = np.outer(u.entries, np.ones(a.n_agents))
    return float(np.linalg.norm(power - limit, "fro"))


def matrix_to_json(matrix: np.ndarray) -> Dict[str, Any]:
    matrix = np.asarray(matrix, dtype=float)
    return {"n": int(matrix.shape[0]), "weights": matrix.reshape(-1).tolist()}


def matrix_from_json(payload: Dict[str, Any]) -> np.ndarray:
    n = int(payload["n"])
    weights = np.asarray(payload["weights"], dtype=float)
    if weights.size != n * n:
        raise ValueError(f"expected {n * n} weights, got {weights.size}")
    return weights.reshape(n, n)


def graph_to_json(g: DirectedGraph) -> Dict[str, Any]:
    return matrix_to_json(g.adjacency.astype(float))


def graph_from_json(payload: Dict[str, Any]) -> DirectedGraph:
    return DirectedGraph(matrix_from_json(payload) > 0)


def save_matrix(matrix: np.ndarray, path: str) -> None:
    with open(path, "w") as handle:
        json.dump(matrix_to_json(matrix), handle)


def load_matrix(path: str) -> np.ndarray:
    with open(path) as handle:
        return matrix_from_json(json.load(handle))


def perron_to_csv(u: PerronVector, path: str) -> None:
    """Write the Perron vector with columns agent_id,u"""
    frame = pd.DataFrame({"agent_id": np.arange(len(u)), "u": u.entries})
    frame.to_csv(path, index=False)
