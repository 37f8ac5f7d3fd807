"""
Forward simulation of adaptive social learning (ASL) over a directed graph.

All belief arithmetic runs in the log domain; every normalization is a
log-sum-exp. Column j of a log-belief matrix holds hypothesis j in index
order with the reference hypothesis skipped.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from social_learning.errors import DimensionMismatchError
from social_learning.graph_core import CombinationMatrix, perturb_topology, uniform_combination_matrix
from social_learning.likelihood_models import BernoulliLikelihood, llr_matrix, sample_observations

logger = logging.getLogger("asl_simulator")


def default_burn_in(delta: float) -> int:
    """Ten adaptation times, ceil(10 ln 2 / delta)"""
    return math.ceil(10.0 * math.log(2.0) / delta)


@dataclass
class BeliefState:
    """Log private beliefs (after combine) and log public beliefs (after adapt), N x H each"""
    log_private: np.ndarray
    log_public: np.ndarray

    @classmethod
    def uniform(cls, n: int, H: int) -> "BeliefState":
        flat = np.full((n, H), -math.log(H))
        return cls(log_private=flat.copy(), log_public=flat.copy())

    @property
    def private(self) -> np.ndarray:
        return np.exp(self.log_private)

    @property
    def public(self) -> np.ndarray:
        return np.exp(self.log_public)


@dataclass(frozen=True)
class LogBeliefMatrix:
    values: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class PerturbationSchedule:
    """
    Scheduled environment changes in absolute simulation iterations.

    topology_period: every multiple of this iteration the graph is perturbed
    (flip_prob per off-diagonal entry) and the averaging rule re-applied.
    theta_switches: (iteration, hypothesis) pairs; the true state changes
    from that iteration on.
    """
    topology_period: Optional[int] = None
    topology_offset: int = 0
    flip_prob: float = 0.005
    theta_switches: Tuple[Tuple[int, int], ...] = ()

    def topology_change_at(self, i: int) -> bool:
        if not self.topology_period or i <= self.topology_offset:
            return False
        return (i - self.topology_offset) % self.topology_period == 0

    def theta_at(self, i: int, initial: int) -> int:
        theta = initial
        for start, value in sorted(self.theta_switches):
            if i >= start:
                theta = value
        return theta


@dataclass(frozen=True)
class SimulationConfig:
    combination: CombinationMatrix
    models: BernoulliLikelihood
    delta: float
    n_iters: int
    burn_in: Optional[int] = None
    schedule: PerturbationSchedule = field(default_factory=PerturbationSchedule)
    seed: Optional[int] = None
    record_llr: bool = False

    def resolved_burn_in(self) -> int:
        return default_burn_in(self.delta) if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class SimulationRecord:
    iteration: int
    lam: np.ndarray
    map_estimates: np.ndarray
    theta_star: int
    llr: Optional[np.ndarray] = None
    new_combination: Optional[CombinationMatrix] = None


@dataclass
class SimulationTrace:
    """
    Observable stream of log-belief matrices plus the ground truth that produced it.

    combination_changes holds (iteration, matrix) pairs: the matrix is used by
    the combine step of that iteration and every later one until the next change.
    """
    lambdas: np.ndarray
    map_estimates: np.ndarray
    theta_star: np.ndarray
    combination_changes: List[Tuple[int, CombinationMatrix]]
    delta: float
    seed: Optional[int]
    burn_in: int
    reference: int = 0
    llrs: Optional[np.ndarray] = None
    final_public: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.lambdas.shape[0]

    def matrix_at(self, i: int) -> CombinationMatrix:
        current = self.combination_changes[0][1]
        for start, matrix in self.combination_changes:
            if start <= i:
                current = matrix
        return current

    def learner_lambdas(self) -> np.ndarray:
        return self.lambdas[self.burn_in:]


def adapt_step(log_private: np.ndarray, obs: np.ndarray, models: BernoulliLikelihood, delta: float) -> np.ndarray:
    """
    Local Bayesian update with exponent delta: psi_k ~ L_k(obs_k|.)^delta mu_k^(1-delta)

    Args:
        log_private: N x H log private beliefs from the previous combine step
        obs: Length-N observations
        models: Likelihood models
        delta: Adaptation step-size in (0, 1)

    Returns:
        N x H log public beliefs
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    unnormalized = delta * np.log(models.likelihood(obs)) + (1.0 - delta) * log_private
    return unnormalized - logsumexp(unnormalized, axis=1, keepdims=True)


def combine_step(log_public: np.ndarray, a: CombinationMatrix) -> np.ndarray:
    """Geometric fusion: log mu_k = sum_l a_lk log psi_l, renormalized"""
    unnormalized = a.weights.T @ log_public
    return unnormalized - logsumexp(unnormalized, axis=1, keepdims=True)


def log_belief_matrix(log_public: np.ndarray, reference: int = 0, iteration: int = 0) -> LogBeliefMatrix:
    """Lambda[k, j] = ln psi_k(theta_0) - ln psi_k(theta_j) from log public beliefs"""
    log_public = np.asarray(log_public, dtype=float)
    others = [h for h in range(log_public.shape[1]) if h != reference]
    return LogBeliefMatrix(log_public[:, [reference]] - log_public[:, others], iteration)


def beliefs_from_log_ratios(values: np.ndarray, reference: int = 0) -> np.ndarray:
    """Inverse of log_belief_matrix: softmax over the reconstructed log beliefs"""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, width = values.shape
    logits = np.zeros((n, width + 1))
    others = [h for h in range(width + 1) if h != reference]
    logits[:, others] = -values
    return softmax(logits, axis=1)


def map_estimate(public: np.ndarray) -> int:
    """Most probable hypothesis of one agent, lowest index on ties"""
    return int(np.argmax(public))


def majority_vote(estimates: Sequence[int], n_hypotheses: int) -> int:
    """Most frequent hypothesis among per-agent estimates, lowest index on ties"""
    return int(np.argmax(np.bincount(np.asarray(estimates, dtype=int), minlength=n_hypotheses)))


def iter_simulation(config: SimulationConfig) -> Iterator[SimulationRecord]:
    """
    Run the adapt/combine recursion from uniform beliefs, yielding one record per iteration.

    Observations come from the first child of SeedSequence(seed); topology
    perturbation seeds are drawn from the second child, one per change.
    """
    models = config.models
    combination = config.combination
    if combination.n_agents != models.n_agents:
        raise DimensionMismatchError(
            f"combination matrix has {combination.n_agents} agents, models have {models.n_agents}"
        )
    reference = models.hypotheses.reference_index
    obs_seq, topo_seq = np.random.SeedSequence(config.seed).spawn(2)
    obs_rng = np.random.default_rng(obs_seq)
    topo_rng = np.random.default_rng(topo_seq)

    state = BeliefState.uniform(models.n_agents, models.n_hypotheses)
    graph = combination.support()
    initial_theta = models.hypotheses.true_index
    for i in range(config.n_iters):
        changed = None
        if config.schedule.topology_change_at(i):
            graph = perturb_topology(graph, config.schedule.flip_prob, seed=int(topo_rng.integers(2 ** 32)))
            combination = uniform_combination_matrix(graph)
            changed = combination
            logger.info(f"Topology perturbed at iteration {i}")

        theta = config.schedule.theta_at(i, initial_theta)
        obs = sample_observations(models, theta, obs_rng)
        state.log_public = adapt_step(state.log_private, obs, models, config.delta)
        state.log_private = combine_step(state.log_public, combination)

        yield SimulationRecord(
            iteration=i,
            lam=log_belief_matrix(state.log_public, reference, i).values,
            map_estimates=np.argmax(state.log_public, axis=1),
            theta_star=theta,
            llr=llr_matrix(models, obs, reference) if config.record_llr else None,
            new_combination=changed,
        )


def run_simulation(config: SimulationConfig) -> SimulationTrace:
    """
    Simulate config.n_iters iterations and collect them into a SimulationTrace

    Args:
        config: Simulation configuration

    Returns:
        The trace; it satisfies Lambda_i = (1-delta) A^T Lambda_{i-1} + delta L_i at every step
    """
    models = config.models
    n, width = models.n_agents, models.n_hypotheses - 1
    lambdas = np.empty((config.n_iters, n, width))
    maps = np.empty((config.n_iters, n), dtype=int)
    thetas = np.empty(config.n_iters, dtype=int)
    llrs = np.empty((config.n_iters, n, width)) if config.record_llr else None
    changes: List[Tuple[int, CombinationMatrix]] = [(0, config.combination)]
    for record in iter_simulation(config):
        i = record.iteration
        if record.new_combination is not None:
            changes.append((i, record.new_combination))
        lambdas[i] = record.lam
        maps[i] = record.map_estimates
        thetas[i] = record.theta_star
        if llrs is not None:
            llrs[i] = record.llr

    trace = SimulationTrace(
        lambdas=lambdas,
        map_estimates=maps,
        theta_star=thetas,
        combination_changes=changes,
        delta=config.delta,
        seed=config.seed,
        burn_in=config.resolved_burn_in(),
        reference=models.hypotheses.reference_index,
        llrs=llrs,
    )
    if len(trace):
        trace.final_public = beliefs_from_log_ratios(trace.lambdas[-1], trace.reference)
    logger.info(f"Simulated {len(trace)} iterations (delta={config.delta}, {len(changes) - 1} topology change(s))")
    return trace


def majority_estimates(trace: SimulationTrace) -> np.ndarray:
    n_hypotheses = trace.lambdas.shape[2] + 1
    return np.array([majority_vote(row, n_hypotheses) for row in trace.map_estimates], dtype=int)


def correct_indicator(trace: SimulationTrace) -> np.ndarray:
    """1.0 where the network majority MAP estimate equals the true state of that iteration"""
    return (majority_estimates(trace) == trace.theta_star).astype(float)


def classification_rate(trace: SimulationTrace, start: int = 0) -> np.ndarray:
    """
    Running rate of correctly classified states, r_i = (1/i) sum_{t<=i} 1{majority MAP = theta_star(t)}

    Args:
        trace: Non-empty simulation trace
        start: First iteration counted

    Returns:
        Rates for iterations start..len(trace)-1
    """
    if len(trace) == 0:
        raise ValueError("trace is empty")
    correct = correct_indicator(trace)[start:]
    return np.cumsum(correct) / np.arange(1, correct.shape[0] + 1)
