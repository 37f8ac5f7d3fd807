"""
Graph social learning (GSL): online estimation of the combination matrix and the
expected log-likelihood ratios from the stream of public log-belief matrices.

The learner keeps the last M+1 log-belief matrices. With Lambda_{i-M-1..i-1}
in the window, the update for a new Lambda_i is

    A_i = A_{i-1} + mu (1-delta) Delta_{i-1} (Lambda_i^T - (1-delta) Lambda_{i-1}^T A_{i-1} - delta Lhat_{i-1}^T)

after which the window shifts and Lhat_i is recomputed with A_i.
"""
import logging
import queue
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from social_learning.asl_simulator import SimulationConfig, SimulationTrace, iter_simulation
from social_learning.errors import DimensionMismatchError, SingularMomentError, WindowNotFilledError
from social_learning.graph_core import CombinationMatrix
from social_learning.likelihood_models import BernoulliLikelihood, expected_llr_matrix

logger = logging.getLogger("gsl_learner")

REFRESH_PERIOD = 10_000


class GslConfig(BaseModel):
    """Hyperparameters of the inverse learner"""
    model_config = ConfigDict(frozen=True)

    mu: float = Field(0.1, gt=0, description="SGD step-size")
    delta: float = Field(0.05, gt=0, lt=1, description="ASL adaptation step-size (known)")
    M: int = Field(50, ge=1, description="Window length of the log-likelihood estimator")
    W: int = Field(1, ge=1, description="Mini-batch window")
    l1_weight: float = Field(0.0, ge=0, description="l1 regularization weight alpha")
    burn_in: int = Field(0, ge=0, description="Leading matrices ignored by the learner")
    known_llr: bool = Field(False, description="Use the true expected LLR matrix instead of estimating it")
    average_from: Optional[int] = Field(
        None, ge=0, description="Matrices observed before iterate averaging starts (None disables averaging)")

    @property
    def uses_minibatch(self) -> bool:
        return self.W > 1 or self.l1_weight > 0


@dataclass
class LearnerState:
    a_estimate: np.ndarray
    llr_estimate: np.ndarray
    window: Deque[np.ndarray]
    window_sum: np.ndarray
    iteration: int = 0
    pending: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def initial(cls, n_agents: int, width: int, M: int) -> "LearnerState":
        """A_0 uniform (every entry 1/N), Lhat_0 zero, empty window"""
        return cls(
            a_estimate=np.full((n_agents, n_agents), 1.0 / n_agents),
            llr_estimate=np.zeros((n_agents, width)),
            window=deque(maxlen=M + 1),
            window_sum=np.zeros((n_agents, width)),
        )

    @property
    def M(self) -> int:
        return self.window.maxlen - 1

    def is_filled(self) -> bool:
        return len(self.window) == self.window.maxlen


def push_window(state: LearnerState, lam: np.ndarray) -> None:
    """Append the newest matrix, keeping the running window sum in step"""
    lam = np.asarray(lam, dtype=float)
    if state.is_filled():
        state.window_sum -= state.window[0]
    state.window.append(lam)
    state.window_sum += lam
    state.iteration += 1
    if state.iteration % REFRESH_PERIOD == 0:
        state.window_sum = np.sum(state.window, axis=0)
        logger.debug(f"Window sum recomputed at iteration {state.iteration}")


def delta_matrix(window: Sequence[np.ndarray]) -> np.ndarray:
    """
    Delta_i = Lambda_i - mean of the M matrices before it

    Args:
        window: The M+1 most recent matrices, oldest first

    Returns:
        N x (H-1) matrix Delta for the newest entry of the window
    """
    if len(window) < 2:
        raise WindowNotFilledError(f"need at least 2 matrices, window holds {len(window)}")
    stacked = np.asarray(window, dtype=float)
    return stacked[-1] - stacked[:-1].mean(axis=0)


def current_delta(state: LearnerState) -> np.ndarray:
    """Delta of the newest window entry, from the running window sum"""
    newest = state.window[-1]
    return newest - (state.window_sum - newest) / state.M


def llr_estimate(window: Sequence[np.ndarray], a: np.ndarray, delta: float, M: int) -> np.ndarray:
    """
    Windowed estimate of the expected log-likelihood ratio matrix,
    (1/(delta M)) sum_j (Lambda_j - (1-delta) A^T Lambda_{j-1}) over the M newest pairs

    Args:
        window: M+1 matrices, oldest first
        a: Current combination matrix estimate
        delta: ASL step-size
        M: Window length

    Returns:
        N x (H-1) estimate
    """
    if len(window) != M + 1:
        raise WindowNotFilledError(f"need {M + 1} matrices, window holds {len(window)}")
    stacked = np.asarray(window, dtype=float)
    newer = stacked[1:].sum(axis=0)
    older = stacked[:-1].sum(axis=0)
    return (newer - (1.0 - delta) * a.T @ older) / (delta * M)


def _incremental_llr(state: LearnerState, a: np.ndarray, delta: float) -> np.ndarray:
    newer = state.window_sum - state.window[0]
    older = state.window_sum - state.window[-1]
    return (newer - (1.0 - delta) * a.T @ older) / (delta * state.M)


def analytic_gradient(lam_i: np.ndarray, lam_prev: np.ndarray, delta_prev: np.ndarray,
                      llr_prev: np.ndarray, a: np.ndarray, delta: float) -> np.ndarray:
    """
    Gradient of the windowed cost with respect to A,
    -(1-delta) Delta_{i-1} (Lambda_i^T - (1-delta) Lambda_{i-1}^T A - delta Lhat_{i-1}^T).

    When Lhat_{i-1} is the window estimate taken with the same A, the bracket equals
    (Delta_i - (1-delta) A^T Delta_{i-1})^T and this is the exact gradient of risk_cost.
    """
    residual = lam_i - (1.0 - delta) * a.T @ lam_prev - delta * llr_prev
    return -(1.0 - delta) * delta_prev @ residual.T


def risk_cost(a: np.ndarray, delta_i: np.ndarray, delta_prev: np.ndarray, delta: float) -> float:
    """0.5 ||Delta_i - (1-delta) A^T Delta_{i-1}||_F^2"""
    residual = delta_i - (1.0 - delta) * a.T @ delta_prev
    return 0.5 * float(np.sum(residual ** 2))


def _require_filled(state: LearnerState) -> None:
    if not state.is_filled():
        raise WindowNotFilledError(
            f"learner window holds {len(state.window)} of {state.window.maxlen} matrices"
        )


def _gradient(state: LearnerState, lam_i: np.ndarray, llr_prev: np.ndarray, delta: float) -> np.ndarray:
    return analytic_gradient(lam_i, state.window[-1], current_delta(state), llr_prev,
                             state.a_estimate, delta)


def sgd_step(state: LearnerState, lam_i: np.ndarray, config: GslConfig) -> LearnerState:
    """
    One GSL iteration: update A with Lhat_{i-1}, shift the window, recompute Lhat_i with the new A

    Args:
        state: Learner state with a filled window
        lam_i: Newest log-belief matrix
        config: Learner hyperparameters

    Returns:
        The updated state
    """
    _require_filled(state)
    gradient = _gradient(state, lam_i, state.llr_estimate, config.delta)
    state.a_estimate = state.a_estimate - config.mu * gradient
    push_window(state, lam_i)
    state.llr_estimate = _incremental_llr(state, state.a_estimate, config.delta)
    return state


def sgd_step_known_llr(state: LearnerState, lam_i: np.ndarray, llr_bar: np.ndarray,
                       config: GslConfig) -> LearnerState:
    """Same update as sgd_step with the true expected LLR matrix in place of Lhat"""
    _require_filled(state)
    gradient = _gradient(state, lam_i, np.asarray(llr_bar, dtype=float), config.delta)
    state.a_estimate = state.a_estimate - config.mu * gradient
    push_window(state, lam_i)
    return state


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def minibatch_prox_step(state: LearnerState, gradients: Sequence[np.ndarray], config: GslConfig) -> LearnerState:
    """
    Averaged-gradient step followed by soft-thresholding every entry of A by mu * alpha.

    The window is expected to have advanced past every matrix whose gradient is in
    the batch; Lhat is recomputed with the new A.
    """
    if len(gradients):
        state.a_estimate = state.a_estimate - config.mu * np.mean(gradients, axis=0)
    state.a_estimate = soft_threshold(state.a_estimate, config.mu * config.l1_weight)
    state.llr_estimate = _incremental_llr(state, state.a_estimate, config.delta)
    return state


def closed_form_minimizer(cov_prev: np.ndarray, cross: np.ndarray, delta: float) -> np.ndarray:
    """
    Unique minimizer of the expected windowed cost,
    (1/(1-delta)) (E Delta_{i-1} Delta_{i-1}^T)^{-1} E Delta_{i-1} Delta_i^T

    Args:
        cov_prev: Sample estimate of E Delta_{i-1} Delta_{i-1}^T (N x N)
        cross: Sample estimate of E Delta_{i-1} Delta_i^T (N x N)
        delta: ASL step-size

    Returns:
        N x N minimizer
    """
    cov_prev = np.atleast_2d(np.asarray(cov_prev, dtype=float))
    cross = np.atleast_2d(np.asarray(cross, dtype=float))
    if np.linalg.matrix_rank(cov_prev) < cov_prev.shape[0]:
        raise SingularMomentError("moment matrix E Delta Delta^T is singular")
    condition = np.linalg.cond(cov_prev)
    if condition > 1e10:
        logger.warning(f"Moment matrix is ill-conditioned (condition number {condition:.3g})")
    return linalg.solve(cov_prev, cross, assume_a="sym") / (1.0 - delta)


def delta_moments(lambdas: np.ndarray, M: int):
    """
    Sample moments E Delta_{i-1} Delta_{i-1}^T and E Delta_{i-1} Delta_i^T over a log-belief sequence

    Args:
        lambdas: T x N x (H-1) sequence (steady state)
        M: Window length

    Returns:
        (cov_prev, cross), both N x N
    """
    lambdas = np.asarray(lambdas, dtype=float)
    T = lambdas.shape[0]
    if T < M + 2:
        raise WindowNotFilledError(f"need at least {M + 2} matrices, got {T}")
    cumulative = np.concatenate([np.zeros_like(lambdas[:1]), np.cumsum(lambdas, axis=0)])
    deltas = lambdas[M:] - (cumulative[M:T] - cumulative[:T - M]) / M
    previous, current = deltas[:-1], deltas[1:]
    count = previous.shape[0]
    cov_prev = np.einsum("tkj,tlj->kl", previous, previous) / count
    cross = np.einsum("tkj,tlj->kl", previous, current) / count
    return cov_prev, cross


def reconstruction_error(a_estimate: np.ndarray, a_true: np.ndarray) -> float:
    """Squared Frobenius norm of the difference"""
    a_estimate = np.asarray(getattr(a_estimate, "weights", a_estimate), dtype=float)
    a_true = np.asarray(getattr(a_true, "weights", a_true), dtype=float)
    if a_estimate.shape != a_true.shape:
        raise DimensionMismatchError(f"shapes differ: {a_estimate.shape} vs {a_true.shape}")
    return float(np.sum((a_estimate - a_true) ** 2))


class GslLearner:
    """Drives the step functions over a stream of log-belief matrices"""

    def __init__(self, config: GslConfig, n_agents: int, width: int):
        """
        Args:
            config: Learner hyperparameters
            n_agents: Number of agents N
            width: Columns of the log-belief matrices (H-1)
        """
        self.config = config
        self.state = LearnerState.initial(n_agents, width, config.M)
        self.seen = 0
        self.averaged = 0
        self.a_average: Optional[np.ndarray] = None
        self.llr_average: Optional[np.ndarray] = None

    @property
    def a_estimate(self) -> np.ndarray:
        return self.state.a_estimate

    @property
    def llr_estimate(self) -> np.ndarray:
        return self.state.llr_estimate

    def observe(self, lam: np.ndarray, llr_known: Optional[np.ndarray] = None) -> bool:
        """
        Feed the next matrix in forward order

        Args:
            lam: Newest log-belief matrix
            llr_known: True expected LLR matrix, required when config.known_llr is set

        Returns:
            True when the combination matrix estimate was updated
        """
        updated = self._advance(lam, llr_known)
        start = self.config.average_from
        if start is not None and self.seen > start and self.state.is_filled():
            self._accumulate_average()
        return updated

    def _accumulate_average(self) -> None:
        """Running (Ruppert-Polyak) mean of the iterates since config.average_from"""
        self.averaged += 1
        if self.a_average is None:
            self.a_average = self.state.a_estimate.copy()
            self.llr_average = self.state.llr_estimate.copy()
            return
        weight = 1.0 / self.averaged
        self.a_average += weight * (self.state.a_estimate - self.a_average)
        self.llr_average += weight * (self.state.llr_estimate - self.llr_average)

    def _advance(self, lam: np.ndarray, llr_known: Optional[np.ndarray]) -> bool:
        self.seen += 1
        if self.seen <= self.config.burn_in:
            return False
        state = self.state
        if not state.is_filled():
            push_window(state, lam)
            return False

        if self.config.known_llr:
            if llr_known is None:
                raise ValueError("known_llr learner needs the true expected LLR matrix")
            sgd_step_known_llr(state, lam, llr_known, self.config)
            return True
        if not self.config.uses_minibatch:
            sgd_step(state, lam, self.config)
            return True

        state.pending.append(_gradient(state, lam, state.llr_estimate, self.config.delta))
        push_window(state, lam)
        if len(state.pending) < self.config.W:
            state.llr_estimate = _incremental_llr(state, state.a_estimate, self.config.delta)
            return False
        minibatch_prox_step(state, state.pending, self.config)
        state.pending = []
        return True


@dataclass(frozen=True)
class GroundTruth:
    """Combination matrix and expected LLR matrix in effect at each absolute iteration"""
    combination_changes: List
    theta_star: np.ndarray
    llr_by_theta: Dict[int, np.ndarray]

    @classmethod
    def from_parts(cls, combination_changes: Sequence, theta_star: Sequence[int],
                   models: BernoulliLikelihood) -> "GroundTruth":
        thetas = sorted(set(int(t) for t in theta_star))
        return cls(
            combination_changes=list(combination_changes),
            theta_star=np.asarray(theta_star, dtype=int),
            llr_by_theta={t: expected_llr_matrix(models, t) for t in thetas},
        )

    @classmethod
    def from_trace(cls, trace: SimulationTrace, models: BernoulliLikelihood) -> "GroundTruth":
        return cls.from_parts(trace.combination_changes, trace.theta_star, models)

    def a_at(self, i: int) -> CombinationMatrix:
        current = self.combination_changes[0][1]
        for start, matrix in self.combination_changes:
            if start <= i:
                current = matrix
        return current

    def llr_at(self, i: int) -> np.ndarray:
        return self.llr_by_theta[int(self.theta_star[i])]


@dataclass
class LearnerRun:
    a_estimate: np.ndarray
    llr_estimate: np.ndarray
    a_error: np.ndarray
    llr_error: np.ndarray
    a_average: Optional[np.ndarray] = None
    llr_average: Optional[np.ndarray] = None

    def report_estimates(self):
        """(A, Lhat) for influence analysis: the iterate averages when averaging ran, else the final iterates"""
        if self.a_average is not None:
            return self.a_average, self.llr_average
        return self.a_estimate, self.llr_estimate


def run_learner(lambdas: np.ndarray, config: GslConfig, truth: Optional[GroundTruth] = None) -> LearnerRun:
    """
    Consume a log-belief sequence in forward order

    Args:
        lambdas: T x N x (H-1) sequence, burn-in included
        config: Learner hyperparameters (config.burn_in leading matrices are skipped)
        truth: Optional ground truth for per-iteration errors

    Returns:
        Final estimates plus a_error / llr_error for each iteration after burn-in
        (NaN without ground truth; llr_error is NaN for the known-LLR baseline)
    """
    lambdas = np.asarray(lambdas, dtype=float)
    T, n_agents, width = lambdas.shape
    if config.known_llr and truth is None:
        raise ValueError("the known-LLR baseline needs ground truth")
    learner = GslLearner(config, n_agents, width)
    steps = max(T - config.burn_in, 0)
    a_error = np.full(steps, np.nan)
    llr_error = np.full(steps, np.nan)
    for i in range(T):
        llr_known = truth.llr_at(i) if config.known_llr else None
        learner.observe(lambdas[i], llr_known)
        if i < config.burn_in or truth is None:
            continue
        t = i - config.burn_in
        a_error[t] = reconstruction_error(learner.a_estimate, truth.a_at(i))
        if not config.known_llr:
            llr_error[t] = reconstruction_error(learner.llr_estimate, truth.llr_at(i))

    return LearnerRun(learner.a_estimate.copy(), learner.llr_estimate.copy(), a_error, llr_error,
                      learner.a_average, learner.llr_average)


_END = object()


def stream_learn(sim_config: SimulationConfig, config: GslConfig, maxsize: int = 256) -> GslLearner:
    """
    Run the simulator in a producer thread and learn from its output as it arrives.

    The bounded queue blocks the simulator whenever the learner falls behind.
    """
    models = sim_config.models
    channel: "queue.Queue" = queue.Queue(maxsize=maxsize)
    llr_cache: Dict[int, np.ndarray] = {}

    def produce():
        try:
            for record in iter_simulation(sim_config):
                channel.put(record)
        except Exception as e:  # handed to the consumer
            channel.put(e)
        finally:
            channel.put(_END)

    producer = threading.Thread(target=produce, name="asl-simulator", daemon=True)
    producer.start()
    learner = GslLearner(config, models.n_agents, models.n_hypotheses - 1)
    while True:
        item = channel.get()
        if item is _END:
            break
        if isinstance(item, Exception):
            producer.join()
            raise item
        llr_known = None
        if config.known_llr:
            if item.theta_star not in llr_cache:
                llr_cache[item.theta_star] = expected_llr_matrix(models, item.theta_star)
            llr_known = llr_cache[item.theta_star]
        learner.observe(item.lam, llr_known)
    producer.join()
    logger.info(f"Streamed {learner.seen} matrices through the learner")
    return learner
