"""
Config-driven experiments: generate -> simulate -> learn -> analyze over seeds and arms
"""
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from social_learning.asl_simulator import (
    PerturbationSchedule,
    SimulationConfig,
    SimulationTrace,
    classification_rate,
    correct_indicator,
    default_burn_in,
    run_simulation,
)
from social_learning.graph_core import (
    CombinationMatrix,
    DirectedGraph,
    generate_erdos_renyi,
    uniform_combination_matrix,
)
from social_learning.gsl_learner import GroundTruth, GslConfig, LearnerState, reconstruction_error, run_learner
from social_learning.influence_analyzer import (
    InfluenceReport,
    build_influence_report,
    ground_truth_report,
    top_k_overlap,
)
from social_learning.likelihood_models import (
    BASE_SIGMA2,
    INFLUENTIAL_SIGMA2,
    BernoulliLikelihood,
    generate_identifiable_models,
)

logger = logging.getLogger("experiment_harness")

KL_SUM_FLOOR = 0.1


class LearnerArm(BaseModel):
    label: str
    mu: float = Field(gt=0)
    M: int = Field(ge=1)
    W: int = Field(1, ge=1)
    l1_weight: float = Field(0.0, ge=0)
    known_llr: bool = False
    average_tail: float = Field(0.0, ge=0, lt=1,
                                description="Final fraction of iterations averaged for the influence report")


class ModelArm(BaseModel):
    label: str = "default"
    influential: List[int] = Field(default_factory=lambda: [0, 1, 2])
    influential_sigma2: float = Field(INFLUENTIAL_SIGMA2, gt=0)
    base_sigma2: float = Field(BASE_SIGMA2, gt=0)


class PerturbationPlan(BaseModel):
    """Environment changes, in iterations after burn-in"""
    topology_period: Optional[int] = Field(None, ge=1)
    topology_start: int = Field(0, ge=0, description="Iterations before the first topology period begins")
    flip_prob: float = Field(0.005, ge=0, lt=1)
    theta_switches: List[Tuple[int, int]] = Field(default_factory=list)


class ScenarioConfig(BaseModel):
    name: str
    n: int = Field(20, ge=2)
    p: float = Field(0.2, gt=0, lt=1)
    H: int = Field(5, ge=2)
    theta_star: int = Field(1, ge=0)
    delta: float = Field(0.05, gt=0, lt=1)
    model_arms: List[ModelArm] = Field(default_factory=lambda: [ModelArm()])
    learner_arms: List[LearnerArm] = Field(default_factory=lambda: [LearnerArm(label="M50", mu=0.1, M=50)])
    n_iterations: int = Field(5000, ge=0, description="Iterations after burn-in")
    burn_in: Optional[int] = Field(None, ge=0)
    seeds: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    perturbation: PerturbationPlan = Field(default_factory=PerturbationPlan)
    rolling_window: int = Field(50, ge=1)
    csv_stride: int = Field(1, ge=1, description="Every csv_stride-th iteration is written to the metrics CSV")
    checks: List[str] = Field(default_factory=list)

    def resolved_burn_in(self) -> int:
        return default_burn_in(self.delta) if self.burn_in is None else self.burn_in

    def schedule(self) -> PerturbationSchedule:
        burn_in = self.resolved_burn_in()
        return PerturbationSchedule(
            topology_period=self.perturbation.topology_period,
            topology_offset=burn_in + self.perturbation.topology_start,
            flip_prob=self.perturbation.flip_prob,
            theta_switches=tuple((burn_in + t, theta) for t, theta in self.perturbation.theta_switches),
        )

    def gsl_config(self, arm: LearnerArm) -> GslConfig:
        burn_in = self.resolved_burn_in()
        average_from = None
        if arm.average_tail > 0:
            average_from = burn_in + int(round((1.0 - arm.average_tail) * self.n_iterations))
        return GslConfig(mu=arm.mu, delta=self.delta, M=arm.M, W=arm.W, l1_weight=arm.l1_weight,
                         burn_in=burn_in, known_llr=arm.known_llr, average_from=average_from)


@dataclass
class MetricSeries:
    """Per-iteration metrics of one (model arm, learner arm, seed) run, after burn-in"""
    run_id: str
    model_arm: str
    learner_arm: str
    seed: int
    a_error: np.ndarray
    llr_error: np.ndarray
    r: np.ndarray
    correct: np.ndarray
    initial_a_error: float
    llr_error_rolling: Optional[np.ndarray] = None


@dataclass
class SeedOutcome:
    seed: int
    series: List[MetricSeries]
    reports: Dict[str, InfluenceReport] = field(default_factory=dict)
    truth_reports: Dict[str, InfluenceReport] = field(default_factory=dict)
    planted: Dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    outcomes: List[SeedOutcome]
    summary: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def series(self) -> List[MetricSeries]:
        return [s for outcome in self.outcomes for s in outcome.series]

    def select(self, model_arm: str, learner_arm: str) -> List[MetricSeries]:
        return [s for s in self.series if s.model_arm == model_arm and s.learner_arm == learner_arm]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def rolling_mean(series: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over min(window, index + 1) values"""
    if window < 1:
        raise ValueError("window must be at least 1")
    return pd.Series(np.asarray(series, dtype=float)).rolling(window, min_periods=1).mean().to_numpy()


def steady_value(series: np.ndarray, fraction: float = 0.1) -> float:
    """Median over the final fraction of a series (NaN for an empty series)"""
    series = np.asarray(series, dtype=float)
    if series.size == 0:
        return float("nan")
    tail = max(1, int(np.ceil(fraction * series.size)))
    return float(np.median(series[-tail:]))


def recovery_iterations(indicator: np.ndarray, start: int, window: int = 50, threshold: float = 0.9) -> Optional[int]:
    """
    Iterations after start until the trailing mean of indicator over a full window reaches threshold

    Returns:
        The count, or None if the series never recovers
    """
    indicator = np.asarray(indicator, dtype=float)
    for end in range(start + window, indicator.size + 1):
        if indicator[end - window:end].mean() >= threshold:
            return end - start
    return None


def compare_influence(report: InfluenceReport, models: BernoulliLikelihood, a_true, k: int) -> float:
    """Top-k overlap between the learned ranking and the exact-input ranking"""
    truth = ground_truth_report(a_true, models)
    return top_k_overlap(report.ranking, truth.ranking, k)


def kl_relative_error(report: InfluenceReport, truth: InfluenceReport, floor: float = KL_SUM_FLOOR) -> float:
    """Worst relative L1 error of recovered KL rows among agents whose true KL sum exceeds floor"""
    sums = truth.kl.sum(axis=1)
    informative = sums > floor
    if not np.any(informative):
        return float("nan")
    errors = np.abs(report.kl - truth.kl).sum(axis=1)[informative] / sums[informative]
    return float(errors.max())


def _child_seed(sequence: np.random.SeedSequence) -> int:
    return int(sequence.generate_state(1)[0])


@dataclass
class SimulatedArm:
    graph: DirectedGraph
    a_true: CombinationMatrix
    models: BernoulliLikelihood
    trace: SimulationTrace


def simulate_arm(config: ScenarioConfig, seed: int, model_arm: ModelArm) -> SimulatedArm:
    """
    Graph, models and trace of one model arm under one seed

    Graph, model and simulation seeds are spawned from the master seed, so
    every arm of a seed shares the graph and the observation stream.
    """
    graph_seq, model_seq, sim_seq = np.random.SeedSequence(seed).spawn(3)
    graph = generate_erdos_renyi(config.n, config.p, seed=_child_seed(graph_seq))
    a_true = uniform_combination_matrix(graph)
    models = generate_identifiable_models(
        config.n, config.H, model_arm.influential, seed=_child_seed(model_seq),
        true_index=config.theta_star, influential_sigma2=model_arm.influential_sigma2,
        base_sigma2=model_arm.base_sigma2,
    )
    burn_in = config.resolved_burn_in()
    trace = run_simulation(SimulationConfig(
        combination=a_true, models=models, delta=config.delta, n_iters=burn_in + config.n_iterations,
        burn_in=burn_in, schedule=config.schedule(), seed=_child_seed(sim_seq),
    ))
    return SimulatedArm(graph=graph, a_true=a_true, models=models, trace=trace)


def run_seed(config: ScenarioConfig, seed: int) -> SeedOutcome:
    """
    One seed of a scenario across every model arm and learner arm

    Args:
        config: Scenario configuration
        seed: Master seed

    Returns:
        Metric series and influence reports of every arm combination
    """
    burn_in = config.resolved_burn_in()
    outcome = SeedOutcome(seed=seed, series=[])
    initial_a = LearnerState.initial(config.n, config.H - 1, 1).a_estimate

    for model_arm in config.model_arms:
        simulated = simulate_arm(config, seed, model_arm)
        a_true, models, trace = simulated.a_true, simulated.models, simulated.trace
        correct = correct_indicator(trace)[burn_in:] if len(trace) else np.zeros(0)
        r = classification_rate(trace, start=burn_in) if len(trace) else np.zeros(0)
        truth = GroundTruth.from_trace(trace, models) if len(trace) else None
        initial_error = reconstruction_error(initial_a, a_true)
        outcome.planted[model_arm.label] = len(model_arm.influential)

        learner_arms = config.learner_arms or [None]
        for arm in learner_arms:
            label = arm.label if arm is not None else "none"
            if arm is None or truth is None:
                a_error = llr_error = np.full(correct.size, np.nan)
                learned = None
            else:
                learned = run_learner(trace.lambdas, config.gsl_config(arm), truth)
                a_error, llr_error = learned.a_error, learned.llr_error
            outcome.series.append(MetricSeries(
                run_id=f"{config.name}:{model_arm.label}:{label}", model_arm=model_arm.label,
                learner_arm=label, seed=seed, a_error=a_error, llr_error=llr_error, r=r, correct=correct,
                initial_a_error=initial_error, llr_error_rolling=rolling_mean(llr_error, config.rolling_window),
            ))
            if learned is not None and not arm.known_llr and trace.final_public is not None:
                key = f"{model_arm.label}:{label}"
                a_report, llr_report = learned.report_estimates()
                outcome.reports[key] = build_influence_report(
                    a_report, llr_report, trace.final_public, trace.reference)
                outcome.truth_reports[key] = ground_truth_report(
                    trace.matrix_at(len(trace) - 1), models, int(trace.theta_star[-1]))

    logger.info(f"Scenario {config.name}: seed {seed} finished")
    return outcome


def summarize(config: ScenarioConfig, outcomes: List[SeedOutcome]) -> Dict[str, Any]:
    """Seed-median steady metrics per arm combination"""
    summary: Dict[str, Any] = {"scenario": config.name, "seeds": [o.seed for o in outcomes], "arms": {}}
    keys = []
    for outcome in outcomes:
        for s in outcome.series:
            if (s.model_arm, s.learner_arm) not in keys:
                keys.append((s.model_arm, s.learner_arm))

    for model_arm, learner_arm in keys:
        per_seed = []
        for outcome in outcomes:
            for s in outcome.series:
                if s.model_arm != model_arm or s.learner_arm != learner_arm:
                    continue
                key = f"{model_arm}:{learner_arm}"
                entry = {
                    "seed": s.seed,
                    "a_error": steady_value(s.a_error) if s.a_error.size else s.initial_a_error,
                    "llr_error": steady_value(s.llr_error_rolling if s.llr_error_rolling is not None else s.llr_error),
                    "r_terminal": float(s.r[-1]) if s.r.size else float("nan"),
                }
                if key in outcome.reports:
                    report, truth = outcome.reports[key], outcome.truth_reports[key]
                    k = max(outcome.planted.get(model_arm, 1), 1)
                    entry["top_k_score"] = top_k_overlap(report.ranking, truth.ranking, k)
                    entry["kl_relative_error"] = kl_relative_error(report, truth)
                per_seed.append(entry)
        medians = {
            metric: float(np.nanmedian([e.get(metric, np.nan) for e in per_seed]))
            if not all(np.isnan(e.get(metric, np.nan)) for e in per_seed) else float("nan")
            for metric in ("a_error", "llr_error", "r_terminal", "top_k_score", "kl_relative_error")
        }
        summary["arms"][f"{model_arm}:{learner_arm}"] = {"median": medians, "per_seed": per_seed}
    return summary


def run_scenario(config: ScenarioConfig, workers: int = 1,
                 checks: Optional[Dict[str, Callable[[ScenarioResult], CheckResult]]] = None) -> ScenarioResult:
    """
    Run every seed of a scenario and evaluate its embedded checks

    Args:
        config: Scenario configuration
        workers: Processes for the seeds (1 runs them in this process)
        checks: Check registry used to resolve config.checks

    Returns:
        ScenarioResult with outcomes ordered by seed
    """
    logger.info(f"Running scenario {config.name} over seeds {config.seeds} with {workers} worker(s)")
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_seed, [config] * len(config.seeds), config.seeds))
    else:
        outcomes = [run_seed(config, seed) for seed in config.seeds]
    outcomes.sort(key=lambda outcome: outcome.seed)

    result = ScenarioResult(config=config, outcomes=outcomes, summary=summarize(config, outcomes))
    for name in config.checks:
        if checks is None or name not in checks:
            result.checks.append(CheckResult(name, False, "unknown check"))
            continue
        check = checks[name](result)
        logger.info(f"Check {check.name}: {'pass' if check.passed else 'FAIL'} ({check.detail})")
        result.checks.append(check)
    result.summary["checks"] = [
        {"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks
    ]
    return result


def metrics_frame(result: ScenarioResult) -> pd.DataFrame:
    """Long-format metrics with columns run_id,seed,i,a_error,llr_error,r_i"""
    stride = result.config.csv_stride
    frames = [
        pd.DataFrame({
            "run_id": s.run_id,
            "seed": s.seed,
            "i": np.arange(s.r.size)[::stride],
            "a_error": s.a_error[::stride],
            "llr_error": s.llr_error[::stride],
            "r_i": s.r[::stride],
        })
        for s in result.series
    ]
    if not frames:
        return pd.DataFrame(columns=["run_id", "seed", "i", "a_error", "llr_error", "r_i"])
    return pd.concat(frames, ignore_index=True)


def _json_default(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value)}")


def write_outputs(result: ScenarioResult, out_dir: str) -> Dict[str, str]:
    """
    Write <name>.csv, <name>_summary.json and <name>_influence.json

    Returns:
        Paths written, keyed by kind
    """
    os.makedirs(out_dir, exist_ok=True)
    name = result.config.name
    paths = {
        "metrics": os.path.join(out_dir, f"{name}.csv"),
        "summary": os.path.join(out_dir, f"{name}_summary.json"),
        "influence": os.path.join(out_dir, f"{name}_influence.json"),
    }
    metrics_frame(result).to_csv(paths["metrics"], index=False)
    with open(paths["summary"], "w") as handle:
        json.dump(result.summary, handle, indent=2, default=_json_default)
    influence = {
        str(outcome.seed): {key: report.to_dict() for key, report in outcome.reports.items()}
        for outcome in result.outcomes
    }
    with open(paths["influence"], "w") as handle:
        json.dump(influence, handle, indent=2, default=_json_default)
    logger.info(f"Wrote scenario {name} outputs to {out_dir}")
    return paths
