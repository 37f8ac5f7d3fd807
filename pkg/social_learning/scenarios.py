"""
Built-in scenarios and the checks they embed
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from social_learning.experiment_harness import (
    CheckResult,
    LearnerArm,
    ModelArm,
    PerturbationPlan,
    ScenarioConfig,
    ScenarioResult,
    recovery_iterations,
    run_scenario,
    steady_value,
)
from social_learning.likelihood_models import LESS_INFLUENTIAL_SIGMA2

logger = logging.getLogger("scenarios")

TOPOLOGY_PERIOD = 1000
TOPOLOGY_WARMUP = 150_000
MSD_ITERATIONS = 300_000
INFLUENCE_ITERATIONS = 200_000
INFLUENCE_AVERAGE_TAIL = 0.5
LONG_RUN_CSV_STRIDE = 100
THETA_SWITCH_AT = 2000
SWITCHED_THETA = 2
RECOVERY_WINDOW = 50
RECOVERY_THRESHOLD = 0.9
RECOVERY_TOLERANCE = 3.0


def _arm_median(result: ScenarioResult, key: str, metric: str) -> float:
    return result.summary["arms"][key]["median"][metric]


def _strictly_increasing(values: Sequence[float]) -> bool:
    return all(a < b for a, b in zip(values, values[1:]))


def a_error_ordering(result: ScenarioResult) -> CheckResult:
    """known < M50 < M10 < M1 on seed-median steady a_error"""
    arms = ["known", "M50", "M10", "M1"]
    values = [_arm_median(result, f"default:{arm}", "a_error") for arm in arms]
    detail = ", ".join(f"{arm}={value:.4g}" for arm, value in zip(arms, values))
    return CheckResult("a_error_ordering", _strictly_increasing(values), detail)


def mu_scaling(result: ScenarioResult) -> CheckResult:
    full = _arm_median(result, "default:M50", "a_error")
    half = _arm_median(result, "default:M50_half", "a_error")
    ratio = full / half if half > 0 else float("inf")
    return CheckResult("mu_scaling", 1.4 <= ratio <= 3.0, f"ratio={ratio:.3f}")


def llr_error_ordering(result: ScenarioResult) -> CheckResult:
    """M1 > M10 > M50 on seed-median steady rolling llr_error"""
    arms = ["M1", "M10", "M50"]
    values = [_arm_median(result, f"default:{arm}", "llr_error") for arm in arms]
    detail = ", ".join(f"{arm}={value:.4g}" for arm, value in zip(arms, values))
    return CheckResult("llr_error_ordering", _strictly_increasing(values[::-1]), detail)


def top_k_influence(result: ScenarioResult) -> CheckResult:
    """Planted influencers hold the learned top-k on at least 80% of seeds"""
    per_seed = result.summary["arms"]["three_influential:M50"]["per_seed"]
    hits = sum(1 for entry in per_seed if entry.get("top_k_score") == 1.0)
    needed = math.ceil(0.8 * len(per_seed))
    return CheckResult("top_k_influence", hits >= needed, f"{hits}/{len(per_seed)} seeds with full overlap")


def kl_recovery(result: ScenarioResult) -> CheckResult:
    error = _arm_median(result, "three_influential:M50", "kl_relative_error")
    return CheckResult("kl_recovery", error < 0.25, f"worst relative error (seed median)={error:.3f}")


def rate_ordering(result: ScenarioResult) -> CheckResult:
    """Influential agents push the terminal rate above 0.9 and above the weak-only network"""
    strong = _arm_median(result, "influential:none", "r_terminal")
    weak = _arm_median(result, "weak:none", "r_terminal")
    return CheckResult("rate_ordering", strong > 0.9 and weak < strong, f"influential={strong:.3f}, weak={weak:.3f}")


def topology_recovery(result: ScenarioResult) -> CheckResult:
    """Before every perturbation the error is back within 2x its previous steady level"""
    period = result.config.perturbation.topology_period
    first = result.config.perturbation.topology_start + period
    ratios: List[float] = []
    series = result.select("default", "M50")
    boundaries = range(first, result.config.n_iterations - period + 1, period)
    for start in boundaries:
        per_seed = [
            steady_value(s.a_error[start:start + period]) / steady_value(s.a_error[start - period:start])
            for s in series
        ]
        ratios.append(float(np.median(per_seed)))
    passed = bool(ratios) and all(ratio <= 2.0 for ratio in ratios)
    return CheckResult("topology_recovery", passed, "ratios=" + ", ".join(f"{r:.3f}" for r in ratios))


def truth_recovery(result: ScenarioResult) -> CheckResult:
    """Rolling majority accuracy returns above 0.9 within the tolerated adaptation time"""
    switch = result.config.perturbation.theta_switches[0][0]
    bound = RECOVERY_TOLERANCE * 10.0 * math.log(2.0) / result.config.delta
    recoveries = []
    arm = result.config.learner_arms[0].label if result.config.learner_arms else "none"
    for s in result.select("default", arm):
        steps = recovery_iterations(s.correct, switch, RECOVERY_WINDOW, RECOVERY_THRESHOLD)
        recoveries.append(float("inf") if steps is None else float(steps))
    median = float(np.median(recoveries))
    return CheckResult("truth_recovery", median <= bound, f"median recovery={median:.0f} (bound {bound:.0f})")


def influence_report_emitted(result: ScenarioResult) -> CheckResult:
    n = result.config.n
    emitted = [
        outcome.seed for outcome in result.outcomes
        if outcome.reports and all(len(report.ranking) == n for report in outcome.reports.values())
    ]
    return CheckResult("influence_report_emitted", len(emitted) == len(result.outcomes),
                       f"{len(emitted)}/{len(result.outcomes)} seeds ranked {n} agents")


CHECKS: Dict[str, Callable[[ScenarioResult], CheckResult]] = {
    "a_error_ordering": a_error_ordering,
    "mu_scaling": mu_scaling,
    "llr_error_ordering": llr_error_ordering,
    "top_k_influence": top_k_influence,
    "kl_recovery": kl_recovery,
    "rate_ordering": rate_ordering,
    "topology_recovery": topology_recovery,
    "truth_recovery": truth_recovery,
    "influence_report_emitted": influence_report_emitted,
}


def _fig3_msd() -> ScenarioConfig:
    # long enough for M50 and M50_half to sit on their floors; M10 and M1 stay ordered by their slower transients
    return ScenarioConfig(
        name="fig3_msd",
        n_iterations=MSD_ITERATIONS,
        csv_stride=LONG_RUN_CSV_STRIDE,
        learner_arms=[
            LearnerArm(label="known", mu=0.1, M=50, known_llr=True),
            LearnerArm(label="M50", mu=0.1, M=50),
            LearnerArm(label="M10", mu=0.01, M=10),
            LearnerArm(label="M1", mu=0.001, M=1),
            LearnerArm(label="M50_half", mu=0.05, M=50),
        ],
        checks=["a_error_ordering", "mu_scaling"],
    )


def _fig4_llr() -> ScenarioConfig:
    return ScenarioConfig(
        name="fig4_llr",
        learner_arms=[
            LearnerArm(label="M1", mu=0.001, M=1),
            LearnerArm(label="M10", mu=0.01, M=10),
            LearnerArm(label="M50", mu=0.1, M=50),
        ],
        checks=["llr_error_ordering"],
    )


def _fig5_influence() -> ScenarioConfig:
    return ScenarioConfig(
        name="fig5_influence",
        n_iterations=INFLUENCE_ITERATIONS,
        csv_stride=LONG_RUN_CSV_STRIDE,
        model_arms=[ModelArm(label="three_influential", influential=[0, 1, 2])],
        learner_arms=[LearnerArm(label="M50", mu=0.1, M=50, average_tail=INFLUENCE_AVERAGE_TAIL)],
        checks=["top_k_influence", "kl_recovery"],
    )


def _fig6_rate() -> ScenarioConfig:
    return ScenarioConfig(
        name="fig6_rate",
        model_arms=[
            ModelArm(label="influential", influential=[0, 1, 2]),
            ModelArm(label="less_influential", influential=[0, 1, 2], influential_sigma2=LESS_INFLUENTIAL_SIGMA2),
            ModelArm(label="weak", influential=[]),
        ],
        learner_arms=[],
        checks=["rate_ordering"],
    )


def _fig7a_topology() -> ScenarioConfig:
    return ScenarioConfig(
        name="fig7a_topology",
        n_iterations=TOPOLOGY_WARMUP + 4 * TOPOLOGY_PERIOD,
        csv_stride=LONG_RUN_CSV_STRIDE,
        perturbation=PerturbationPlan(topology_period=TOPOLOGY_PERIOD, topology_start=TOPOLOGY_WARMUP,
                                      flip_prob=0.005),
        checks=["topology_recovery"],
    )


def _fig7b_truth() -> ScenarioConfig:
    return ScenarioConfig(
        name="fig7b_truth",
        n_iterations=2 * THETA_SWITCH_AT,
        perturbation=PerturbationPlan(theta_switches=[(THETA_SWITCH_AT, SWITCHED_THETA)]),
        learner_arms=[],
        checks=["truth_recovery"],
    )


def _twitter_synthetic() -> ScenarioConfig:
    return ScenarioConfig(
        name="twitter_synthetic",
        n=10,
        p=0.3,
        H=2,
        delta=0.0001,
        burn_in=100,
        n_iterations=3000,
        seeds=[0],
        learner_arms=[LearnerArm(label="W30", mu=0.0003, M=10, W=30, l1_weight=0.006)],
        checks=["influence_report_emitted"],
    )


BUILTIN_SCENARIOS: Dict[str, Callable[[], ScenarioConfig]] = {
    "fig3_msd": _fig3_msd,
    "fig4_llr": _fig4_llr,
    "fig5_influence": _fig5_influence,
    "fig6_rate": _fig6_rate,
    "fig7a_topology": _fig7a_topology,
    "fig7b_truth": _fig7b_truth,
    "twitter_synthetic": _twitter_synthetic,
}


def list_scenarios() -> List[str]:
    return list(BUILTIN_SCENARIOS)


def load_scenario(name_or_path: str, seeds: Optional[Sequence[int]] = None) -> ScenarioConfig:
    """
    Built-in scenario by name, or a ScenarioConfig JSON file

    Args:
        name_or_path: Scenario name or path to a JSON file
        seeds: Optional replacement seed list

    Returns:
        The validated ScenarioConfig
    """
    if name_or_path in BUILTIN_SCENARIOS:
        config = BUILTIN_SCENARIOS[name_or_path]()
    else:
        with open(name_or_path, "r", encoding="utf-8") as handle:
            config = ScenarioConfig.model_validate_json(handle.read())
    if seeds is not None:
        config = config.model_copy(update={"seeds": list(seeds)})
    return config


def run_named_scenario(name_or_path: str, workers: int = 1, seeds: Optional[Sequence[int]] = None) -> ScenarioResult:
    config = load_scenario(name_or_path, seeds)
    return run_scenario(config, workers=workers, checks=CHECKS)
