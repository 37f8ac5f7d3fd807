"""
Tests for scenario configs, metric helpers and scenario runs
"""
import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from social_learning.experiment_harness import (
    LearnerArm,
    ModelArm,
    PerturbationPlan,
    ScenarioConfig,
    compare_influence,
    kl_relative_error,
    metrics_frame,
    recovery_iterations,
    rolling_mean,
    run_scenario,
    simulate_arm,
    steady_value,
    write_outputs,
)
from social_learning.influence_analyzer import ground_truth_report


def _small_config(**overrides):
    values = dict(
        name="small", n=6, p=0.4, H=3, n_iterations=120, burn_in=20, seeds=[3],
        learner_arms=[LearnerArm(label="M5", mu=0.05, M=5)],
    )
    values.update(overrides)
    return ScenarioConfig(**values)


def test_rolling_mean_examples():
    values = rolling_mean(np.arange(1, 11), 3)
    assert values[0] == 1.0
    assert values[1] == 1.5
    assert values[9] == 9.0
    assert_allclose(rolling_mean([2.0, 4.0], 1), [2.0, 4.0])
    with pytest.raises(ValueError):
        rolling_mean([1.0], 0)


def test_steady_value():
    assert steady_value(np.arange(100.0)) == pytest.approx(94.5)
    assert steady_value(np.array([3.0])) == 3.0
    assert np.isnan(steady_value(np.array([])))


def test_recovery_iterations():
    indicator = np.concatenate([np.ones(100), np.zeros(20), np.ones(200)])
    assert recovery_iterations(indicator, start=100, window=50, threshold=0.9) == 65
    assert recovery_iterations(np.zeros(300), start=100) is None


def test_kl_relative_error(reference_combination, reference_models):
    truth = ground_truth_report(reference_combination, reference_models)
    assert kl_relative_error(truth, truth) == 0.0
    assert np.isnan(kl_relative_error(truth, truth, floor=1e6))


def test_compare_influence(reference_combination, reference_models):
    truth = ground_truth_report(reference_combination, reference_models)
    assert compare_influence(truth, reference_models, reference_combination, k=3) == 1.0
    reversed_report = replace(truth, ranking=truth.ranking[::-1].copy())
    assert compare_influence(reversed_report, reference_models, reference_combination, k=3) == 0.0


def test_config_defaults_and_validation():
    config = ScenarioConfig(name="defaults")
    assert (config.n, config.p, config.H, config.theta_star, config.delta) == (20, 0.2, 5, 1, 0.05)
    assert config.resolved_burn_in() == 139
    assert config.seeds == [0, 1, 2, 3, 4]
    with pytest.raises(ValueError):
        ScenarioConfig(name="bad", seeds=[])
    with pytest.raises(ValueError):
        LearnerArm(label="bad", mu=0.0, M=5)


def test_schedule_is_shifted_by_burn_in():
    config = _small_config(perturbation=PerturbationPlan(topology_period=100, theta_switches=[(50, 2)]))
    schedule = config.schedule()
    assert schedule.topology_offset == 20
    assert schedule.theta_switches == ((70, 2),)
    assert schedule.topology_change_at(120)


def test_topology_start_delays_first_perturbation():
    plan = PerturbationPlan(topology_period=100, topology_start=30)
    schedule = _small_config(perturbation=plan).schedule()
    assert schedule.topology_offset == 50
    assert not any(schedule.topology_change_at(i) for i in range(150))
    assert schedule.topology_change_at(150)
    assert schedule.topology_change_at(250)


def test_gsl_config_average_tail():
    config = _small_config()
    assert config.gsl_config(LearnerArm(label="M5", mu=0.05, M=5)).average_from is None
    averaged = config.gsl_config(LearnerArm(label="M5", mu=0.05, M=5, average_tail=0.25))
    assert averaged.average_from == 20 + 90
    with pytest.raises(ValueError):
        LearnerArm(label="bad", mu=0.05, M=5, average_tail=1.0)


def test_averaged_arm_keeps_raw_error_series():
    plain = run_scenario(_small_config())
    averaged = run_scenario(_small_config(learner_arms=[LearnerArm(label="M5", mu=0.05, M=5, average_tail=0.5)]))
    assert_allclose(averaged.series[0].a_error, plain.series[0].a_error)
    report = averaged.outcomes[0].reports["default:M5"]
    assert len(report.ranking) == 6
    assert not np.allclose(report.kl, plain.outcomes[0].reports["default:M5"].kl)


def test_metrics_frame_stride():
    result = run_scenario(_small_config(csv_stride=7))
    frame = metrics_frame(result)
    assert len(frame) == 18
    assert list(frame["i"][:3]) == [0, 7, 14]
    assert_allclose(frame["a_error"], result.series[0].a_error[::7])


def test_gsl_config_from_arm():
    config = _small_config()
    gsl = config.gsl_config(LearnerArm(label="W", mu=0.01, M=4, W=3, l1_weight=0.1))
    assert (gsl.mu, gsl.M, gsl.W, gsl.l1_weight, gsl.delta, gsl.burn_in) == (0.01, 4, 3, 0.1, 0.05, 20)


def test_model_arms_share_graph_and_observations():
    config = _small_config(model_arms=[ModelArm(label="x"), ModelArm(label="y", influential=[])])
    first = simulate_arm(config, 3, config.model_arms[0])
    second = simulate_arm(config, 3, config.model_arms[1])
    assert np.array_equal(first.graph.adjacency, second.graph.adjacency)
    assert len(first.trace) == len(second.trace) == 140


def test_scenario_run_is_deterministic():
    first = run_scenario(_small_config())
    second = run_scenario(_small_config())
    assert_allclose(first.series[0].a_error, second.series[0].a_error)
    assert first.series[0].a_error.shape == (120,)
    assert first.series[0].r.shape == (120,)
    assert "default:M5" in first.outcomes[0].reports
    assert first.summary["arms"]["default:M5"]["median"]["top_k_score"] >= 0.0


def test_zero_iteration_scenario():
    result = run_scenario(_small_config(n_iterations=0, burn_in=0))
    series = result.series[0]
    assert series.a_error.size == 0
    median = result.summary["arms"]["default:M5"]["median"]
    assert median["a_error"] == pytest.approx(series.initial_a_error)
    assert np.isnan(median["r_terminal"])


def test_scenario_without_learner_arms():
    result = run_scenario(_small_config(learner_arms=[]))
    assert [s.learner_arm for s in result.series] == ["none"]
    assert np.all(np.isnan(result.series[0].a_error))
    assert 0.0 <= result.summary["arms"]["default:none"]["median"]["r_terminal"] <= 1.0


def test_unknown_check_fails():
    result = run_scenario(_small_config(n_iterations=10, checks=["no_such_check"]), checks={})
    assert not result.passed
    assert result.summary["checks"] == [{"name": "no_such_check", "passed": False, "detail": "unknown check"}]


def test_write_outputs(tmp_path):
    result = run_scenario(_small_config())
    paths = write_outputs(result, str(tmp_path / "out"))

    frame = pd.read_csv(paths["metrics"])
    assert list(frame.columns) == ["run_id", "seed", "i", "a_error", "llr_error", "r_i"]
    assert len(frame) == 120
    assert set(frame["run_id"]) == {"small:default:M5"}

    with open(paths["summary"]) as handle:
        summary = json.load(handle)
    assert summary["scenario"] == "small"
    assert "default:M5" in summary["arms"]

    with open(paths["influence"]) as handle:
        influence = json.load(handle)
    assert len(influence["3"]["default:M5"]["ranking"]) == 6
