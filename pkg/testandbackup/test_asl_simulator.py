"""
Tests for the adapt/combine recursion and the traces it produces
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from social_learning.asl_simulator import (
    BeliefState,
    PerturbationSchedule,
    SimulationConfig,
    adapt_step,
    beliefs_from_log_ratios,
    classification_rate,
    combine_step,
    correct_indicator,
    default_burn_in,
    iter_simulation,
    log_belief_matrix,
    majority_vote,
    map_estimate,
    run_simulation,
)
from social_learning.errors import DimensionMismatchError
from social_learning.likelihood_models import (
    BernoulliLikelihood,
    HypothesisSet,
    expected_llr_matrix,
    generate_models,
    sample_observations,
)


@pytest.fixture
def mirrored_models():
    return BernoulliLikelihood(np.array([[0.3, 0.7]]), HypothesisSet(2))


def test_default_burn_in():
    assert default_burn_in(0.05) == math.ceil(10 * math.log(2) / 0.05) == 139
    assert default_burn_in(1e-4) == 69315


def test_adapt_step_bayes_example(mirrored_models):
    log_private = np.log(np.array([[0.5, 0.5]]))
    log_public = adapt_step(log_private, np.array([0]), mirrored_models, 0.5)
    weights = np.sqrt(np.array([0.3, 0.7]))
    assert_allclose(np.exp(log_public), [weights / weights.sum()])


def test_adapt_step_rejects_bad_delta(mirrored_models):
    with pytest.raises(ValueError):
        adapt_step(np.zeros((1, 2)), np.array([0]), mirrored_models, 1.0)


def test_combine_step_is_geometric_average(two_agent_matrix):
    log_public = np.log(np.array([[0.2, 0.8], [0.6, 0.4]]))
    log_private = combine_step(log_public, two_agent_matrix)
    expected = np.exp(two_agent_matrix.weights.T @ log_public)
    expected /= expected.sum(axis=1, keepdims=True)
    assert_allclose(np.exp(log_private), expected)


def test_log_belief_matrix_round_trip():
    public = np.array([[0.2, 0.5, 0.3], [0.1, 0.1, 0.8]])
    lam = log_belief_matrix(np.log(public), reference=1).values
    assert_allclose(lam[0], [math.log(0.5 / 0.2), math.log(0.5 / 0.3)])
    assert_allclose(beliefs_from_log_ratios(lam, reference=1), public)


def test_map_and_majority_ties():
    assert map_estimate(np.array([0.4, 0.4, 0.2])) == 0
    assert majority_vote([2, 1, 2, 1], 3) == 1
    assert majority_vote([2, 2, 0], 3) == 2


def test_beliefs_stay_on_simplex(short_trace):
    for lam in short_trace.lambdas:
        beliefs = beliefs_from_log_ratios(lam)
        assert np.all(beliefs > 0)
        assert_allclose(beliefs.sum(axis=1), 1.0, atol=1e-12)
    assert_allclose(short_trace.final_public.sum(axis=1), 1.0)


def test_public_and_private_beliefs_stay_on_simplex(reference_combination, reference_models):
    rng = np.random.default_rng(6)
    state = BeliefState.uniform(20, 5)
    for _ in range(500):
        obs = sample_observations(reference_models, 1, rng)
        state.log_public = adapt_step(state.log_private, obs, reference_models, 0.05)
        state.log_private = combine_step(state.log_public, reference_combination)
        for beliefs in (state.public, state.private):
            assert np.all(beliefs > 0)
            assert_allclose(beliefs.sum(axis=1), 1.0, atol=1e-12)


def test_trace_satisfies_linear_recursion(short_trace):
    delta = short_trace.delta
    assert_allclose(short_trace.lambdas[0], delta * short_trace.llrs[0], atol=1e-10)
    for i in range(1, len(short_trace)):
        a = short_trace.matrix_at(i - 1).weights
        expected = (1 - delta) * a.T @ short_trace.lambdas[i - 1] + delta * short_trace.llrs[i]
        assert_allclose(short_trace.lambdas[i], expected, atol=1e-10)


def test_trace_shapes_and_burn_in(short_trace):
    assert short_trace.lambdas.shape == (400, 20, 4)
    assert short_trace.map_estimates.shape == (400, 20)
    assert short_trace.burn_in == 139
    assert short_trace.learner_lambdas().shape[0] == 400 - 139
    assert np.all(short_trace.theta_star == 1)


def test_simulation_is_seed_deterministic(reference_combination, reference_models):
    config = SimulationConfig(combination=reference_combination, models=reference_models, delta=0.1, n_iters=50, seed=3)
    assert_allclose(run_simulation(config).lambdas, run_simulation(config).lambdas)


def test_iter_simulation_streams_records(reference_combination, reference_models):
    config = SimulationConfig(combination=reference_combination, models=reference_models, delta=0.1, n_iters=5, seed=3)
    records = list(iter_simulation(config))
    assert [r.iteration for r in records] == [0, 1, 2, 3, 4]
    assert_allclose(records[-1].lam, run_simulation(config).lambdas[-1])


def test_zero_iterations(reference_combination, reference_models):
    config = SimulationConfig(combination=reference_combination, models=reference_models, delta=0.1, n_iters=0, seed=0)
    trace = run_simulation(config)
    assert len(trace) == 0
    assert trace.final_public is None
    with pytest.raises(ValueError):
        classification_rate(trace)


def test_dimension_mismatch(two_agent_matrix, reference_models):
    config = SimulationConfig(combination=two_agent_matrix, models=reference_models, delta=0.1, n_iters=1)
    with pytest.raises(DimensionMismatchError):
        run_simulation(config)


def test_perturbation_schedule():
    schedule = PerturbationSchedule(topology_period=100, topology_offset=50, theta_switches=((300, 2), (120, 4)))
    assert not schedule.topology_change_at(50)
    assert schedule.topology_change_at(150)
    assert not schedule.topology_change_at(160)
    assert schedule.theta_at(119, 1) == 1
    assert schedule.theta_at(200, 1) == 4
    assert schedule.theta_at(300, 1) == 2
    assert not PerturbationSchedule().topology_change_at(1000)


def test_topology_changes_are_recorded(reference_combination, reference_models):
    schedule = PerturbationSchedule(topology_period=40, flip_prob=0.05)
    config = SimulationConfig(
        combination=reference_combination, models=reference_models, delta=0.1, n_iters=130, seed=2,
        schedule=schedule, record_llr=True,
    )
    trace = run_simulation(config)
    assert [start for start, _ in trace.combination_changes] == [0, 40, 80, 120]
    for start, matrix in trace.combination_changes[1:]:
        assert trace.matrix_at(start) is matrix
        assert_allclose(matrix.weights.sum(axis=0), 1.0, atol=1e-12)
    for i in (41, 85, 121):
        a = trace.matrix_at(i - 1).weights
        expected = 0.9 * a.T @ trace.lambdas[i - 1] + 0.1 * trace.llrs[i]
        assert_allclose(trace.lambdas[i], expected, atol=1e-10)


def test_theta_switch_changes_observations(reference_combination, reference_models):
    schedule = PerturbationSchedule(theta_switches=((60, 3),))
    config = SimulationConfig(combination=reference_combination, models=reference_models, delta=0.1, n_iters=100,
                              seed=1, schedule=schedule)
    trace = run_simulation(config)
    assert np.all(trace.theta_star[:60] == 1)
    assert np.all(trace.theta_star[60:] == 3)


def test_belief_state_uniform():
    state = BeliefState.uniform(3, 4)
    assert_allclose(state.public, 0.25)
    assert_allclose(state.private, 0.25)


def test_classification_rate_is_running_mean(short_trace):
    correct = correct_indicator(short_trace)
    rate = classification_rate(short_trace, start=100)
    assert rate.shape == (300,)
    assert rate[0] == correct[100]
    assert rate[-1] == pytest.approx(correct[100:].mean())


@pytest.mark.slow
def test_steady_state_mean_matches_expected_llr(reference_combination, reference_models):
    """Mean of the last 2000 steady matrices lies within 5% of the fixed point of the mean recursion"""
    delta = 0.05
    config = SimulationConfig(combination=reference_combination, models=reference_models, delta=delta, n_iters=20000, seed=5)
    trace = run_simulation(config)
    system = np.eye(20) - (1 - delta) * reference_combination.weights.T
    fixed_point = delta * np.linalg.solve(system, expected_llr_matrix(reference_models))
    window_mean = trace.lambdas[-2000:].mean(axis=0)
    assert np.linalg.norm(window_mean - fixed_point) / np.linalg.norm(fixed_point) < 0.05


def test_generated_models_drive_simulation():
    from social_learning.graph_core import generate_erdos_renyi, uniform_combination_matrix

    graph = generate_erdos_renyi(6, 0.4, seed=1)
    models = generate_models(6, 3, influential=[0], seed=2)
    config = SimulationConfig(combination=uniform_combination_matrix(graph), models=models, delta=0.2, n_iters=20, seed=0)
    assert run_simulation(config).lambdas.shape == (20, 6, 2)
