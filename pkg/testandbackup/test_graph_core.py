"""
Tests for graphs, combination matrices and Perron vectors
"""
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from social_learning.errors import ConvergenceError, GraphSamplingError
from social_learning.graph_core import (
    CombinationMatrix,
    DirectedGraph,
    generate_erdos_renyi,
    graph_from_json,
    graph_to_json,
    is_strongly_connected,
    load_matrix,
    matrix_from_json,
    matrix_to_json,
    mixing_gap,
    normalize_learned_matrix,
    perron_to_csv,
    perron_vector,
    perturb_topology,
    save_matrix,
    uniform_combination_matrix,
)


def _random_primitive(n, rng):
    adjacency = rng.random((n, n)) < 0.6
    np.fill_diagonal(adjacency, True)
    adjacency[np.arange(n), (np.arange(n) + 1) % n] = True
    weights = adjacency * rng.random((n, n))
    return CombinationMatrix(weights / weights.sum(axis=0))


def _eigen_oracle(a):
    values, vectors = np.linalg.eig(a.weights)
    u = np.real(vectors[:, np.argmin(np.abs(values - 1.0))])
    return u / u.sum()


def test_erdos_renyi_twenty_agents():
    graph = generate_erdos_renyi(20, 0.2, seed=3)
    assert graph.n_agents == 20
    assert graph.has_self_loops()
    assert is_strongly_connected(graph)


def test_erdos_renyi_near_complete_pair():
    graph = generate_erdos_renyi(2, 0.999, seed=0)
    assert graph.adjacency.all()


def test_erdos_renyi_matches_documented_draw_order():
    graph = generate_erdos_renyi(5, 0.5, seed=42)
    rng = np.random.default_rng(42)
    while True:
        adjacency = rng.random((5, 5)) < 0.5
        np.fill_diagonal(adjacency, True)
        if is_strongly_connected(DirectedGraph(adjacency)):
            break
    assert graph.edge_count() == int(adjacency.sum() - 5)
    assert np.array_equal(graph.adjacency, adjacency)


def test_erdos_renyi_is_seed_deterministic():
    first = generate_erdos_renyi(12, 0.3, seed=11)
    second = generate_erdos_renyi(12, 0.3, seed=11)
    assert np.array_equal(first.adjacency, second.adjacency)


def test_erdos_renyi_budget_exhausted():
    with pytest.raises(GraphSamplingError):
        generate_erdos_renyi(10, 0.001, seed=0, max_attempts=5)


@pytest.mark.parametrize("n,p", [(1, 0.5), (5, 0.0), (5, 1.0)])
def test_erdos_renyi_rejects_bad_arguments(n, p):
    with pytest.raises(ValueError):
        generate_erdos_renyi(n, p, seed=0)


def test_strong_connectivity_small_cases(three_cycle):
    both = DirectedGraph(np.ones((2, 2), dtype=bool))
    one_way = DirectedGraph(np.array([[True, True], [False, True]]))
    five_cycle = np.eye(5, dtype=bool)
    five_cycle[np.arange(5), (np.arange(5) + 1) % 5] = True
    assert is_strongly_connected(both)
    assert not is_strongly_connected(one_way)
    assert is_strongly_connected(DirectedGraph(five_cycle))
    assert is_strongly_connected(three_cycle)


def test_uniform_combination_examples():
    complete = uniform_combination_matrix(DirectedGraph(np.ones((4, 4), dtype=bool)))
    assert_allclose(complete.weights, 0.25)

    pair = uniform_combination_matrix(DirectedGraph(np.ones((2, 2), dtype=bool)))
    assert_allclose(pair.weights, 0.5)

    adjacency = np.eye(3, dtype=bool)
    adjacency[:, 2] = True
    adjacency[0, 1] = adjacency[2, 0] = True
    combination = uniform_combination_matrix(DirectedGraph(adjacency))
    assert_allclose(combination.weights[:, 2], [1 / 3, 1 / 3, 1 / 3])


def test_uniform_combination_is_left_stochastic(reference_combination):
    assert np.all(reference_combination.weights >= 0)
    assert_allclose(reference_combination.weights.sum(axis=0), 1.0, atol=1e-12)


def test_uniform_combination_needs_self_loops():
    with pytest.raises(ValueError):
        uniform_combination_matrix(DirectedGraph(~np.eye(3, dtype=bool)))


def test_combination_matrix_validation():
    with pytest.raises(ValueError):
        CombinationMatrix(np.array([[0.5, 0.5], [0.4, 0.5]]))
    with pytest.raises(ValueError):
        CombinationMatrix(np.array([[1.2, 0.5], [-0.2, 0.5]]))


def test_perron_doubly_stochastic():
    weights = np.full((4, 4), 0.1) + 0.6 * np.eye(4)
    u = perron_vector(CombinationMatrix(weights))
    assert_allclose(u.entries, 0.25, atol=1e-12)


def test_perron_single_agent():
    assert_allclose(perron_vector(CombinationMatrix(np.array([[1.0]]))).entries, [1.0])


def test_perron_matches_linear_solve():
    a = CombinationMatrix(np.array([[0.5, 0.2, 0.3], [0.25, 0.6, 0.3], [0.25, 0.2, 0.4]]))
    system = np.vstack([a.weights - np.eye(3), np.ones(3)])
    expected = np.linalg.lstsq(system, np.array([0, 0, 0, 1.0]), rcond=None)[0]
    u = perron_vector(a)
    assert_allclose(u.entries, expected, atol=1e-10)
    assert np.abs(a.weights @ u.entries - u.entries).sum() <= 1e-12


def test_perron_matches_eigen_oracle_on_small_matrices():
    rng = np.random.default_rng(5)
    for n in range(2, 7):
        for _ in range(5):
            a = _random_primitive(n, rng)
            assert_allclose(perron_vector(a).entries, _eigen_oracle(a), atol=1e-8)


def test_perron_reports_non_convergence():
    slow = CombinationMatrix(np.array([[0.999, 0.002], [0.001, 0.998]]))
    with pytest.raises(ConvergenceError):
        perron_vector(slow, max_iter=3)


def test_normalize_learned_matrix_examples(two_agent_matrix):
    assert_allclose(normalize_learned_matrix(two_agent_matrix.weights).weights, two_agent_matrix.weights)

    raw = np.array([[-0.1, 0.0, 0.2], [0.6, 0.0, 0.3], [0.5, -1.0, 0.5]])
    normalized = normalize_learned_matrix(raw).weights
    assert_allclose(normalized[:, 0], [0.0, 6 / 11, 5 / 11])
    assert_allclose(normalized[:, 1], [0.0, 1.0, 0.0])


def test_normalized_learned_matrix_has_positive_centrality():
    rng = np.random.default_rng(2)
    raw = 0.2 + 0.05 * rng.standard_normal((6, 6))
    u = perron_vector(normalize_learned_matrix(raw))
    assert np.all(u.entries > 0)


def test_perturb_zero_flip_prob_is_identity(reference_graph):
    assert np.array_equal(perturb_topology(reference_graph, 0.0, seed=1).adjacency, reference_graph.adjacency)


def test_perturb_matches_documented_draw_order(reference_graph):
    perturbed = perturb_topology(reference_graph, 0.005, seed=9)
    rng = np.random.default_rng(9)
    while True:
        flips = rng.random((20, 20)) < 0.005
        np.fill_diagonal(flips, False)
        candidate = DirectedGraph(np.logical_xor(reference_graph.adjacency, flips))
        if is_strongly_connected(candidate):
            break
    assert np.array_equal(perturbed.adjacency, candidate.adjacency)
    assert perturbed.has_self_loops()


def test_perturb_toggle_rate(reference_graph):
    toggles = [
        int(np.sum(perturb_topology(reference_graph, 0.005, seed=s).adjacency != reference_graph.adjacency))
        for s in range(200)
    ]
    assert 1.0 < np.mean(toggles) < 3.0


def test_perturb_rejects_bad_probability(reference_graph):
    with pytest.raises(ValueError):
        perturb_topology(reference_graph, 1.0, seed=0)


def test_mixing_gap_decreases():
    graph = generate_erdos_renyi(10, 0.3, seed=4)
    a = uniform_combination_matrix(graph)
    u = perron_vector(a)
    gaps = [mixing_gap(a, u, t) for t in range(10, 40, 5)]
    gaps = [gap for gap in gaps if gap > 1e-9]
    assert len(gaps) >= 2
    assert all(later < earlier for earlier, later in zip(gaps, gaps[1:]))


def test_json_and_csv_outputs(tmp_path, three_cycle, two_agent_matrix):
    payload = matrix_to_json(two_agent_matrix.weights)
    assert payload == {"n": 2, "weights": [0.5, 0.3, 0.5, 0.7]}
    assert_allclose(matrix_from_json(json.loads(json.dumps(payload))), two_agent_matrix.weights)
    assert np.array_equal(graph_from_json(graph_to_json(three_cycle)).adjacency, three_cycle.adjacency)

    path = tmp_path / "a.json"
    save_matrix(two_agent_matrix.weights, str(path))
    assert_allclose(load_matrix(str(path)), two_agent_matrix.weights)

    csv_path = tmp_path / "u.csv"
    perron_to_csv(perron_vector(two_agent_matrix), str(csv_path))
    assert csv_path.read_text().splitlines()[0] == "agent_id,u"


def test_matrix_from_json_size_mismatch():
    with pytest.raises(ValueError):
        matrix_from_json({"n": 2, "weights": [1.0, 0.0, 0.0]})
