"""
Shared fixtures: small graphs, default-setup models and short simulated traces
"""
import numpy as np
import pytest

from social_learning.asl_simulator import SimulationConfig, run_simulation
from social_learning.graph_core import CombinationMatrix, DirectedGraph, generate_erdos_renyi, uniform_combination_matrix
from social_learning.likelihood_models import generate_models


@pytest.fixture
def three_cycle():
    """0 -> 1 -> 2 -> 0 with self-loops"""
    adjacency = np.eye(3, dtype=bool)
    adjacency[0, 1] = adjacency[1, 2] = adjacency[2, 0] = True
    return DirectedGraph(adjacency)


@pytest.fixture
def two_agent_matrix():
    return CombinationMatrix(np.array([[0.5, 0.3], [0.5, 0.7]]))


@pytest.fixture(scope="session")
def reference_graph():
    return generate_erdos_renyi(20, 0.2, seed=0)


@pytest.fixture(scope="session")
def reference_combination(reference_graph):
    return uniform_combination_matrix(reference_graph)


@pytest.fixture(scope="session")
def reference_models():
    return generate_models(20, 5, influential=[0, 1, 2], seed=1, true_index=1)


@pytest.fixture(scope="session")
def short_trace(reference_combination, reference_models):
    config = SimulationConfig(
        combination=reference_combination, models=reference_models, delta=0.05, n_iters=400, seed=7, record_llr=True,
    )
    return run_simulation(config)
