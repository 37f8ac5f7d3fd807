"""
Tests for centrality, recovered KL divergences and agent informativeness
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from social_learning.graph_core import CombinationMatrix, perron_vector
from social_learning.influence_analyzer import (
    build_influence_report,
    compare_centrality,
    estimate_true_state,
    ground_truth_report,
    informativeness,
    network_divergence,
    rank_agents,
    recover_kl,
    support_recovery,
    top_k_overlap,
)
from social_learning.likelihood_models import expected_llr_matrix, kl_matrix


def _beliefs_favoring(n, H, theta):
    beliefs = np.full((n, H), 0.1 / (H - 1))
    beliefs[:, theta] = 0.9
    return beliefs


def test_recover_kl_examples():
    llr = np.array([[0.5, -0.2]])
    assert_allclose(recover_kl(llr, j_prime=2), [[0.2, 0.7, 0.0]])
    assert_allclose(recover_kl(llr, j_prime=0), [[0.0, 0.5, 0.0]])
    assert_allclose(recover_kl(llr, j_prime=1), [[0.0, 0.0, 0.0]])


def test_recover_kl_with_other_reference():
    llr = np.array([[0.3, 0.8]])
    # reference 1; columns hold hypotheses 0 and 2
    assert_allclose(recover_kl(llr, j_prime=0, reference=1), [[0.0, 0.0, 0.5]])


def test_exact_inputs_give_exact_report(reference_combination, reference_models):
    llr = expected_llr_matrix(reference_models, 1)
    report = build_influence_report(reference_combination.weights, llr, _beliefs_favoring(20, 5, 1))
    truth = ground_truth_report(reference_combination, reference_models)
    assert report.true_state == truth.true_state == 1
    assert_allclose(report.kl, kl_matrix(reference_models, 1), atol=1e-12)
    assert_allclose(report.centrality, truth.centrality, atol=1e-12)
    assert_allclose(report.informativeness, truth.informativeness, atol=1e-12)
    assert np.array_equal(report.ranking, truth.ranking)


def test_informativeness_follows_centrality():
    kls = np.array([[0.0, 0.2, 0.4], [0.0, 0.2, 0.4]])
    values = informativeness(np.array([0.25, 0.75]), kls)
    assert values[1] / values[0] == pytest.approx(3.0)
    assert_allclose(informativeness(np.array([0.25, 0.75]), kls, normalize=True), [0.25, 0.75])
    assert_allclose(informativeness(np.array([0.5, 0.5]), np.zeros((2, 3)), normalize=True), 0.0)


def test_network_divergence():
    kls = np.array([[0.0, 1.0], [0.0, 3.0]])
    assert network_divergence(np.array([0.5, 0.5]), kls, 1) == pytest.approx(2.0)


def test_rank_agents_breaks_ties_by_index():
    assert rank_agents(np.array([1.0, 2.0, 2.0, 0.0])).tolist() == [1, 2, 0, 3]


def test_report_is_scale_invariant(two_agent_matrix):
    llr = np.array([[0.1], [0.4]])
    beliefs = _beliefs_favoring(2, 2, 0)
    report = build_influence_report(two_agent_matrix.weights, llr, beliefs)
    scaled = build_influence_report(3.0 * two_agent_matrix.weights, llr, beliefs)
    assert_allclose(report.centrality, scaled.centrality, atol=1e-12)
    assert_allclose(report.centrality, perron_vector(two_agent_matrix).entries, atol=1e-12)


def test_report_from_raw_learned_matrix():
    raw = np.array([[0.6, -0.1, 0.2], [0.3, 0.9, 0.0], [0.1, 0.2, 0.8]])
    report = build_influence_report(raw, np.zeros((3, 2)), _beliefs_favoring(3, 3, 0))
    assert np.all(report.centrality > 0)
    assert report.centrality.sum() == pytest.approx(1.0)
    assert_allclose(report.kl, 0.0)


def test_estimate_true_state_majority():
    beliefs = np.array([[0.1, 0.9], [0.8, 0.2], [0.3, 0.7]])
    assert estimate_true_state(beliefs) == 1
    assert estimate_true_state(np.log(beliefs)) == 1
    assert estimate_true_state(np.array([[0.6, 0.4], [0.4, 0.6]])) == 0


def test_report_serialization(reference_combination, reference_models):
    report = ground_truth_report(reference_combination, reference_models)
    payload = report.to_dict()
    assert payload["true_state"] == 1
    assert len(payload["ranking"]) == 20
    assert sum(payload["informativeness_normalized"]) == pytest.approx(1.0)

    frame = report.to_frame()
    assert list(frame.columns[:4]) == ["agent_id", "u", "I", "rank"]
    assert [c for c in frame.columns if c.startswith("kl_theta")] == [f"kl_theta{h}" for h in range(5)]
    assert frame.loc[report.ranking[0], "rank"] == 1
    assert sorted(frame["rank"]) == list(range(1, 21))


def test_influential_agents_lead_ground_truth_ranking(reference_combination, reference_models):
    report = ground_truth_report(reference_combination, reference_models)
    contributions = report.contributions.sum(axis=1)
    assert_allclose(contributions, report.informativeness)
    assert report.kl[:3, [0, 2, 3, 4]].mean() > report.kl[3:, [0, 2, 3, 4]].mean()


def test_top_k_overlap():
    assert top_k_overlap([0, 1, 2, 3], [1, 0, 3, 2], 2) == 1.0
    assert top_k_overlap([0, 1, 2, 3], [2, 3, 0, 1], 2) == 0.0
    assert top_k_overlap([0, 1, 2], [0, 2, 1], 3) == 1.0
    with pytest.raises(ValueError):
        top_k_overlap([0], [0], 0)


def test_compare_centrality():
    result = compare_centrality(np.array([0.5, 0.3, 0.2]), np.array([0.4, 0.1, 0.5]), k=2)
    assert result["most_central_learned"] == 0
    assert result["most_central_reference"] == 2
    assert not result["most_central_match"]
    assert result["top_k_overlap"] == 0.5
    assert result["l1_distance"] == pytest.approx(0.1 + 0.2 + 0.3)


def test_support_recovery():
    adjacency = np.array([[True, True, False], [False, True, True], [True, False, True]])
    estimate = np.array([[0.5, 0.4, 0.2], [0.0, 0.6, 0.0], [0.5, 0.0, 0.8]])
    result = support_recovery(estimate, adjacency)
    assert result["true_edges"] == 3
    assert result["predicted_edges"] == 3
    assert result["precision"] == pytest.approx(2 / 3)
    assert result["recall"] == pytest.approx(2 / 3)


def test_ground_truth_report_other_state(reference_combination, reference_models):
    report = ground_truth_report(reference_combination, reference_models, theta_star=3)
    assert report.true_state == 3
    assert_allclose(report.kl[:, 3], 0.0)
    assert isinstance(reference_combination, CombinationMatrix)
