"""
Centrality, recovered KL divergences, contributions and informativeness of agents
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from social_learning.asl_simulator import majority_vote
from social_learning.graph_core import (
    CombinationMatrix,
    DirectedGraph,
    PerronVector,
    normalize_learned_matrix,
    perron_vector,
)
from social_learning.likelihood_models import BernoulliLikelihood, kl_matrix

logger = logging.getLogger("influence_analyzer")


@dataclass(frozen=True)
class InfluenceReport:
    """
    Per-agent influence quantities.

    kl[k, h] estimates D_KL(L_k(theta_star) || L_k(h)); the theta_star column is 0.
    contributions[k, h] = centrality[k] * kl[k, h] and informativeness[k] sums them over h.
    """
    centrality: np.ndarray
    kl: np.ndarray
    contributions: np.ndarray
    informativeness: np.ndarray
    ranking: np.ndarray
    true_state: int

    @property
    def n_agents(self) -> int:
        return self.centrality.shape[0]

    def normalized_informativeness(self) -> np.ndarray:
        return informativeness(self.centrality, self.kl, normalize=True)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "true_state": int(self.true_state),
            "centrality": self.centrality.tolist(),
            "kl": self.kl.tolist(),
            "informativeness": self.informativeness.tolist(),
            "informativeness_normalized": self.normalized_informativeness().tolist(),
            "ranking": self.ranking.tolist(),
        }

    def to_frame(self) -> pd.DataFrame:
        """Columns agent_id,u,I,rank followed by one kl_theta<h> column per hypothesis"""
        ranks = np.empty(self.n_agents, dtype=int)
        ranks[self.ranking] = np.arange(1, self.n_agents + 1)
        frame = pd.DataFrame({
            "agent_id": np.arange(self.n_agents),
            "u": self.centrality,
            "I": self.normalized_informativeness(),
            "rank": ranks,
        })
        for h in range(self.kl.shape[1]):
            frame[f"kl_theta{h}"] = self.kl[:, h]
        return frame


def estimate_true_state(final_beliefs: np.ndarray) -> int:
    """
    Network estimate of the true state from the final public beliefs

    Args:
        final_beliefs: N x H public beliefs (linear or log scale) at the last iteration

    Returns:
        Majority vote of the per-agent argmax, lowest index on ties
    """
    final_beliefs = np.atleast_2d(final_beliefs)
    return majority_vote(np.argmax(final_beliefs, axis=1), final_beliefs.shape[1])


def recover_kl(llr_estimate: np.ndarray, j_prime: int, reference: int = 0) -> np.ndarray:
    """
    KL divergences D_KL(L_k(theta_star) || L_k(h)) from an expected-LLR estimate

    With column j holding D(star||j) - D(star||0), the column of the estimated
    true state j' holds -D(star||0); so D(star||0) = -Lhat[:, j'] and
    D(star||j) = Lhat[:, j] - Lhat[:, j'].

    Args:
        llr_estimate: N x (H-1) estimate of the expected LLR matrix
        j_prime: Estimated true hypothesis index
        reference: Reference hypothesis index

    Returns:
        N x H matrix of nonnegative estimates (negatives clipped to 0, j' column 0)
    """
    llr_estimate = np.atleast_2d(np.asarray(llr_estimate, dtype=float))
    n, width = llr_estimate.shape
    H = width + 1
    others = [h for h in range(H) if h != reference]
    if j_prime == reference:
        correction = np.zeros(n)
    else:
        correction = llr_estimate[:, others.index(j_prime)]

    kl = np.zeros((n, H))
    kl[:, reference] = -correction
    for column, h in enumerate(others):
        kl[:, h] = llr_estimate[:, column] - correction
    kl[:, j_prime] = 0.0
    return np.clip(kl, 0.0, None)


def _entries(u: Union[PerronVector, np.ndarray]) -> np.ndarray:
    return np.asarray(getattr(u, "entries", u), dtype=float)


def network_divergence(u: Union[PerronVector, np.ndarray], kls: np.ndarray, theta: int) -> float:
    """K(theta_star, theta) = sum_k u_k D_KL,k(theta_star || theta)"""
    return float(_entries(u) @ np.asarray(kls)[:, theta])


def informativeness(u: Union[PerronVector, np.ndarray], kls: np.ndarray, normalize: bool = False) -> np.ndarray:
    """I_k = u_k sum_h D_KL,k(theta_star || h), optionally rescaled to sum 1"""
    values = _entries(u) * np.asarray(kls).sum(axis=1)
    if normalize:
        total = values.sum()
        return values / total if total > 0 else values
    return values


def rank_agents(report_or_values: Union[InfluenceReport, np.ndarray]) -> np.ndarray:
    """Agent ids by descending informativeness, ties by agent index"""
    values = getattr(report_or_values, "informativeness", report_or_values)
    return np.argsort(-np.asarray(values, dtype=float), kind="stable")


def _report(u: np.ndarray, kl: np.ndarray, true_state: int) -> InfluenceReport:
    values = informativeness(u, kl)
    return InfluenceReport(
        centrality=u,
        kl=kl,
        contributions=u[:, None] * kl,
        informativeness=values,
        ranking=rank_agents(values),
        true_state=true_state,
    )


def build_influence_report(a_learned: np.ndarray, llr_estimate: np.ndarray, final_beliefs: np.ndarray,
                           reference: int = 0, tol: float = 1e-12, max_iter: int = 100000) -> InfluenceReport:
    """
    Influence report from learned quantities and the final public beliefs

    Args:
        a_learned: Raw learned combination matrix (any real N x N)
        llr_estimate: Learned expected-LLR estimate
        final_beliefs: N x H public beliefs at the last iteration
        reference: Reference hypothesis index
        tol, max_iter: Power-iteration settings for the Perron vector

    Returns:
        InfluenceReport built on the normalized learned matrix
    """
    u = perron_vector(normalize_learned_matrix(a_learned), tol, max_iter).entries
    j_prime = estimate_true_state(final_beliefs)
    kl = recover_kl(llr_estimate, j_prime, reference)
    logger.info(f"Influence report: estimated true state {j_prime}, top agent {int(np.argmax(informativeness(u, kl)))}")
    return _report(u, kl, j_prime)


def ground_truth_report(a_true: CombinationMatrix, models: BernoulliLikelihood,
                        theta_star: Optional[int] = None, tol: float = 1e-12, max_iter: int = 100000) -> InfluenceReport:
    """Report from the exact Perron vector and exact Bernoulli KL divergences"""
    theta_star = models.hypotheses.true_index if theta_star is None else theta_star
    u = perron_vector(a_true, tol, max_iter).entries
    return _report(u, kl_matrix(models, theta_star), theta_star)


def top_k_overlap(ranking_a: Sequence[int], ranking_b: Sequence[int], k: int) -> float:
    """|top-k(a) & top-k(b)| / k"""
    if k <= 0:
        raise ValueError("k must be positive")
    return len(set(list(ranking_a)[:k]) & set(list(ranking_b)[:k])) / k


def compare_centrality(learned_u: Union[PerronVector, np.ndarray], reference_u: Union[PerronVector, np.ndarray],
                       k: int = 3) -> Dict[str, Any]:
    """
    Compare a learned Perron vector with a reference one, e.g. from uniform weights over a follower graph

    Returns:
        Whether the most central agent agrees, the top-k overlap and the L1 distance
    """
    learned = _entries(learned_u)
    reference = _entries(reference_u)
    learned_order = np.argsort(-learned, kind="stable")
    reference_order = np.argsort(-reference, kind="stable")
    k = min(k, learned.shape[0])
    return {
        "most_central_learned": int(learned_order[0]),
        "most_central_reference": int(reference_order[0]),
        "most_central_match": bool(learned_order[0] == reference_order[0]),
        "top_k": k,
        "top_k_overlap": top_k_overlap(learned_order, reference_order, k),
        "l1_distance": float(np.abs(learned - reference).sum()),
    }


def support_recovery(a_estimate: np.ndarray, adjacency: Union[DirectedGraph, np.ndarray],
                     threshold: float = 1e-3) -> Dict[str, float]:
    """Precision and recall of the off-diagonal edges whose estimated weight exceeds threshold"""
    truth = np.asarray(getattr(adjacency, "adjacency", adjacency), dtype=bool)
    estimate = np.asarray(a_estimate, dtype=float) > threshold
    off_diagonal = ~np.eye(truth.shape[0], dtype=bool)
    truth, estimate = truth & off_diagonal, estimate & off_diagonal
    hits = float(np.sum(truth & estimate))
    predicted, actual = float(estimate.sum()), float(truth.sum())
    return {
        "precision": hits / predicted if predicted else 1.0,
        "recall": hits / actual if actual else 1.0,
        "predicted_edges": predicted,
        "true_edges": actual,
    }
