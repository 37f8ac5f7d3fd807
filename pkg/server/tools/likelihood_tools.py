"""
Likelihood model tools for MCP server
"""
import logging
from typing import Any, Dict, List, Optional

from social_learning.likelihood_models import (
    generate_identifiable_models,
    kl_matrix,
    llr_bound,
    models_from_json,
    models_to_json,
)

logger = logging.getLogger("likelihood_tools")


def func_generate_models(n: int, H: int, influential: Optional[List[int]] = None, seed: Optional[int] = None,
                         theta_star: int = 1) -> Dict[str, Any]:
    """
    Draw Bernoulli likelihood models with the planted influential agents

    Args:
        n: Number of agents
        H: Number of hypotheses
        influential: Agents with the large perturbation variance
        seed: Random seed
        theta_star: True hypothesis

    Returns:
        Models plus their KL table and log-likelihood-ratio bound
    """
    models = generate_identifiable_models(n, H, influential or [], seed=seed, true_index=theta_star)
    return {
        "models": models_to_json(models),
        "kl": kl_matrix(models, theta_star).tolist(),
        "llr_bound": llr_bound(models),
    }


def func_kl_table(models: Dict[str, Any], theta_star: Optional[int] = None) -> Dict[str, Any]:
    likelihood = models_from_json(models)
    theta_star = likelihood.hypotheses.true_index if theta_star is None else theta_star
    kl = kl_matrix(likelihood, theta_star)
    return {"theta_star": theta_star, "kl": kl.tolist(), "kl_sums": kl.sum(axis=1).tolist()}


def register_likelihood_tools(mcp):
    """Register likelihood model tools with the MCP server"""

    @mcp.tool
    def generate_likelihood_models(n: int = 20, H: int = 5, influential: List[int] = None,
                                   seed: int = None, theta_star: int = 1) -> Dict[str, Any]:
        """
        Generate per-agent Bernoulli likelihoods

        Args:
            n: Number of agents (default 20)
            H: Number of hypotheses (default 5)
            influential: Agents made more informative (optional)
            seed: Random seed (optional)
            theta_star: True hypothesis (default 1)

        Returns:
            Models, KL divergences from theta_star and the LLR bound
        """
        try:
            return {"status": "success", **func_generate_models(n, H, influential, seed, theta_star)}
        except Exception as e:
            logger.error(f"Error generating likelihood models: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def kl_table(models: Dict[str, Any], theta_star: int = None) -> Dict[str, Any]:
        """
        KL divergences of every agent from theta_star to each hypothesis

        Args:
            models: Models as returned by generate_likelihood_models
            theta_star: True hypothesis (defaults to the models' own)
        """
        try:
            return {"status": "success", **func_kl_table(models, theta_star)}
        except Exception as e:
            logger.error(f"Error computing KL table: {e}")
            return {"status": "error", "error": str(e)}
