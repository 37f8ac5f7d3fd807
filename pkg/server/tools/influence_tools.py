"""
Influence analysis tools for MCP server
"""
import logging
from typing import Any, Dict

from server.tools.run_store_tools import get_run, run_store
from social_learning.influence_analyzer import build_influence_report, ground_truth_report, top_k_overlap

logger = logging.getLogger("influence_tools")


def func_influence_report(run_id: str, top_k: int = 3) -> Dict[str, Any]:
    """
    Influence report of a learned run, compared with the exact report when its simulation is still stored

    Args:
        run_id: Learner run id
        top_k: k of the top-k comparison

    Returns:
        Report dict, plus the ground-truth report and top-k overlap when available
    """
    learned = get_run(run_id, "learner")
    report = build_influence_report(learned["a_estimate"], learned["llr_estimate"], learned["final_public"])
    result = {"report": report.to_dict()}

    simulation_id = learned.get("simulation")
    if simulation_id in run_store:
        simulation = run_store[simulation_id]
        trace = simulation["trace"]
        truth = ground_truth_report(trace.matrix_at(len(trace) - 1), simulation["models"],
                                    int(trace.theta_star[-1]))
        result["ground_truth"] = truth.to_dict()
        result["top_k"] = top_k
        result["top_k_overlap"] = top_k_overlap(report.ranking, truth.ranking, top_k)
    return result


def register_influence_tools(mcp):
    """Register influence tools with the MCP server"""

    @mcp.tool
    def influence_report(run_id: str, top_k: int = 3) -> Dict[str, Any]:
        """
        Rank agents by their influence on learning the truth

        Args:
            run_id: Learner run id
            top_k: Size of the top set compared with ground truth (default 3)

        Returns:
            Centrality, recovered KL divergences, informativeness and ranking
        """
        try:
            return {"status": "success", **func_influence_report(run_id, top_k)}
        except Exception as e:
            logger.error(f"Error building influence report: {e}")
            return {"status": "error", "error": str(e)}
