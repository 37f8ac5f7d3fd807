"""
Experiment tools for MCP server
"""
import logging
from typing import Any, Dict, List

from social_learning.experiment_harness import write_outputs
from social_learning.scenarios import list_scenarios, run_named_scenario

logger = logging.getLogger("experiment_tools")


def func_run_experiment(scenario: str, seed_count: int = 1, out_dir: str = None) -> Dict[str, Any]:
    """
    Run a scenario with seeds 0..seed_count-1 and evaluate its checks

    Args:
        scenario: Built-in scenario name or scenario JSON path
        seed_count: Number of seeds
        out_dir: Where to write CSV / JSON outputs (optional)

    Returns:
        Check outcomes, seed-median summary and the written paths
    """
    if seed_count < 1:
        raise ValueError("seed_count must be at least 1")
    result = run_named_scenario(scenario, seeds=list(range(seed_count)))
    paths = write_outputs(result, out_dir) if out_dir else {}
    return {
        "scenario": result.config.name,
        "passed": result.passed,
        "checks": result.summary["checks"],
        "arms": {key: value["median"] for key, value in result.summary["arms"].items()},
        "outputs": paths,
    }


def register_experiment_tools(mcp):
    """Register experiment tools with the MCP server"""

    @mcp.tool
    def list_builtin_scenarios() -> Dict[str, Any]:
        """
        List the built-in scenario names

        Returns:
            Scenario names
        """
        names: List[str] = list_scenarios()
        return {"status": "success", "scenarios": names, "count": len(names)}

    @mcp.tool
    def run_experiment(scenario: str, seed_count: int = 1, out_dir: str = None) -> Dict[str, Any]:
        """
        Run a scenario end to end: simulate, learn, analyze and check

        Args:
            scenario: Built-in scenario name or JSON path
            seed_count: Number of seeds (default 1)
            out_dir: Output directory for CSV / JSON (optional)
        """
        try:
            return {"status": "success", **func_run_experiment(scenario, seed_count, out_dir)}
        except Exception as e:
            logger.error(f"Error running experiment: {e}")
            return {"status": "error", "error": str(e)}
