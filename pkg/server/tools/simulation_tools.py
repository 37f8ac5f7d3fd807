"""
Social learning simulation tools for MCP server
"""
import logging
from typing import Any, Dict, Optional

import numpy as np

from server.config import MAX_TOOL_ITERATIONS
from server.tools.run_store_tools import get_run, store_run
from social_learning.asl_simulator import classification_rate
from social_learning.experiment_harness import simulate_arm
from social_learning.influence_analyzer import estimate_true_state
from social_learning.scenarios import load_scenario
from social_learning.trace_io import truth_path_for, write_trace, write_truth

logger = logging.getLogger("simulation_tools")


def func_simulate(scenario: str = "fig5_influence", seed: Optional[int] = None,
                  n_iterations: Optional[int] = None) -> Dict[str, Any]:
    """
    Simulate the first model arm of a scenario and store the trace

    Args:
        scenario: Built-in scenario name or scenario JSON path
        seed: Seed (default: the scenario's first seed)
        n_iterations: Iterations after burn-in (default: the scenario's, capped at the per-call limit)

    Returns:
        Run id and a short summary
    """
    config = load_scenario(scenario)
    burn_in = config.resolved_burn_in()
    if n_iterations is None and burn_in + config.n_iterations > MAX_TOOL_ITERATIONS:
        capped = max(MAX_TOOL_ITERATIONS - burn_in, 0)
        logger.warning(f"Scenario {config.name} runs {config.n_iterations} iterations, capping at {capped}")
        n_iterations = capped
    if n_iterations is not None:
        config = config.model_copy(update={"n_iterations": n_iterations})
    total = config.resolved_burn_in() + config.n_iterations
    if total > MAX_TOOL_ITERATIONS:
        raise ValueError(f"{total} iterations exceed the per-call limit of {MAX_TOOL_ITERATIONS}")
    seed = config.seeds[0] if seed is None else seed

    simulated = simulate_arm(config, seed, config.model_arms[0])
    trace = simulated.trace
    rate = classification_rate(trace, start=trace.burn_in) if len(trace) > trace.burn_in else np.zeros(0)
    summary = {
        "scenario": config.name,
        "seed": seed,
        "iterations": len(trace),
        "burn_in": trace.burn_in,
        "delta": trace.delta,
        "theta_star": int(trace.theta_star[-1]) if len(trace) else config.theta_star,
        "network_estimate": estimate_true_state(trace.final_public) if trace.final_public is not None else None,
        "classification_rate": float(rate[-1]) if rate.size else None,
        "topology_changes": len(trace.combination_changes) - 1,
    }
    run_id = store_run("simulation", {
        **summary,
        "trace": trace,
        "models": simulated.models,
        "graph": simulated.graph,
        "a_true": simulated.a_true,
    })
    logger.info(f"Stored simulation {run_id}")
    return {"run_id": run_id, **summary}


def func_export_trace(run_id: str, path: str) -> Dict[str, str]:
    run = get_run(run_id, "simulation")
    trace = run["trace"]
    write_trace(path, trace.lambdas, trace.map_estimates, trace.theta_star)
    truth_path = truth_path_for(path)
    write_truth(truth_path, trace.combination_changes, run["models"])
    return {"trace": path, "truth": truth_path}


def register_simulation_tools(mcp):
    """Register simulation tools with the MCP server"""

    @mcp.tool
    def simulate(scenario: str = "fig5_influence", seed: int = None, n_iterations: int = None) -> Dict[str, Any]:
        """
        Run adaptive social learning for a scenario and keep the trace in memory

        Args:
            scenario: Built-in scenario name or JSON path (default fig5_influence)
            seed: Random seed (optional)
            n_iterations: Iterations after burn-in (optional)

        Returns:
            Run id, classification rate and the network's final estimate
        """
        try:
            return {"status": "success", **func_simulate(scenario, seed, n_iterations)}
        except Exception as e:
            logger.error(f"Error simulating: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def export_trace(run_id: str, path: str) -> Dict[str, Any]:
        """
        Write a stored simulation as a JSON Lines trace plus its ground truth

        Args:
            run_id: Simulation run id
            path: Trace path (.jsonl or .jsonl.gz)
        """
        try:
            return {"status": "success", **func_export_trace(run_id, path)}
        except Exception as e:
            logger.error(f"Error exporting trace: {e}")
            return {"status": "error", "error": str(e)}
