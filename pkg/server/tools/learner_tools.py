"""
Graph learner tools for MCP server
"""
import logging
from typing import Any, Dict

from server.config import MAX_TOOL_ITERATIONS
from server.tools.run_store_tools import get_run, store_run
from social_learning.asl_simulator import beliefs_from_log_ratios
from social_learning.experiment_harness import steady_value
from social_learning.gsl_learner import GroundTruth, GslConfig, run_learner
from social_learning.trace_io import read_trace

logger = logging.getLogger("learner_tools")


def _learn(lambdas, config: GslConfig, truth, source: str, extra: Dict[str, Any]) -> Dict[str, Any]:
    if lambdas.shape[0] > MAX_TOOL_ITERATIONS:
        raise ValueError(f"{lambdas.shape[0]} matrices exceed the per-call limit of {MAX_TOOL_ITERATIONS}")
    learned = run_learner(lambdas, config, truth)
    summary = {
        "source": source,
        "config": config.model_dump(),
        "steady_a_error": steady_value(learned.a_error) if truth is not None else None,
        "steady_llr_error": steady_value(learned.llr_error) if truth is not None and not config.known_llr else None,
    }
    run_id = store_run("learner", {
        **summary,
        **extra,
        "a_estimate": learned.a_estimate,
        "llr_estimate": learned.llr_estimate,
        "final_public": beliefs_from_log_ratios(lambdas[-1]),
    })
    logger.info(f"Stored learner run {run_id} from {source}")
    return {"run_id": run_id, **summary, "A": learned.a_estimate.tolist(), "L_hat": learned.llr_estimate.tolist()}


def func_learn_from_run(run_id: str, mu: float = 0.1, M: int = 50, W: int = 1, l1_weight: float = 0.0,
                        known_llr: bool = False) -> Dict[str, Any]:
    """
    Learn the combination matrix from a stored simulation

    Args:
        run_id: Simulation run id
        mu, M, W, l1_weight, known_llr: Learner hyperparameters; delta and burn-in come from the simulation

    Returns:
        Learned run id, estimates and steady errors against the simulation's ground truth
    """
    simulation = get_run(run_id, "simulation")
    trace = simulation["trace"]
    config = GslConfig(mu=mu, delta=trace.delta, M=M, W=W, l1_weight=l1_weight, burn_in=trace.burn_in,
                       known_llr=known_llr)
    truth = GroundTruth.from_trace(trace, simulation["models"])
    return _learn(trace.lambdas, config, truth, run_id, {"simulation": run_id})


def func_learn_from_trace(path: str, mu: float = 0.1, delta: float = 0.05, M: int = 50, W: int = 1,
                          l1_weight: float = 0.0, burn_in: int = 0) -> Dict[str, Any]:
    config = GslConfig(mu=mu, delta=delta, M=M, W=W, l1_weight=l1_weight, burn_in=burn_in)
    return _learn(read_trace(path).lambdas, config, None, path, {})


def register_learner_tools(mcp):
    """Register learner tools with the MCP server"""

    @mcp.tool
    def learn_from_run(run_id: str, mu: float = 0.1, M: int = 50, W: int = 1, l1_weight: float = 0.0,
                       known_llr: bool = False) -> Dict[str, Any]:
        """
        Recover the combination matrix and expected log-likelihood ratios from a stored simulation

        Args:
            run_id: Simulation run id
            mu: Step-size (default 0.1)
            M: Estimator window (default 50)
            W: Mini-batch size (default 1)
            l1_weight: Sparsity weight (default 0)
            known_llr: Use the true expected LLR matrix (baseline)
        """
        try:
            return {"status": "success", **func_learn_from_run(run_id, mu, M, W, l1_weight, known_llr)}
        except Exception as e:
            logger.error(f"Error learning from run: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def learn_from_trace(path: str, mu: float = 0.1, delta: float = 0.05, M: int = 50, W: int = 1,
                         l1_weight: float = 0.0, burn_in: int = 0) -> Dict[str, Any]:
        """
        Recover the combination matrix from a trace file (no ground truth)

        Args:
            path: JSON Lines trace
            mu: Step-size
            delta: Adaptation step-size the trace was produced with
            M: Estimator window
            W: Mini-batch size
            l1_weight: Sparsity weight
            burn_in: Leading matrices to skip
        """
        try:
            return {"status": "success", **func_learn_from_trace(path, mu, delta, M, W, l1_weight, burn_in)}
        except Exception as e:
            logger.error(f"Error learning from trace: {e}")
            return {"status": "error", "error": str(e)}
