"""
In-memory store of simulated and learned runs, shared by the other tool groups
"""
import logging
import uuid
from collections import OrderedDict
from typing import Any, Dict, Optional

from server.config import RUN_STORE_LIMIT

logger = logging.getLogger("run_store_tools")

# Runs live only as long as the server process
run_store: "OrderedDict[str, Dict[str, Any]]" = OrderedDict()


def store_run(kind: str, payload: Dict[str, Any]) -> str:
    """Keep a run under a fresh id, evicting the oldest beyond RUN_STORE_LIMIT"""
    run_id = f"{kind}-{uuid.uuid4().hex[:8]}"
    run_store[run_id] = {"kind": kind, **payload}
    while len(run_store) > RUN_STORE_LIMIT:
        evicted, _ = run_store.popitem(last=False)
        logger.info(f"Run store full, evicted {evicted}")
    return run_id


def get_run(run_id: str, kind: Optional[str] = None) -> Dict[str, Any]:
    if run_id not in run_store:
        raise KeyError(f"No stored run '{run_id}'")
    run = run_store[run_id]
    if kind is not None and run["kind"] != kind:
        raise ValueError(f"Run '{run_id}' is a {run['kind']} run, expected {kind}")
    return run


def func_describe_run(run_id: str) -> Dict[str, Any]:
    run = get_run(run_id)
    return {key: value for key, value in run.items() if isinstance(value, (str, int, float, bool, list, dict))}


def register_run_store_tools(mcp):
    """Register run-store tools with the MCP server"""

    @mcp.tool
    def list_runs() -> Dict[str, Any]:
        """
        List stored runs, oldest first

        Returns:
            Run ids with their kinds
        """
        return {
            "runs": [{"run_id": run_id, "kind": run["kind"]} for run_id, run in run_store.items()],
            "count": len(run_store),
            "limit": RUN_STORE_LIMIT,
            "status": "success",
        }

    @mcp.tool
    def describe_run(run_id: str) -> Dict[str, Any]:
        """
        Show the scalar settings and summary of a stored run

        Args:
            run_id: Id returned by a simulate or learn tool
        """
        try:
            return {"status": "success", "run_id": run_id, **func_describe_run(run_id)}
        except Exception as e:
            logger.error(f"Error describing run: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def clear_runs(run_id: str = None) -> Dict[str, Any]:
        """
        Clear stored runs

        Args:
            run_id: Specific run to clear (if None, clears all runs)

        Returns:
            Confirmation of clearing
        """
        if run_id is None:
            count = len(run_store)
            run_store.clear()
            return {"status": "success", "message": f"Cleared all runs ({count} items)"}
        if run_id in run_store:
            del run_store[run_id]
            return {"status": "success", "message": f"Cleared run '{run_id}'"}
        return {"status": "error", "error": f"Run '{run_id}' not found"}
