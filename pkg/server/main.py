"""
Main MCP server that integrates all graph social learning tools
"""
import logging
from fastmcp import FastMCP

from server.config import LOG_LEVEL, SERVER_NAME
from server.tools.graph_tools import register_graph_tools
from server.tools.likelihood_tools import register_likelihood_tools
from server.tools.simulation_tools import register_simulation_tools
from server.tools.learner_tools import register_learner_tools
from server.tools.influence_tools import register_influence_tools
from server.tools.ingestion_tools import register_ingestion_tools
from server.tools.experiment_tools import register_experiment_tools
from server.tools.run_store_tools import register_run_store_tools

logging.basicConfig(level=LOG_LEVEL, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger("mcp_server")

TOOL_GROUPS = [
    ("graph", register_graph_tools),
    ("likelihood", register_likelihood_tools),
    ("simulation", register_simulation_tools),
    ("learner", register_learner_tools),
    ("influence", register_influence_tools),
    ("ingestion", register_ingestion_tools),
    ("experiment", register_experiment_tools),
    ("run store", register_run_store_tools),
]


def register_all(mcp):
    for name, register in TOOL_GROUPS:
        logger.info(f"Registering {name} tools...")
        register(mcp)
    return mcp


def create_mcp_server():
    """Create and configure the MCP server with all tools"""
    mcp = register_all(FastMCP(SERVER_NAME))
    logger.info("MCP server initialized with all tools")
    return mcp


mcp = create_mcp_server()

# From the repository root: python -m server.main
# or: fastmcp run server/main.py:mcp --transport sse --port 8001 --host 0.0.0.0
if __name__ == "__main__":
    logger.info("Starting graph social learning tool server")
    mcp.run()
