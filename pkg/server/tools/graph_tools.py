"""
Graph and combination-matrix tools for MCP server
"""
import logging
from typing import Any, Dict, List, Optional

import numpy as np

from social_learning.graph_core import (
    STOCHASTIC_TOL,
    CombinationMatrix,
    generate_erdos_renyi,
    graph_to_json,
    is_strongly_connected,
    matrix_to_json,
    perron_vector,
    uniform_combination_matrix,
)

logger = logging.getLogger("graph_tools")


def _square(weights: List[float], n: int) -> np.ndarray:
    values = np.asarray(weights, dtype=float)
    if values.size != n * n:
        raise ValueError(f"expected {n * n} row-major weights, got {values.size}")
    return values.reshape(n, n)


def func_generate_graph(n: int, p: float, seed: Optional[int] = None) -> Dict[str, Any]:
    """
    Sample a strongly connected Erdos-Renyi digraph and its averaging combination matrix

    Args:
        n: Number of agents
        p: Edge probability
        seed: Random seed

    Returns:
        Graph, combination matrix and Perron vector
    """
    graph = generate_erdos_renyi(n, p, seed=seed)
    combination = uniform_combination_matrix(graph)
    return {
        "graph": graph_to_json(graph),
        "edges": graph.edge_count(),
        "combination": matrix_to_json(combination.weights),
        "perron": perron_vector(combination).entries.tolist(),
    }


def func_validate_combination_matrix(weights: List[float], n: int) -> Dict[str, Any]:
    """Check left-stochasticity and strong connectivity of a row-major N x N matrix"""
    matrix = _square(weights, n)
    issues = []
    if np.any(matrix < 0):
        issues.append("negative entries")
    column_error = float(np.max(np.abs(matrix.sum(axis=0) - 1.0)))
    if column_error > STOCHASTIC_TOL:
        issues.append(f"columns deviate from 1 by up to {column_error:.3g}")
    connected = False
    if not issues:
        connected = is_strongly_connected(CombinationMatrix(matrix).support())
        if not connected:
            issues.append("support graph is not strongly connected")
    return {"valid": not issues, "strongly_connected": connected, "issues": issues}


def func_perron_vector(weights: List[float], n: int) -> List[float]:
    return perron_vector(CombinationMatrix(_square(weights, n))).entries.tolist()


def register_graph_tools(mcp):
    """Register graph tools with the MCP server"""

    @mcp.tool
    def generate_graph(n: int = 20, p: float = 0.2, seed: int = None) -> Dict[str, Any]:
        """
        Sample a strongly connected directed graph with self-loops

        Args:
            n: Number of agents (default 20)
            p: Edge probability (default 0.2)
            seed: Random seed (optional)

        Returns:
            Adjacency, averaging combination matrix and Perron vector
        """
        try:
            return {"status": "success", **func_generate_graph(n, p, seed)}
        except Exception as e:
            logger.error(f"Error generating graph: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def validate_combination_matrix(weights: List[float], n: int) -> Dict[str, Any]:
        """
        Check a combination matrix given in row-major order

        Args:
            weights: n*n entries, row-major
            n: Number of agents

        Returns:
            Whether the matrix is left-stochastic over a strongly connected graph
        """
        try:
            return {"status": "success", **func_validate_combination_matrix(weights, n)}
        except Exception as e:
            logger.error(f"Error validating combination matrix: {e}")
            return {"status": "error", "error": str(e)}

    @mcp.tool
    def compute_perron_vector(weights: List[float], n: int) -> Dict[str, Any]:
        """
        Perron eigenvector (agent centrality) of a combination matrix

        Args:
            weights: n*n entries, row-major
            n: Number of agents
        """
        try:
            return {"status": "success", "perron": func_perron_vector(weights, n)}
        except Exception as e:
            logger.error(f"Error computing Perron vector: {e}")
            return {"status": "error", "error": str(e)}
