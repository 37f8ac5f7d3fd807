"""
JSON Lines trace files: one record per iteration, gzip when the path ends in .gz
"""
import gzip
import json
import logging
from dataclasses import dataclass
from typing import IO, Iterable, List, Optional, Tuple

import numpy as np

from social_learning.errors import TraceFormatError
from social_learning.graph_core import CombinationMatrix, matrix_from_json, matrix_to_json
from social_learning.likelihood_models import BernoulliLikelihood, models_from_json, models_to_json

logger = logging.getLogger("trace_io")


@dataclass(frozen=True)
class LoadedTrace:
    """Contents of a trace file; map_estimates / theta_star are None for ingested traces"""
    lambdas: np.ndarray
    map_estimates: Optional[np.ndarray] = None
    theta_star: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.lambdas.shape[0]


def _open(path: str, mode: str) -> IO[str]:
    if str(path).endswith(".gz"):
        return gzip.open(path, mode + "t", encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def trace_records(lambdas: np.ndarray, map_estimates: Optional[np.ndarray] = None,
                  theta_star: Optional[np.ndarray] = None) -> Iterable[dict]:
    for i, lam in enumerate(lambdas):
        record = {"i": i, "lambda": np.asarray(lam, dtype=float).tolist()}
        if map_estimates is not None:
            record["map"] = np.asarray(map_estimates[i], dtype=int).tolist()
        if theta_star is not None:
            record["theta_star"] = int(theta_star[i])
        yield record


def write_trace(path: str, lambdas: np.ndarray, map_estimates: Optional[np.ndarray] = None,
                theta_star: Optional[np.ndarray] = None) -> str:
    """
    Write a trace file

    Args:
        path: Output path (.jsonl or .jsonl.gz)
        lambdas: T x N x (H-1) log-belief matrices
        map_estimates: Optional T x N per-agent MAP estimates
        theta_star: Optional length-T true state

    Returns:
        The path written
    """
    with _open(path, "w") as handle:
        for record in trace_records(lambdas, map_estimates, theta_star):
            handle.write(json.dumps(record) + "\n")
    logger.info(f"Wrote {len(lambdas)} trace records to {path}")
    return path


def read_trace(path: str) -> LoadedTrace:
    """Load a trace file written by write_trace (or any tool emitting the same format)"""
    lambdas, maps, thetas = [], [], []
    with _open(path, "r") as handle:
        for line_no, line in enumerate(handle):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                lambdas.append(np.asarray(record["lambda"], dtype=float))
            except (ValueError, KeyError) as e:
                raise TraceFormatError(f"{path}:{line_no + 1}: {e}") from e
            if record.get("i", len(lambdas) - 1) != len(lambdas) - 1:
                raise TraceFormatError(f"{path}:{line_no + 1}: iteration indices are not contiguous")
            if "map" in record:
                maps.append(record["map"])
            if "theta_star" in record:
                thetas.append(record["theta_star"])

    if not lambdas:
        raise TraceFormatError(f"{path}: no records")
    stacked = np.stack([lam.reshape(lam.shape[0], -1) for lam in lambdas])
    return LoadedTrace(
        lambdas=stacked,
        map_estimates=np.array(maps, dtype=int) if len(maps) == len(lambdas) else None,
        theta_star=np.array(thetas, dtype=int) if len(thetas) == len(lambdas) else None,
    )


@dataclass(frozen=True)
class TruthFile:
    """Ground truth saved next to a simulated trace"""
    combination_changes: List[Tuple[int, CombinationMatrix]]
    models: BernoulliLikelihood


def truth_path_for(trace_path: str) -> str:
    """Ground-truth sidecar written next to a simulated trace"""
    for suffix in (".jsonl.gz", ".jsonl", ".gz"):
        if trace_path.endswith(suffix):
            return trace_path[: -len(suffix)] + ".truth.json"
    return trace_path + ".truth.json"


def write_truth(path: str, combination_changes: List[Tuple[int, CombinationMatrix]],
                models: BernoulliLikelihood) -> str:
    """JSON with the models and every (iteration, matrix) change of the combination matrix"""
    payload = {
        "models": models_to_json(models),
        "combination_changes": [
            {"i": int(i), "matrix": matrix_to_json(matrix.weights)} for i, matrix in combination_changes
        ],
    }
    with _open(path, "w") as handle:
        json.dump(payload, handle)
    logger.info(f"Wrote ground truth to {path}")
    return path


def read_truth(path: str) -> TruthFile:
    try:
        with _open(path, "r") as handle:
            payload = json.load(handle)
        changes = [
            (int(entry["i"]), CombinationMatrix(matrix_from_json(entry["matrix"])))
            for entry in payload["combination_changes"]
        ]
        models = models_from_json(payload["models"])
    except (ValueError, KeyError, TypeError) as e:
        raise TraceFormatError(f"{path}: {e}") from e
    if not changes:
        raise TraceFormatError(f"{path}: no combination matrix")
    return TruthFile(combination_changes=changes, models=models)
