"""
Sentiment ingestion: per-post sentiment probabilities to daily log-belief series
"""
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from social_learning.errors import IngestionError
from social_learning.trace_io import read_trace, write_trace

logger = logging.getLogger("ingestion")

PROB_CLAMP = 1e-4
CSV_COLUMNS = ["agent_id", "timestamp_iso8601", "p_neg", "p_neu", "p_pos"]


class SentimentRecord(BaseModel):
    """One scored post"""
    model_config = ConfigDict(frozen=True)

    agent_id: str
    timestamp: datetime
    p_neg: float = Field(ge=0.0, le=1.0)
    p_neu: float = Field(ge=0.0, le=1.0)
    p_pos: float = Field(ge=0.0, le=1.0)

    @field_validator("timestamp")
    @classmethod
    def as_utc(cls, value: datetime) -> datetime:
        if value.tzinfo is None:
            return value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc)

    @model_validator(mode="after")
    def probabilities_sum_to_one(self) -> "SentimentRecord":
        total = self.p_neg + self.p_neu + self.p_pos
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"sentiment probabilities sum to {total}, expected 1")
        return self


@dataclass(frozen=True)
class BeliefSeries:
    """values[i, k] is the log-belief ratio of agents[k] on days[i]"""
    agents: List[str]
    days: List[pd.Timestamp]
    values: np.ndarray

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    def as_lambdas(self) -> np.ndarray:
        """Days x N x 1 log-belief matrices (binary hypotheses)"""
        return self.values[:, :, None]


def binary_positive_prob(record: SentimentRecord) -> float:
    """
    Positive-sentiment probability with the neutral label removed, clamped to [1e-4, 1-1e-4]

    Args:
        record: Scored post

    Returns:
        p_pos / (p_neg + p_pos) after clamping
    """
    denominator = record.p_neg + record.p_pos
    if denominator <= 0:
        raise IngestionError(f"post by {record.agent_id} at {record.timestamp} is purely neutral")
    return float(np.clip(record.p_pos / denominator, PROB_CLAMP, 1.0 - PROB_CLAMP))


def build_belief_series(records: Iterable[SentimentRecord], tz_offset_hours: float = 0.0,
                        agents: Optional[Sequence[str]] = None) -> BeliefSeries:
    """
    Daily log-belief ratios: the mean of ln(p / (1 - p)) over an agent's posts of that day.

    Days without posts repeat the agent's previous value; days before its first
    post are 0. Days are calendar days at UTC + tz_offset_hours.

    Args:
        records: Scored posts, any order
        tz_offset_hours: Offset of the day boundary from UTC
        agents: Agent order of the output (defaults to sorted agent ids)

    Returns:
        BeliefSeries covering every day from the first to the last post
    """
    rows = []
    for record in records:
        try:
            p = binary_positive_prob(record)
        except IngestionError as e:
            logger.warning(f"Dropping record: {e}")
            continue
        rows.append((record.agent_id, record.timestamp, float(np.log(p / (1.0 - p)))))
    if not rows:
        raise IngestionError("no usable sentiment records")

    frame = pd.DataFrame(rows, columns=["agent_id", "timestamp", "log_ratio"])
    local = pd.to_datetime(frame["timestamp"], utc=True) + pd.Timedelta(hours=tz_offset_hours)
    frame["day"] = local.dt.tz_localize(None).dt.normalize()

    daily = frame.groupby(["day", "agent_id"])["log_ratio"].mean().unstack("agent_id")
    order = list(agents) if agents is not None else sorted(frame["agent_id"].unique())
    missing = set(frame["agent_id"].unique()) - set(order)
    if missing:
        logger.warning(f"Ignoring posts by {len(missing)} agent(s) outside the given order")
    days = pd.date_range(daily.index.min(), daily.index.max(), freq="D")
    daily = daily.reindex(index=days, columns=order).ffill().fillna(0.0)

    logger.info(f"Belief series: {len(order)} agents over {len(days)} days from {len(rows)} posts")
    return BeliefSeries(agents=order, days=list(days), values=daily.to_numpy(dtype=float))


def load_sentiment_csv(path: str) -> List[SentimentRecord]:
    """Read posts from a CSV with header agent_id,timestamp_iso8601,p_neg,p_neu,p_pos"""
    frame = pd.read_csv(path, dtype={"agent_id": str})
    absent = [column for column in CSV_COLUMNS if column not in frame.columns]
    if absent:
        raise IngestionError(f"{path} lacks columns {absent}")
    if frame.empty:
        raise IngestionError(f"{path} holds no posts")
    return [
        SentimentRecord(agent_id=row.agent_id, timestamp=row.timestamp_iso8601,
                        p_neg=row.p_neg, p_neu=row.p_neu, p_pos=row.p_pos)
        for row in frame.itertuples(index=False)
    ]


def export_trace(series: BeliefSeries, path: str) -> str:
    """Write the series in the simulator's trace format (H=2, no map / theta_star fields)"""
    return write_trace(path, series.as_lambdas())


def series_from_trace(path: str, agents: Optional[Sequence[str]] = None,
                      days: Optional[Sequence[pd.Timestamp]] = None) -> BeliefSeries:
    """Reload an exported series; agent names and days default to positional labels"""
    lambdas = read_trace(path).lambdas
    if lambdas.shape[2] != 1:
        raise IngestionError(f"{path} is not a binary-hypothesis trace")
    values = lambdas[:, :, 0]
    agents = list(agents) if agents is not None else [str(k) for k in range(values.shape[1])]
    days = list(days) if days is not None else list(range(values.shape[0]))
    return BeliefSeries(agents=agents, days=days, values=values)
