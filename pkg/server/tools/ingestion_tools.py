"""
Sentiment ingestion tools for MCP server
"""
import logging
from typing import Any, Dict

from social_learning.ingestion import build_belief_series, export_trace, load_sentiment_csv

logger = logging.getLogger("ingestion_tools")


def func_ingest_csv(posts_path: str, out_path: str, tz_offset_hours: float = 0.0) -> Dict[str, Any]:
    records = load_sentiment_csv(posts_path)
    series = build_belief_series(records, tz_offset_hours=tz_offset_hours)
    export_trace(series, out_path)
    return {
        "trace": out_path,
        "agents": series.agents,
        "days": series.n_days,
        "first_day": str(series.days[0].date()),
        "last_day": str(series.days[-1].date()),
    }


def register_ingestion_tools(mcp):
    """Register ingestion tools with the MCP server"""

    @mcp.tool
    def ingest_sentiment_csv(posts_path: str, out_path: str, tz_offset_hours: float = 0.0) -> Dict[str, Any]:
        """
        Turn scored posts into a daily log-belief trace

        Args:
            posts_path: CSV with agent_id,timestamp_iso8601,p_neg,p_neu,p_pos
            out_path: Trace path to write
            tz_offset_hours: Day boundary offset from UTC (default 0)

        Returns:
            Trace path, agent order and day range
        """
        try:
            return {"status": "success", **func_ingest_csv(posts_path, out_path, tz_offset_hours)}
        except Exception as e:
            logger.error(f"Error ingesting sentiment CSV: {e}")
            return {"status": "error", "error": str(e)}
