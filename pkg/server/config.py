import os
from dotenv import load_dotenv
load_dotenv()


SERVER_NAME = os.getenv("GSL_SERVER_NAME", "Graph Social Learning Tools Server")
MAX_TOOL_ITERATIONS = int(os.getenv("GSL_MAX_TOOL_ITERATIONS", "20000"))
RUN_STORE_LIMIT = int(os.getenv("GSL_RUN_STORE_LIMIT", "32"))
LOG_LEVEL = os.getenv("GSL_LOG_LEVEL", "INFO").upper()
