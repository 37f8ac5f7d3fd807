from dotenv import load_dotenv
import os

load_dotenv()

OUTPUT_DIR = os.getenv("GSL_OUTPUT_DIR", "results")
LOG_LEVEL = os.getenv("GSL_LOG_LEVEL", "INFO").upper()
MAX_WORKERS = int(os.getenv("GSL_MAX_WORKERS", "1"))
DEFAULT_SEED_COUNT = int(os.getenv("GSL_SEED_COUNT", "5"))

PERRON_TOL = float(os.getenv("GSL_PERRON_TOL", "1e-12"))
PERRON_MAX_ITER = int(os.getenv("GSL_PERRON_MAX_ITER", "100000"))

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
