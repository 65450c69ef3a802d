# config.py
import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Runtime Configuration
LOG_DIR = os.getenv("KWISE_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("KWISE_LOG_LEVEL", "INFO")
OUTPUT_DIR = os.getenv("KWISE_OUTPUT_DIR", "results")

try:
    WORKER_THREADS = int(os.getenv("KWISE_THREADS", str(min(4, os.cpu_count() or 1))))
except ValueError:
    WORKER_THREADS = 0

# Graph Parameters
HYPERCUBE_MAX_M = 20  # 2^20 vertices

# Enumeration Parameters
ENUMERATION_CAP = 2 ** 20  # joint label states
ENUMERATION_TUPLE_CAP = 2 ** 26  # C(n, K) * 2^K cells
ENUMERATION_CHUNK = 2 ** 16  # label vectors per chunk

# Simulation Parameters
REPLICATION_BLOCK = 4096  # replications sharing one RNG stream

# Numerical Parameters
QUAD_TOLERANCE = 1e-10
QUAD_MAX_RESIDUAL = 1e-8
QUAD_LIMIT = 200
CF_DECAY_PROBE = 1e6
CF_DECAY_TOLERANCE = 1e-3
CF_MAX_RESIDUAL = 1e-6
PDF_NEGATIVE_TOLERANCE = 1e-8
MIXTURE_CHUNK = 10000  # points per vector quadrature call

# Statistical Parameters
DEFAULT_ALPHAS = (0.001, 0.01, 0.05)
MOMENT_Z_FLAG = 4.0
MIN_MOMENT_SAMPLES = 10 ** 4
MIN_EXPECTED_CELL = 5

# Output Settings
DEFAULT_GRID = "-6:6:0.01"
TAIL_GRID = "-40:40:0.01"  # S-limit tables keep unit mass to 1e-6
CSV_FLOAT_FORMAT = "%.17g"

# Ensure worker count is usable
if WORKER_THREADS < 1:
    print("Warning: KWISE_THREADS must be a positive integer. Falling back to a single worker.")
    WORKER_THREADS = 1
