"""Global constants and env-driven defaults for egolsm."""

import os
from pathlib import Path

# Directory paths
PROJECT_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = PROJECT_ROOT / "data"
LOG_DIR = PROJECT_ROOT / "log"

_output_env = os.getenv("EGOLSM_OUTPUT_DIR", "")
if _output_env:
    _output_path = Path(_output_env)
    OUTPUT_DIR = _output_path if _output_path.is_absolute() else (PROJECT_ROOT / _output_path).resolve()
else:
    OUTPUT_DIR = PROJECT_ROOT / "results"

# Bundled datasets
KARATE_EDGE_LIST = DATA_DIR / "karate.txt"            # 1-based, 34 nodes, 78 edges
KARATE_LABELS = DATA_DIR / "karate_labels.csv"        # node_id,label (1-based)

# Solver defaults (settings of the simulation study)
DEFAULT_ETA = float(os.getenv("EGOLSM_ETA", "0.2"))
DEFAULT_ITERS = int(os.getenv("EGOLSM_ITERS", "500"))
DEFAULT_STOP_WINDOW = 10

# Bounds on Theta: -M1 <= Theta_ij <= -M2 off the diagonal
DEFAULT_M1 = float(os.getenv("EGOLSM_M1", "6.0"))
DEFAULT_M2 = float(os.getenv("EGOLSM_M2", "0.01"))

# Initialization defaults
DEFAULT_USVT_CONST = 2.01
DEFAULT_PROB_CLIP_EPS = 1e-3
DEFAULT_REFINE_STEPS = 500                            # maximum alternating refinement rounds
DEFAULT_REFINE_TOL = 1e-10

# Analysis defaults
DEFAULT_KMEANS_RESTARTS = 50
HUNGARIAN_MIN_K = 9                                   # exhaustive permutations below this
CORRELATION_MIN_DEGREE = 3
BETWEENNESS_PIVOTS = 100                              # sampled sources for generated networks above this size
BIAS_BOUND_CONSTANT = 10.0                            # monitored, not asserted

# Experiment runner
MAX_WORKERS = int(os.getenv("EGOLSM_WORKERS", "4"))
