"""Application configuration loaded from environment variables."""

import os
from pathlib import Path

from dotenv import load_dotenv

# Load .env from project root
PROJECT_ROOT = Path(__file__).parent.parent
load_dotenv(PROJECT_ROOT / ".env", override=True)

DATA_DIR = Path(__file__).parent / "data"
OUTPUT_DIR = Path(os.getenv("HUBBARD_OUTPUT_DIR", str(PROJECT_ROOT / "output")))

# Symbolic algebra
SCALAR_TOL = 1e-12  # coefficients below this are dropped
CONSISTENCY_TOL = 1e-12  # Σ a_k = 1 per term for product formulas

# Norm evaluation
# Largest particle-number block at 14 modes is C(14,7) = 3432; each extra mode roughly doubles it.
MAX_DENSE_MODES = int(os.getenv("HUBBARD_MAX_DENSE_MODES", "14"))
SHIFT_WINDOW = int(os.getenv("HUBBARD_SHIFT_WINDOW", "2"))  # Λ' coefficients in [-R, R]
NORM_CONCURRENCY = int(os.getenv("HUBBARD_NORM_CONCURRENCY", "4"))
NORM_CACHE_SIZE = int(os.getenv("HUBBARD_NORM_CACHE_SIZE", "4096"))  # distinct operators kept

# Empirical comparison
MAX_EVOLUTION_MODES = int(os.getenv("HUBBARD_MAX_EVOLUTION_MODES", "16"))
DEFAULT_T_GRID = (1e-3, 0.5, 20)  # log-spaced start, stop, count

# Output
OUTPUT_SIG_FIGS = int(os.getenv("HUBBARD_OUTPUT_SIG_FIGS", "6"))
LOG_LEVEL = os.getenv("HUBBARD_LOG_LEVEL", "INFO")
