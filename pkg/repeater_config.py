"""
Repeater Configuration
Numerical tolerances, iteration limits and sweep defaults for the
nested purification toolkit. Every knob can be overridden from the
environment (or a .env file).
"""

import os
from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be a number, got {raw!r}")


def _env_int(name: str, default: int, minimum: int = 1) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"Environment variable {name} must be an integer, got {raw!r}")
    if value < minimum:
        raise ValueError(f"Environment variable {name} must be >= {minimum}, got {value}")
    return value


# ============================================================================
# TOLERANCES
# ============================================================================

# Probability vectors (Bell-diagonal fidelities) must sum to 1 within this
PROB_TOLERANCE = _env_float("NPP_PROB_TOLERANCE", 1e-12)

# Density matrix checks used by the brute-force oracle
HERMITIAN_TOLERANCE = _env_float("NPP_HERMITIAN_TOLERANCE", 1e-12)
PSD_TOLERANCE = _env_float("NPP_PSD_TOLERANCE", 1e-10)

# Oracle vs closed-form agreement required by `cli verify`
VERIFY_TOLERANCE = _env_float("NPP_VERIFY_TOLERANCE", 1e-10)

# ============================================================================
# PURIFICATION
# ============================================================================

MAX_PURIFICATION_ROUNDS = _env_int("NPP_MAX_ROUNDS", 64)

# Relative slack when comparing rapidities, absorbs atanh/tanh rounding
RAPIDITY_RTOL = 1e-12

# ============================================================================
# PLANNER
# ============================================================================

# Growth classification: mean second difference of log2 M over a tail window
GROWTH_WINDOW = _env_int("NPP_GROWTH_WINDOW", 5, minimum=3)
GROWTH_THRESHOLD = _env_float("NPP_GROWTH_THRESHOLD", 0.05)
GROWTH_MIN_POINTS = 4

# Switcher restriction only holds for "sufficiently large" working fidelity
ONPP_MIN_FIDELITY = 0.95

SWEEP_WORKERS = _env_int("NPP_SWEEP_WORKERS", 4)

# ============================================================================
# CHAIN CONVENTION / CLI
# ============================================================================

CONVENTIONS = ("paper", "strict")
DEFAULT_CONVENTION = os.getenv("NPP_CONVENTION", "paper").strip().lower()
if DEFAULT_CONVENTION not in CONVENTIONS:
    raise ValueError(f"NPP_CONVENTION must be one of {CONVENTIONS}, got {DEFAULT_CONVENTION!r}")

LOG_LEVEL = os.getenv("NPP_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

# 17 significant digits reproduce every double exactly
CSV_FLOAT_FORMAT = ".17g"

DEFAULT_VERIFY_TRIALS = 1000
DEFAULT_VERIFY_SEED = 42

# Exit codes
EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
