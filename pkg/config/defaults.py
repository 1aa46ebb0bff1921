"""
Numeric tolerances and enumeration guards.

Tables:
- Slack values for feasibility and range checks
- Solver defaults (grid step, best-response and deviation tolerances)
- Guards for exhaustive enumerations
"""

from typing import Dict


# ============================================================================
# Slack and tolerance values
# ============================================================================

SHARE_SUM_SLACK: float = 1e-12        # sum(p) <= 1 + slack
QUALITY_RANGE_SLACK: float = 1e-12    # Q in [0, 1] +/- slack
WTA_TIE_TOL: float = 1e-12            # argmax band for winner-takes-all
COMPLEMENTARITY_TOL: float = 1e-8
AXIOM_TOL: float = 1e-8
GRID_SNAP_TOL: float = 1e-9           # absorbs float error in k*eps conversions


# ============================================================================
# Solver defaults
# ============================================================================

SOLVER_DEFAULTS: Dict[str, float] = {
    "delta": 0.01,
    "br_tol": 1e-10,
    "deviation_tol": 1e-9,
}

GOLDEN_TOL_ISOLATED: float = 1e-8
GOLDEN_TOL_TULLOCK: float = 1e-6
FINITE_DIFF_STEP: float = 1e-2


# ============================================================================
# Enumeration guards
# ============================================================================

MAX_GRID_PROFILES: int = 10**8
MAX_SUBSET_ORACLE_PLAYERS: int = 20
MAX_ALLOCATION_GRID: int = 10**7
GRID_CHUNK_PROFILES: int = 4096


def default_iterations(n: int) -> int:
    """Default sweep cap for n players: 10n + 100."""
    return 10 * n + 100
