"""
Grid arithmetic for shares and efforts.

Budgets and shares on the ε-grid are handled as integer unit counts
(k means k·ε); conversion to real shares happens only at output.
"""
import math

import numpy as np

from app.core.exceptions import SolverError
from config.defaults import GRID_SNAP_TOL


def validate_granularity(eps: float) -> float:
    """Return eps as float, rejecting values outside (0, 1]."""
    eps = float(eps)
    if not (0.0 < eps <= 1.0):
        raise SolverError(f"granularity must lie in (0, 1], got {eps}")
    return eps


def grid_units(eps: float) -> int:
    """
    Number of ε-units in the unit budget, floor(1/ε).

    Example:
        >>> grid_units(0.05)
        20
    """
    eps = validate_granularity(eps)
    return int(math.floor(1.0 / eps + GRID_SNAP_TOL))


def ceil_units(value: float, eps: float) -> float:
    """
    Smallest k with k·ε >= value, as an integer unit count.

    Infinite or NaN values stay infinite; nonpositive values need 0 units.
    """
    if value is None or not math.isfinite(value):
        return math.inf
    if value <= 0.0:
        return 0
    return int(math.ceil(value / eps - GRID_SNAP_TOL))


def units_to_shares(units, eps: float) -> np.ndarray:
    """Convert integer unit counts to real shares."""
    return np.asarray(units, dtype=float) * float(eps)


def effort_grid(delta: float) -> np.ndarray:
    """
    Effort grid {0, δ, 2δ, …, 1}; 1 is always included.

    Raises:
        SolverError: If delta is outside (0, 1]
    """
    delta = validate_granularity(delta)
    steps = int(math.floor(1.0 / delta + GRID_SNAP_TOL))
    grid = np.arange(steps + 1, dtype=float) * delta
    if abs(grid[-1] - 1.0) <= GRID_SNAP_TOL:
        grid[-1] = 1.0
    else:
        grid = np.append(grid, 1.0)
    return grid
