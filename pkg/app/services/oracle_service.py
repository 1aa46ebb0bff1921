"""
Brute-force oracles used to verify the optimizers on small instances.

- Subset oracle: every activation set S is priced with tight portions
  c_i / Q_i(x_S) (optionally rounded up to the ε-grid)
- Allocation oracle: every grid allocation is solved for its greatest
  equilibrium
"""
import itertools
import logging
from typing import Optional, Union

import numpy as np

from app.api.schemas import SolveOutcome, SolverConfig
from app.core.exceptions import GuardExceededError, SolverError
from app.models.game import Instance
from app.models.tree import TreeInstance
from app.services.equilibrium_service import greatest_equilibrium
from app.utils.grid import grid_units, validate_granularity
from config.defaults import (
    GRID_SNAP_TOL,
    MAX_ALLOCATION_GRID,
    MAX_SUBSET_ORACLE_PLAYERS,
    SHARE_SUM_SLACK,
)

logger = logging.getLogger(__name__)

SUBSET_CHUNK_BITS = 14


def _linear_costs(model: Union[Instance, TreeInstance]) -> np.ndarray:
    if isinstance(model, TreeInstance):
        return model.c
    if not model.is_own_linear:
        raise SolverError("subset oracle needs graph quality with linear costs")
    if model.allows_negative:
        raise SolverError("instances with negative spillovers are not accepted by solvers")
    return model.cost.c


def _tight_portions(c: np.ndarray, Q: np.ndarray, members: np.ndarray) -> np.ndarray:
    """c_i / Q_i for members (0 when c_i = 0, inf when Q_i = 0 < c_i); 0 elsewhere."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(Q > 0, c / np.where(Q > 0, Q, 1.0), np.inf)
    ratio = np.where(c == 0, 0.0, ratio)
    return np.where(members, ratio, 0.0)


def brute_force_subset_oracle(
    model: Union[Instance, TreeInstance],
    eps: Optional[float] = None,
) -> SolveOutcome:
    """
    Best feasible activation set by exhaustive enumeration.

    Members of S play 1, others 0. S is feasible when its tight portions sum
    to at most 1 (1 + 1e-12), or when their ε-unit ceilings fit in
    floor(1/ε) units if eps is given. Ties keep the smallest bitmask.

    Args:
        model: Linear-cost graph instance or tree instance (n <= 20)
        eps: Optional share granularity

    Returns:
        SolveOutcome with tight portions as p

    Raises:
        GuardExceededError: If n > 20
    """
    n = model.n
    if n > MAX_SUBSET_ORACLE_PLAYERS:
        raise GuardExceededError(f"subset oracle supports n <= {MAX_SUBSET_ORACLE_PLAYERS}, got {n}")
    c = _linear_costs(model)
    if eps is not None:
        eps = validate_granularity(eps)
        capacity = grid_units(eps)

    bits = 1 << np.arange(n)
    best_sw, best_mask, best_p = -np.inf, 0, np.zeros(n)
    total = 1 << n
    chunk = 1 << min(n, SUBSET_CHUNK_BITS)
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total))
        members = (masks[:, None] & bits[None, :]) > 0
        X = members.astype(float)
        Q = model.qualities(X)
        portions = _tight_portions(c, Q, members)
        if eps is None:
            feasible = portions.sum(axis=1) <= 1.0 + SHARE_SUM_SLACK
        else:
            with np.errstate(invalid="ignore"):
                units = np.where(portions > 0, np.ceil(portions / eps - GRID_SNAP_TOL), 0.0)
            feasible = units.sum(axis=1) <= capacity
            portions = units * eps
        welfare = np.where(feasible, Q.sum(axis=1), -np.inf)
        k = int(np.argmax(welfare))
        if welfare[k] > best_sw:
            best_sw, best_mask, best_p = float(welfare[k]), int(masks[k]), portions[k]

    active = [i for i in range(n) if best_mask >> i & 1]
    logger.info(f"Subset oracle: best set {active} with SW {best_sw:.6g}")
    return SolveOutcome(
        algorithm="oracle-subset",
        p=best_p.tolist(),
        predicted_active=active,
        predicted_sw=best_sw,
        epsilon=eps,
    )


def brute_force_allocation_oracle(
    inst: Instance,
    eps: float,
    cfg: Optional[SolverConfig] = None,
) -> SolveOutcome:
    """
    Exact optimum of max_p SW(greatest equilibrium) over the ε-grid.

    Allocations are enumerated in lexicographic order of their unit vectors
    and only strictly better welfare replaces the incumbent.

    Raises:
        GuardExceededError: If (floor(1/ε) + 1)^n exceeds 10^7
    """
    capacity = grid_units(eps)
    size = (capacity + 1) ** inst.n
    if size > MAX_ALLOCATION_GRID:
        raise GuardExceededError(
            f"allocation oracle over {size} grid points exceeds the {MAX_ALLOCATION_GRID} guard"
        )

    best_sw, best_p, best_profile = -np.inf, None, None
    for units in itertools.product(range(capacity + 1), repeat=inst.n):
        if sum(units) > capacity:
            continue
        p = np.array(units, dtype=float) * eps
        result = greatest_equilibrium(inst, p, cfg=cfg, verify=False, record_trace=False)
        if result.sw > best_sw:
            best_sw, best_p, best_profile = result.sw, p, result.profile

    active = [i for i, x in enumerate(best_profile) if x == 1.0]
    logger.info(f"Allocation oracle: best p {best_p.tolist()} with SW {best_sw:.6g}")
    return SolveOutcome(
        algorithm="oracle-alloc",
        p=best_p.tolist(),
        predicted_active=active,
        predicted_sw=float(best_sw),
        epsilon=eps,
    )
