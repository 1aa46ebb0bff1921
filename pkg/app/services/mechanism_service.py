"""
Mechanism service: attention allocation and axiom diagnostics.

allocate maps quality vectors (one profile or a batch) to share vectors.
check_axioms numerically tests monotonicity in qualities and the separable
form b_i = M_i(all-ones) of a mechanism; solvers never call it.
"""
import logging
from typing import Optional

import numpy as np

from app.api.schemas import AxiomReport
from app.core.exceptions import MechanismError
from app.models.mechanism import PRA, WTA, Tullock
from config.defaults import AXIOM_TOL, QUALITY_RANGE_SLACK, SHARE_SUM_SLACK, WTA_TIE_TOL

logger = logging.getLogger(__name__)


# ============================================================================
# Allocation
# ============================================================================

def _allocate_batch(mech, Q: np.ndarray) -> np.ndarray:
    """Shares for a (B, n) batch of quality vectors."""
    n = Q.shape[1]
    if isinstance(mech, PRA):
        if mech.p.shape[0] != n:
            raise MechanismError(f"PRA has {mech.p.shape[0]} shares for {n} players")
        return mech.p * Q
    if isinstance(mech, Tullock):
        totals = Q.sum(axis=1, keepdims=True)
        uniform = np.full_like(Q, 1.0 / n)
        safe = np.where(totals > 0.0, totals, 1.0)
        return np.where(totals > 0.0, Q / safe, uniform)
    if isinstance(mech, WTA):
        best = Q.max(axis=1, keepdims=True)
        winners = (Q >= best - WTA_TIE_TOL).astype(float)
        return winners / winners.sum(axis=1, keepdims=True)
    raise MechanismError(f"unknown mechanism {mech!r}")


def allocate(mech, Q, check_range: bool = True) -> np.ndarray:
    """
    Map qualities to attention shares.

    Args:
        mech: PRA, WTA or Tullock definition
        Q: Quality vector (n,) or batch (B, n)
        check_range: Reject entries outside [0, 1] (beyond 1e-12 slack)

    Returns:
        Share array with the same shape as Q

    Raises:
        MechanismError: If a quality is out of range or PRA length mismatches
    """
    Q = np.asarray(Q, dtype=float)
    single = Q.ndim == 1
    batch = np.atleast_2d(Q)
    if check_range and (
        np.any(batch < -QUALITY_RANGE_SLACK) or np.any(batch > 1.0 + QUALITY_RANGE_SLACK)
    ):
        raise MechanismError("quality entries must lie in [0, 1]")
    shares = _allocate_batch(mech, batch)
    return shares[0] if single else shares


# ============================================================================
# Axiom Checks
# ============================================================================

def check_axioms(
    mech,
    n: Optional[int] = None,
    samples: int = 200,
    seed: int = 0,
    h: float = 1e-4,
) -> AxiomReport:
    """
    Check monotonicity (dM_i/dQ_k >= -1e-8) and separability of a mechanism.

    Monotonicity uses forward differences on random quality vectors drawn from
    [h, 1 - h]^n. Separability checks M_i(1, ..., 1) = p_i with sum(p) <= 1,
    and M_i(Q) = M_i(1, ..., 1) * Q_i along the sample.

    Args:
        mech: Mechanism definition
        n: Player count (taken from PRA shares when omitted, default 2 otherwise)
        samples: Number of random quality vectors
        seed: RNG seed
        h: Difference step

    Returns:
        AxiomReport with pass/fail and worst violation per axiom
    """
    if isinstance(mech, WTA):
        return AxiomReport(
            mechanism="wta",
            applicable=False,
            note="not-applicable: non-differentiable",
        )
    if n is None:
        n = mech.p.shape[0] if isinstance(mech, PRA) else 2

    rng = np.random.default_rng(seed)
    points = rng.uniform(h, 1.0 - h, size=(samples, n))
    base = allocate(mech, points)

    worst_slope = np.inf
    for k in range(n):
        bumped = points.copy()
        bumped[:, k] += h
        slopes = (allocate(mech, bumped) - base) / h
        worst_slope = min(worst_slope, float(slopes.min()))
    monotone = worst_slope >= -AXIOM_TOL

    b = allocate(mech, np.ones(n))
    separable_gap = float(np.max(np.abs(base - b * points)))
    separable = separable_gap <= AXIOM_TOL and b.sum() <= 1.0 + SHARE_SUM_SLACK

    logger.debug(
        f"Axioms for {mech.kind}: monotonicity worst {worst_slope:.3g}, "
        f"separability gap {separable_gap:.3g}"
    )
    return AxiomReport(
        mechanism=mech.kind,
        applicable=True,
        monotonicity_passed=bool(monotone),
        monotonicity_worst=worst_slope,
        separability_passed=bool(separable),
        separability_worst=separable_gap,
    )
