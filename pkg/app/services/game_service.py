"""
Game service: qualities, costs, utilities and social welfare.

Also hosts the finite-difference diagnostics: the effort-complementarity check
on quality models and the supermodularity check on PRA-induced utilities.
"""
import itertools
import logging
from typing import Callable, Optional

import numpy as np

from app.api.schemas import CrossPartialReport
from app.core.exceptions import InstanceValidationError
from app.models.game import Instance, as_effort_profile
from app.models.mechanism import PRA
from app.services.mechanism_service import allocate
from config.defaults import COMPLEMENTARITY_TOL, FINITE_DIFF_STEP

logger = logging.getLogger(__name__)

MAX_SAMPLED_PAIRS = 400


# ============================================================================
# Evaluation
# ============================================================================

def _check_player(inst: Instance, i: int) -> int:
    if not 0 <= i < inst.n:
        raise InstanceValidationError(f"player index {i} out of range for n = {inst.n}", field="i")
    return int(i)


def qualities(inst: Instance, x) -> np.ndarray:
    """Quality vector Q(x)."""
    return inst.qualities(as_effort_profile(x, inst.n))


def quality(inst: Instance, i: int, x) -> float:
    """
    Quality Q_i(x) of player i.

    Raises:
        InstanceValidationError: If i is out of range or x is invalid
    """
    i = _check_player(inst, i)
    return float(qualities(inst, x)[i])


def social_welfare(inst: Instance, x) -> float:
    """SW(x) = sum of all qualities."""
    return float(np.sum(qualities(inst, x)))


def cost_of(inst: Instance, i: int, effort: float) -> float:
    """
    Cost c_i(effort).

    Raises:
        InstanceValidationError: If effort is outside [0, 1]
    """
    i = _check_player(inst, i)
    if not 0.0 <= effort <= 1.0:
        raise InstanceValidationError(f"effort must lie in [0, 1], got {effort}", field="effort")
    return float(inst.player_costs(i, np.array([effort]))[0])


def utilities(inst: Instance, mech, x) -> np.ndarray:
    """Utility vector U(x) = M(Q(x)) - c(x)."""
    x = as_effort_profile(x, inst.n)
    shares = allocate(mech, inst.qualities(x), check_range=inst.enforce_quality_cap)
    return shares - inst.costs(x)


def utility(inst: Instance, mech, i: int, x) -> float:
    """Utility U_i(x) of player i under a mechanism."""
    i = _check_player(inst, i)
    return float(utilities(inst, mech, x)[i])


def deviation_utilities(inst: Instance, mech, i: int, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    Utilities of player i when it alone moves to each effort in z.

    Under PRA only Q_i matters, so the full quality vector is skipped.
    """
    z = np.asarray(z, dtype=float)
    if isinstance(mech, PRA):
        if inst.is_graph:
            own = z * inst.quality.marginal(i, x)
        else:
            own = inst.deviation_qualities(i, z, x)[:, i]
        return mech.p[i] * own - inst.player_costs(i, z)
    Qz = inst.deviation_qualities(i, z, x)
    shares = allocate(mech, Qz, check_range=inst.enforce_quality_cap)
    return shares[:, i] - inst.player_costs(i, z)


# ============================================================================
# Finite-Difference Diagnostics
# ============================================================================

def _scan_cross_partials(
    evaluate: Callable[[np.ndarray], np.ndarray],
    n: int,
    samples: int,
    h: float,
    seed: int,
    tol: float,
) -> CrossPartialReport:
    """
    Central-difference estimates of d2F_i/dx_i dx_j at random interior points.

    Points are drawn from [h, 1 - h]^n. When n(n-1) exceeds MAX_SAMPLED_PAIRS,
    a random subset of ordered pairs is examined per point.
    """
    if n < 2:
        return CrossPartialReport(
            passed=True, worst_value=0.0, samples=0, note="vacuous: fewer than two players"
        )
    rng = np.random.default_rng(seed)
    all_pairs = np.array([(i, j) for i, j in itertools.permutations(range(n), 2)])

    worst_value = np.inf
    worst_point: Optional[np.ndarray] = None
    worst_pair = None
    for _ in range(samples):
        x = rng.uniform(h, 1.0 - h, size=n)
        if len(all_pairs) > MAX_SAMPLED_PAIRS:
            pairs = all_pairs[rng.choice(len(all_pairs), MAX_SAMPLED_PAIRS, replace=False)]
        else:
            pairs = all_pairs
        rows = np.arange(len(pairs))
        estimates = np.zeros(len(pairs))
        for sign_i, sign_j, weight in ((1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)):
            shifted = np.tile(x, (len(pairs), 1))
            shifted[rows, pairs[:, 0]] += sign_i * h
            shifted[rows, pairs[:, 1]] += sign_j * h
            estimates += weight * evaluate(shifted)[rows, pairs[:, 0]]
        estimates /= 4.0 * h * h
        k = int(np.argmin(estimates))
        if estimates[k] < worst_value:
            worst_value = float(estimates[k])
            worst_point = x
            worst_pair = (int(pairs[k, 0]), int(pairs[k, 1]))

    return CrossPartialReport(
        passed=bool(worst_value >= -tol),
        worst_value=worst_value,
        worst_point=worst_point.tolist() if worst_point is not None else None,
        worst_pair=worst_pair,
        samples=samples,
    )


def check_complementarity(
    inst: Instance,
    samples: int = 200,
    h: float = FINITE_DIFF_STEP,
    seed: int = 0,
    tol: float = COMPLEMENTARITY_TOL,
) -> CrossPartialReport:
    """
    Check that every cross-partial d2Q_i/dx_i dx_j is nonnegative.

    Args:
        inst: Game instance
        samples: Number of random interior points
        h: Difference step (points are clamped to [h, 1 - h])
        seed: RNG seed
        tol: Accepted negative slack

    Returns:
        CrossPartialReport; n < 2 passes vacuously with a note
    """
    report = _scan_cross_partials(inst.qualities, inst.n, samples, h, seed, tol)
    logger.info(f"Complementarity check on '{inst.label}': worst {report.worst_value:.3g}")
    return report


def check_supermodularity(
    inst: Instance,
    p,
    samples: int = 200,
    h: float = FINITE_DIFF_STEP,
    seed: int = 0,
    tol: float = COMPLEMENTARITY_TOL,
) -> CrossPartialReport:
    """Check nonnegative cross-partials of U_i under PRA with shares p."""
    mech = PRA(p=p)

    def evaluate(batch: np.ndarray) -> np.ndarray:
        shares = allocate(mech, inst.qualities(batch), check_range=inst.enforce_quality_cap)
        return shares - inst.costs(batch)

    return _scan_cross_partials(evaluate, inst.n, samples, h, seed, tol)
