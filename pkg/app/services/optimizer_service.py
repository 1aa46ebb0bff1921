"""
Optimizer service: welfare-maximizing allocations.

Algorithms:
- GCS (greedy cost selection) for linear-cost graph instances
- NSR (no-spillover relaxation) solved as a multiple-choice knapsack DP
- Equal allocation baseline (p_i = 1/N)

HOP and the brute-force oracles live in tree_service and oracle_service;
run_solver dispatches to all of them by name.
"""
import logging
import time
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from app.api.schemas import EquilibriumResult, SolveOutcome, SolverConfig
from app.core.exceptions import InstanceValidationError, SolverError
from app.models.game import Instance, as_allocation
from app.services.equilibrium_service import greatest_equilibrium
from app.services.oracle_service import brute_force_allocation_oracle, brute_force_subset_oracle
from app.services.tree_service import hop_solve, instance_to_tree
from app.utils.grid import effort_grid, grid_units
from config.defaults import GOLDEN_TOL_ISOLATED, SHARE_SUM_SLACK, SOLVER_DEFAULTS

logger = logging.getLogger(__name__)

ALGORITHMS = ("gcs", "nsr", "hop", "oracle-subset", "oracle-alloc", "equal")


def _require_graph_linear(inst: Instance, name: str) -> None:
    if not inst.is_own_linear:
        raise SolverError(f"{name} needs graph quality with linear costs")
    if inst.allows_negative:
        raise SolverError("instances with negative spillovers are not accepted by solvers")


# ============================================================================
# Greedy Cost Selection
# ============================================================================

def gcs(inst: Instance) -> SolveOutcome:
    """
    Greedy cost selection.

    Players are sorted by cost. For k = N down to 1 the k cheapest players get
    tight portions c_i / (scale * (q_i + sum over the other k-1 of g_ij r_ij));
    the first k whose portions fit in the unit budget wins. Denominators are
    shrunk incrementally as k decreases. If no k fits, nobody is paid.

    Args:
        inst: Graph instance with linear costs

    Returns:
        SolveOutcome; predicted_active is the chosen cost prefix
    """
    _require_graph_linear(inst, "GCS")
    quality = inst.quality
    c = inst.cost.c
    order = np.argsort(c, kind="stable")
    weights = quality.weights[np.ix_(order, order)]
    costs = c[order]
    denominators = quality.scale * (quality.q[order] + weights.sum(axis=1))

    p = np.zeros(inst.n)
    chosen = 0
    for k in range(inst.n, 0, -1):
        head, cost_head = denominators[:k], costs[:k]
        with np.errstate(divide="ignore", invalid="ignore"):
            portions = np.where(head > 0, cost_head / np.where(head > 0, head, 1.0), np.inf)
        portions = np.where(cost_head == 0, 0.0, portions)
        if portions.sum() <= 1.0 + SHARE_SUM_SLACK:
            p[order[:k]] = portions
            chosen = k
            break
        denominators[: k - 1] -= quality.scale * weights[: k - 1, k - 1]

    x = np.zeros(inst.n)
    x[order[:chosen]] = 1.0
    logger.info(f"GCS on '{inst.label}': incentivized {chosen} of {inst.n}")
    return SolveOutcome(
        algorithm="gcs",
        p=p.tolist(),
        predicted_active=order[:chosen].tolist(),
        predicted_sw=float(inst.qualities(x).sum()),
    )


# ============================================================================
# No-Spillover Relaxation
# ============================================================================

def _isolated_values(inst: Instance, i: int, share: float, z: np.ndarray) -> np.ndarray:
    own = inst.deviation_qualities(i, z, np.zeros(inst.n))[:, i]
    return share * own - inst.player_costs(i, z)


def isolated_best_effort(inst: Instance, i: int, share: float) -> float:
    """
    argmax_z share * Q_i(z, 0_-i) - c_i(z) over [0, 1].

    Objectives linear in z answer 0 or 1 (ties go to 1). Otherwise the best
    point of the 0.01 effort grid is refined by a bounded golden-section
    search (tolerance 1e-8) on its neighbouring cells.

    Raises:
        InstanceValidationError: If share is outside [0, 1]
    """
    if not 0.0 <= share <= 1.0:
        raise InstanceValidationError(f"share must lie in [0, 1], got {share}", field="share")
    br_tol = SOLVER_DEFAULTS["br_tol"]
    if inst.is_own_linear:
        gain = share * inst.quality.scale * inst.quality.q[i]
        return 1.0 if gain >= inst.cost.c[i] - br_tol else 0.0

    grid = effort_grid(SOLVER_DEFAULTS["delta"])
    values = _isolated_values(inst, i, share, grid)
    k = int(np.nonzero(values >= values.max() - br_tol)[0][-1])
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    refined = minimize_scalar(
        lambda z: -float(_isolated_values(inst, i, share, np.array([z]))[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": GOLDEN_TOL_ISOLATED},
    )
    z_refined = float(np.clip(refined.x, 0.0, 1.0))
    if -refined.fun > values[k] + br_tol:
        return z_refined
    return float(grid[k])


def nsr_objective(inst: Instance, p) -> float:
    """Relaxed welfare sum_i Q_i(isolated_best_effort(i, p_i), 0_-i)."""
    p = as_allocation(p, inst.n)
    total = 0.0
    for i in range(inst.n):
        z = isolated_best_effort(inst, i, float(p[i]))
        total += float(inst.deviation_qualities(i, np.array([z]), np.zeros(inst.n))[0, i])
    return total


def _nsr_profits(inst: Instance, eps: float, capacity: int) -> np.ndarray:
    """profit[i, k] = Q_i(y_i(kε), 0_-i)."""
    profits = np.zeros((inst.n, capacity + 1))
    zeros = np.zeros(inst.n)
    for i in range(inst.n):
        efforts = np.array([isolated_best_effort(inst, i, min(k * eps, 1.0)) for k in range(capacity + 1)])
        profits[i] = inst.deviation_qualities(i, efforts, zeros)[:, i]
    return profits


def nsr_solve(
    inst: Instance,
    eps: float,
    cfg: Optional[SolverConfig] = None,
) -> SolveOutcome:
    """
    Solve the no-spillover relaxation exactly over the ε-grid.

    Multiple-choice knapsack: one class per player, item k has weight k and
    profit Q_i(y_i(kε), 0_-i), capacity floor(1/ε). The DP runs over exact
    weights; within a class the smallest weight wins ties, and the final
    weight is the smallest one reaching the optimum.

    Args:
        inst: Game instance
        eps: Share granularity in (0, 1]
        cfg: Solver configuration for the realized equilibrium

    Returns:
        SolveOutcome; objective holds the relaxed value, predicted_sw the
        welfare at the greatest equilibrium of the returned shares
    """
    capacity = grid_units(eps)
    profits = _nsr_profits(inst, eps, capacity)

    budgets = np.arange(capacity + 1)
    feasible = budgets[None, :] <= budgets[:, None]
    remaining = np.clip(budgets[:, None] - budgets[None, :], 0, None)

    table = np.full(capacity + 1, -np.inf)
    table[0] = 0.0
    choices = np.zeros((inst.n, capacity + 1), dtype=int)
    for i in range(inst.n):
        candidates = np.where(feasible, table[remaining] + profits[i][None, :], -np.inf)
        choices[i] = candidates.argmax(axis=1)
        table = candidates[budgets, choices[i]]

    weight = int(np.argmax(table))
    objective = float(table[weight])
    units = np.zeros(inst.n, dtype=int)
    for i in range(inst.n - 1, -1, -1):
        units[i] = choices[i][weight]
        weight -= units[i]

    p = units * eps
    realized = greatest_equilibrium(inst, p, cfg=cfg, verify=False, record_trace=False)
    logger.info(f"NSR on '{inst.label}': relaxed value {objective:.6g}, realized SW {realized.sw:.6g}")
    return SolveOutcome(
        algorithm="nsr",
        p=p.tolist(),
        predicted_active=[i for i, x in enumerate(realized.profile) if x == 1.0],
        predicted_sw=realized.sw,
        epsilon=eps,
        objective=objective,
    )


# ============================================================================
# Baseline and Diagnostics
# ============================================================================

def equal_allocation(n: int) -> np.ndarray:
    """Equal portions p_i = 1/n."""
    if n < 1:
        raise InstanceValidationError(f"n must be at least 1, got {n}", field="n")
    return np.full(n, 1.0 / n)


def equal_solve(inst: Instance, cfg: Optional[SolverConfig] = None) -> SolveOutcome:
    """Equal allocation with its greatest equilibrium as the prediction."""
    p = equal_allocation(inst.n)
    result = greatest_equilibrium(inst, p, cfg=cfg, verify=False, record_trace=False)
    return SolveOutcome(
        algorithm="equal",
        p=p.tolist(),
        predicted_active=[i for i, x in enumerate(result.profile) if x == 1.0],
        predicted_sw=result.sw,
    )


def beta_of(inst: Instance) -> float:
    """
    Tight spillover bound β = max_i (sum_j g_ij r_ij) / q_i.

    Returns infinity when some q_i = 0 receives positive spillover.
    """
    if not inst.is_graph:
        raise SolverError("beta is defined for graph instances")
    incoming = inst.quality.weights.sum(axis=1)
    q = inst.quality.q
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(q > 0, incoming / np.where(q > 0, q, 1.0), np.where(incoming > 0, np.inf, 0.0))
    return float(ratios.max())


def evaluate_allocation(
    inst: Instance,
    p,
    cfg: Optional[SolverConfig] = None,
) -> EquilibriumResult:
    """Greatest equilibrium reached under shares p (realized outcome)."""
    return greatest_equilibrium(inst, p, cfg=cfg, verify=True, record_trace=False)


# ============================================================================
# Dispatcher
# ============================================================================

def run_solver(
    inst: Instance,
    algorithm: str,
    eps: Optional[float] = None,
    cfg: Optional[SolverConfig] = None,
    record_timings: bool = False,
    verify: bool = False,
) -> SolveOutcome:
    """
    Run an optimizer by name.

    Args:
        inst: Game instance
        algorithm: One of gcs, nsr, hop, oracle-subset, oracle-alloc, equal
        eps: Share granularity (nsr, hop, oracle-alloc; optional for oracle-subset)
        cfg: Solver configuration
        record_timings: Attach wall time in seconds
        verify: Attach realized welfare at the greatest equilibrium

    Raises:
        SolverError: For unknown algorithms or missing granularity
        NotATreeError: When hop is asked to solve a non-tree instance
    """
    if algorithm not in ALGORITHMS:
        raise SolverError(f"unknown algorithm '{algorithm}', choose from {list(ALGORITHMS)}")
    if algorithm in ("nsr", "hop", "oracle-alloc") and eps is None:
        raise SolverError(f"{algorithm} needs a granularity (--epsilon)")

    started = time.perf_counter()
    if algorithm == "gcs":
        outcome = gcs(inst)
    elif algorithm == "nsr":
        outcome = nsr_solve(inst, eps, cfg)
    elif algorithm == "hop":
        outcome = hop_solve(instance_to_tree(inst), eps)
    elif algorithm == "oracle-subset":
        outcome = brute_force_subset_oracle(inst, eps)
    elif algorithm == "oracle-alloc":
        outcome = brute_force_allocation_oracle(inst, eps, cfg)
    else:
        outcome = equal_solve(inst, cfg)
    elapsed = time.perf_counter() - started

    updates = {}
    if record_timings:
        updates["elapsed"] = elapsed
    if verify:
        updates["realized_sw"] = evaluate_allocation(inst, outcome.p, cfg).sw
    return outcome.model_copy(update=updates) if updates else outcome
