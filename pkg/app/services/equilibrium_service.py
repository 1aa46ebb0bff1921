"""
Equilibrium service: best responses, greatest equilibria and PNE grid searches.

Best-response dynamics sweep the players round-robin in index order. Ties are
broken toward the highest effort everywhere, which makes the dynamics from
the all-ones profile land on the greatest equilibrium of a PRA game.
"""
import logging
import multiprocessing
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from app.api.schemas import EquilibriumResult, SolverConfig
from app.core.exceptions import GuardExceededError, MechanismError, SolverError
from app.models.game import Instance, active_count, as_allocation, as_effort_profile
from app.models.mechanism import PRA, Tullock
from app.services.game_service import deviation_utilities, utilities
from app.services.mechanism_service import allocate
from app.utils.grid import effort_grid
from config.defaults import GOLDEN_TOL_TULLOCK, GRID_CHUNK_PROFILES, MAX_GRID_PROFILES

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = SolverConfig()


@lru_cache(maxsize=32)
def _cached_grid(delta: float) -> np.ndarray:
    grid = effort_grid(delta)
    grid.setflags(write=False)
    return grid


def _require_pra(mech) -> PRA:
    if not isinstance(mech, PRA):
        raise MechanismError(f"best responses are defined for PRA only, got '{mech.kind}'")
    return mech


def _require_solvable(inst: Instance) -> None:
    if inst.allows_negative:
        raise SolverError("instances with negative spillovers are not accepted by solvers")


# ============================================================================
# Best Responses
# ============================================================================

def _best_response(inst: Instance, mech: PRA, i: int, x: np.ndarray, cfg: SolverConfig) -> float:
    if inst.is_own_linear:
        gain = mech.p[i] * inst.quality.marginal(i, x)
        return 1.0 if gain >= inst.cost.c[i] - cfg.br_tol else 0.0
    grid = _cached_grid(cfg.delta)
    values = deviation_utilities(inst, mech, i, grid, x)
    ties = np.nonzero(values >= values.max() - cfg.br_tol)[0]
    return float(grid[ties[-1]])


def best_response(
    inst: Instance,
    mech,
    i: int,
    others,
    cfg: Optional[SolverConfig] = None,
) -> float:
    """
    Best effort of player i against the other players' efforts.

    Utilities linear in own effort (graph quality, linear cost) give a binary
    answer: 1 iff p_i * dQ_i/dx_i >= c_i - br_tol. Otherwise the effort grid
    {0, δ, ..., 1} is scanned and the largest maximizer within br_tol wins.

    Args:
        inst: Game instance
        mech: PRA mechanism
        i: Player index
        others: Full effort profile (entry i is ignored)
        cfg: Solver configuration

    Returns:
        float: Effort in [0, 1]

    Raises:
        MechanismError: If the mechanism is not PRA
    """
    cfg = cfg or DEFAULT_CONFIG
    mech = _require_pra(mech)
    x = as_effort_profile(others, inst.n)
    return _best_response(inst, mech, i, x, cfg)


# ============================================================================
# Best-Response Dynamics
# ============================================================================

def best_response_dynamics(
    inst: Instance,
    p,
    start,
    cfg: Optional[SolverConfig] = None,
    verify: bool = True,
    record_trace: bool = True,
) -> EquilibriumResult:
    """
    Round-robin best-response dynamics under PRA shares p from a start profile.

    Sweeps run until one full sweep changes no effort by more than br_tol.
    iterations counts the sweeps that moved the profile; the trace holds the
    start followed by the profile after each of those sweeps.

    Args:
        inst: Game instance
        p: Allocation shares
        start: Initial effort profile
        cfg: Solver configuration
        verify: Run verify_pne on the final profile
        record_trace: Keep per-sweep profiles

    Returns:
        EquilibriumResult (converged=False when max_iter sweeps did not settle)
    """
    cfg = cfg or DEFAULT_CONFIG
    _require_solvable(inst)
    mech = PRA(p=as_allocation(p, inst.n))
    x = as_effort_profile(start, inst.n).copy()
    trace = [x.tolist()] if record_trace else None

    moved_sweeps = 0
    converged = False
    for _ in range(cfg.max_iterations(inst.n)):
        changed = False
        for i in range(inst.n):
            new = _best_response(inst, mech, i, x, cfg)
            if abs(new - x[i]) > cfg.br_tol:
                changed = True
            x[i] = new
        if not changed:
            converged = True
            break
        moved_sweeps += 1
        if record_trace:
            trace.append(x.tolist())

    if not converged:
        logger.warning(f"Best-response dynamics on '{inst.label}' hit max_iter without settling")

    u = utilities(inst, mech, x)
    verified = verify_pne(inst, mech, x, cfg) if verify else False
    return EquilibriumResult(
        profile=x.tolist(),
        utilities=u.tolist(),
        sw=float(inst.qualities(x).sum()),
        active_count=active_count(x),
        iterations=moved_sweeps,
        converged=converged,
        verified=verified,
        trace=trace,
    )


def greatest_equilibrium(
    inst: Instance,
    p,
    cfg: Optional[SolverConfig] = None,
    verify: bool = True,
    record_trace: bool = True,
) -> EquilibriumResult:
    """
    Greatest pure Nash equilibrium of the PRA game with shares p.

    Best-response dynamics from the all-ones profile; the trace is
    componentwise non-increasing on complementarity-valid instances.

    Example:
        >>> result = greatest_equilibrium(inst, [0.5, 0.5])
        >>> result.profile
        [1.0, 1.0]
    """
    return best_response_dynamics(
        inst, p, np.ones(inst.n), cfg=cfg, verify=verify, record_trace=record_trace
    )


# ============================================================================
# PNE Verification
# ============================================================================

def verify_pne(inst: Instance, mech, x, cfg: Optional[SolverConfig] = None) -> bool:
    """
    Check that no player gains more than deviation_tol by a grid deviation.

    Args:
        inst: Game instance
        mech: Any mechanism (PRA, WTA, Tullock)
        x: Effort profile
        cfg: Solver configuration (delta and deviation_tol)

    Returns:
        bool: True when x is a grid-PNE
    """
    cfg = cfg or DEFAULT_CONFIG
    x = as_effort_profile(x, inst.n)
    grid = _cached_grid(cfg.delta)
    current = utilities(inst, mech, x)
    for i in range(inst.n):
        deviations = deviation_utilities(inst, mech, i, grid, x)
        if deviations.max() > current[i] + cfg.deviation_tol:
            logger.debug(f"Player {i} gains {deviations.max() - current[i]:.3g} by deviating")
            return False
    return True


# ============================================================================
# Grid PNE Search
# ============================================================================

def _batch_utilities(inst: Instance, mech, X: np.ndarray) -> np.ndarray:
    shares = allocate(mech, inst.qualities(X), check_range=inst.enforce_quality_cap)
    return shares - inst.costs(X)


def _scan_chunk(args) -> List[int]:
    """Flat grid indices in [lo, hi) that are grid-PNE."""
    inst, mech, grid, tol, lo, hi = args
    n, m = inst.n, len(grid)
    digits = np.stack(np.unravel_index(np.arange(lo, hi), (m,) * n), axis=1)
    X = grid[digits]
    current = _batch_utilities(inst, mech, X)
    stable = np.ones(len(X), dtype=bool)
    own_grid = np.tile(grid, len(X))
    for i in range(n):
        deviated = np.repeat(X, m, axis=0)
        deviated[:, i] = own_grid
        best = _batch_utilities(inst, mech, deviated)[:, i].reshape(len(X), m).max(axis=1)
        stable &= current[:, i] >= best - tol
    return (np.nonzero(stable)[0] + lo).tolist()


def find_pne_grid(
    inst: Instance,
    mech,
    delta: Optional[float] = None,
    cfg: Optional[SolverConfig] = None,
    workers: int = 1,
) -> List[np.ndarray]:
    """
    Exhaustively list every grid profile that is a grid-PNE.

    An empty list certifies that no pure equilibrium exists on the grid.

    Args:
        inst: Game instance
        mech: Mechanism (PRA, WTA or Tullock)
        delta: Grid step (defaults to cfg.delta)
        cfg: Solver configuration (deviation_tol)
        workers: Processes used to scan chunks of the profile space

    Returns:
        List of profiles in lexicographic order

    Raises:
        GuardExceededError: If the grid holds more than 10^8 profiles
    """
    cfg = cfg or DEFAULT_CONFIG
    delta = cfg.delta if delta is None else delta
    grid = effort_grid(delta)
    m = len(grid)
    total = m ** inst.n
    if total > MAX_GRID_PROFILES:
        raise GuardExceededError(
            f"grid search over {m}^{inst.n} = {total} profiles exceeds the {MAX_GRID_PROFILES} guard"
        )

    tasks = [
        (inst, mech, grid, cfg.deviation_tol, lo, min(lo + GRID_CHUNK_PROFILES, total))
        for lo in range(0, total, GRID_CHUNK_PROFILES)
    ]
    logger.info(f"Scanning {total} grid profiles in {len(tasks)} chunks with {workers} worker(s)")
    if workers > 1 and len(tasks) > 1:
        with multiprocessing.Pool(processes=workers) as pool:
            chunks = pool.map(_scan_chunk, tasks)
    else:
        chunks = [_scan_chunk(task) for task in tasks]

    flat = sorted(index for chunk in chunks for index in chunk)
    if not flat:
        return []
    digits = np.stack(np.unravel_index(np.array(flat), (m,) * inst.n), axis=1)
    return [grid[row].copy() for row in digits]


# ============================================================================
# Continuous Tullock Best Response
# ============================================================================

def continuous_best_response_tullock2(inst: Instance, x1: float) -> float:
    """
    Continuous best response of player 2 under Tullock in a two-player game.

    Bounded golden-section/Brent search (tolerance 1e-6) over [0, 1]; the
    endpoints are compared as well and ties favor the higher effort.

    Raises:
        MechanismError: If the instance does not have two players
        SolverError: If x1 <= 0
    """
    if inst.n != 2:
        raise MechanismError(f"two-player instance required, got n = {inst.n}")
    if x1 <= 0:
        raise SolverError(f"x1 must be positive, got {x1}")
    mech = Tullock()
    profile = np.array([min(float(x1), 1.0), 0.0])

    def payoff(z: float) -> float:
        return float(deviation_utilities(inst, mech, 1, np.array([z]), profile)[0])

    result = minimize_scalar(
        lambda z: -payoff(z),
        bounds=(0.0, 1.0),
        method="bounded",
        options={"xatol": GOLDEN_TOL_TULLOCK},
    )
    candidates = [0.0, float(result.x), 1.0]
    values = [payoff(z) for z in candidates]
    best = max(values)
    return max(z for z, v in zip(candidates, values) if v >= best - 1e-12)
