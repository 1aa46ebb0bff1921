"""
Tree service: optimal allocations when spillovers form a rooted tree.

HOP runs a post-order dynamic program over integer budgets (multiples of ε):
- V_u(b, x_par): best subtree welfare with budget b given the parent's effort
- T_u(b, x_u): best welfare of u's descendants given u's effort

SCBA convolves children one at a time; hop_extract replays the recorded
decisions top-down to recover the shares.
"""
import logging
import math
from typing import List, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict

from app.api.schemas import SolveOutcome
from app.core.exceptions import NotATreeError, SolverError
from app.models.game import GraphSpillover, Instance, LinearCost
from app.models.tree import TreeInstance
from app.utils.grid import ceil_units, grid_units, units_to_shares

logger = logging.getLogger(__name__)


# ============================================================================
# Conversions
# ============================================================================

def instance_to_tree(inst: Instance) -> TreeInstance:
    """
    Read a graph instance whose spillover digraph is a rooted tree.

    An edge j -> i exists when scale * g_ij * r_ij > 0; each node may have
    at most one such in-edge. The scale is folded into q and gpar.

    Raises:
        NotATreeError: If the instance is not a linear-cost graph instance
                       or its spillovers do not form a single rooted tree
    """
    if not inst.is_own_linear:
        raise NotATreeError("not a tree: HOP needs graph quality with linear costs")
    weights = inst.quality.scale * inst.quality.weights
    graph = nx.DiGraph()
    graph.add_nodes_from(range(inst.n))
    receivers, senders = np.nonzero(weights > 0)
    graph.add_edges_from(zip(senders.tolist(), receivers.tolist()))
    if not nx.is_arborescence(graph):
        raise NotATreeError("not a tree: spillovers do not form a single rooted tree")

    parent = [None] * inst.n
    gpar = np.zeros(inst.n)
    for i, j in zip(receivers.tolist(), senders.tolist()):
        parent[i] = j
        gpar[i] = weights[i, j]
    return TreeInstance(
        n=inst.n,
        parent=parent,
        q=inst.quality.scale * inst.quality.q,
        gpar=gpar,
        c=inst.cost.c,
        label=inst.label,
    )


def tree_to_instance(tree: TreeInstance) -> Instance:
    """Express a tree as a graph instance (scale 1, r set on parent links)."""
    g = np.zeros((tree.n, tree.n))
    r = np.zeros((tree.n, tree.n))
    for u, p in enumerate(tree.parent):
        if p is not None:
            g[u, p] = tree.gpar[u]
            r[u, p] = 1.0
    return Instance(
        n=tree.n,
        quality=GraphSpillover(q=tree.q, g=g, r=r),
        cost=LinearCost(c=tree.c),
        label=tree.label,
    )


# ============================================================================
# Incentive Costs
# ============================================================================

def incentive_units(tree: TreeInstance, u: int, x_par: int, eps: float) -> float:
    """
    ρ̂_u(x_par) in ε-units: ceil(c_u / (q_u + gpar_u * x_par)).

    A zero denominator makes the branch infeasible (infinite) unless c_u = 0.
    """
    cost = float(tree.c[u])
    if cost == 0.0:
        return 0
    denominator = float(tree.q[u] + tree.gpar[u] * x_par)
    if denominator <= 0.0:
        return math.inf
    return ceil_units(cost / denominator, eps)


class HopTables(BaseModel):
    """Decision and split tables of a completed HOP pass."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    units: int
    values: List[np.ndarray]
    decisions: List[np.ndarray]
    splits: List[Tuple[List[np.ndarray], List[np.ndarray]]]
    incentive: List[Tuple[float, float]]


# ============================================================================
# SCBA
# ============================================================================

def scba(child_values: List[np.ndarray], units: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    """
    Sequential children budget allocation.

    Args:
        child_values: V_v(·, x_u) for each child v in processing order,
                      each an array over budgets 0..units
        units: Budget capacity in ε-units

    Returns:
        (T, splits): T[b] is the best total over children with budget b;
        splits[i][b] is the budget handed to child i when children 0..i
        share budget b. Among equal totals the current child takes the least.
    """
    budgets = np.arange(units + 1)
    given = budgets[None, :]
    feasible = given <= budgets[:, None]
    remaining = np.clip(budgets[:, None] - given, 0, None)

    table = np.zeros(units + 1)
    splits = []
    for values in child_values:
        candidates = np.where(feasible, table[remaining] + values[None, :], -np.inf)
        choice = candidates.argmax(axis=1)
        table = candidates[budgets, choice]
        splits.append(choice)
    return table, splits


# ============================================================================
# HOP
# ============================================================================

def _hop_tables(tree: TreeInstance, eps: float) -> HopTables:
    units = grid_units(eps)
    budgets = np.arange(units + 1)
    values: List[np.ndarray] = [None] * tree.n
    decisions: List[np.ndarray] = [None] * tree.n
    splits: List[Tuple] = [None] * tree.n
    incentive = [
        (incentive_units(tree, u, 0, eps), incentive_units(tree, u, 1, eps)) for u in range(tree.n)
    ]

    for u in tree.postorder():
        children = tree.children(u)
        descendants = []
        split_pair = []
        for x_u in (0, 1):
            table, child_splits = scba([values[v][:, x_u] for v in children], units)
            descendants.append(table)
            split_pair.append(child_splits)
        splits[u] = tuple(split_pair)

        value = np.empty((units + 1, 2))
        decision = np.zeros((units + 1, 2), dtype=bool)
        for x_par in (0, 1):
            skip = descendants[0]
            cost = incentive[u][x_par]
            take = np.full(units + 1, -np.inf)
            if cost <= units:
                cost = int(cost)
                gain = float(tree.q[u] + tree.gpar[u] * x_par)
                take[cost:] = gain + descendants[1][budgets[cost:] - cost]
            decision[:, x_par] = take >= skip
            value[:, x_par] = np.where(decision[:, x_par], take, skip)
        values[u] = value
        decisions[u] = decision

    return HopTables(
        units=units, values=values, decisions=decisions, splits=splits, incentive=incentive
    )


def hop_extract(tree: TreeInstance, tables: HopTables, eps: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Recover shares and planned efforts top-down from HOP tables.

    Children are revisited in reverse processing order, peeling off each
    child's recorded budget from the remainder.

    Returns:
        (p, x): shares (multiples of ε) and planned 0/1 efforts
    """
    p_units = np.zeros(tree.n, dtype=int)
    x = np.zeros(tree.n)
    stack = [(tree.root, tables.units, 0)]
    while stack:
        u, budget, x_par = stack.pop()
        x_u = int(tables.decisions[u][budget, x_par])
        if x_u:
            p_units[u] = int(tables.incentive[u][x_par])
            budget -= p_units[u]
        x[u] = float(x_u)
        children = tree.children(u)
        child_splits = tables.splits[u][x_u]
        for index in reversed(range(len(children))):
            given = int(child_splits[index][budget])
            stack.append((children[index], given, x_u))
            budget -= given
    return units_to_shares(p_units, eps), x


def hop_solve(tree: TreeInstance, eps: float) -> SolveOutcome:
    """
    Optimal allocation over the ε-grid for a tree instance.

    Args:
        tree: Tree instance
        eps: Share granularity in (0, 1]

    Returns:
        SolveOutcome whose predicted_sw is V_root(floor(1/ε), 0)

    Raises:
        SolverError: If eps is outside (0, 1]
    """
    if not isinstance(tree, TreeInstance):
        raise SolverError("hop_solve expects a TreeInstance")
    tables = _hop_tables(tree, eps)
    p, x = hop_extract(tree, tables, eps)
    value = float(tables.values[tree.root][tables.units, 0])
    logger.info(f"HOP on '{tree.label}': value {value:.6g}, {int(x.sum())} active")
    return SolveOutcome(
        algorithm="hop",
        p=p.tolist(),
        predicted_active=np.nonzero(x == 1.0)[0].tolist(),
        predicted_sw=value,
        epsilon=eps,
    )
