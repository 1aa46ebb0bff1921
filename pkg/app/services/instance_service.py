"""
Instance service: seeded generators, hardness constructions, fixtures and I/O.

Generators are pure given their parameters and seed. Random draws come from
numpy Generators so the same seed always yields bit-identical instances.
"""
import json
import logging
from pathlib import Path
from typing import Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError

from app.api.schemas import RandomGraphParams
from app.core.exceptions import InstanceFormatError, InstanceValidationError
from app.models.game import GraphSpillover, Instance, LinearCost
from app.models.mechanism import WTA, Tullock
from app.models.tree import TreeInstance
from app.utils.grid import grid_units
from app.utils.rng import make_rng

logger = logging.getLogger(__name__)

THRESHOLD_MARGIN = 0.1


# ============================================================================
# Random Families
# ============================================================================

def random_graph_instance(params: RandomGraphParams) -> Instance:
    """
    Erdős–Rényi spillover instance.

    q_i, g_ij ~ U[0, q*], c̃_i ~ U[0, 1], r_ij ~ Bernoulli(r) per ordered pair.
    The instance carries scale 1/N with c_i = c̃_i / N, so a player's tight
    portion is c̃_i / (q_i + sum_j g_ij r_ij x_j).

    Args:
        params: Player count, edge probability, support bound and seed

    Returns:
        Instance labelled with its generating parameters
    """
    rng = make_rng(params.seed)
    n = params.n
    q = rng.uniform(0.0, params.qstar, size=n)
    g = rng.uniform(0.0, params.qstar, size=(n, n))
    c = rng.uniform(0.0, 1.0, size=n)
    r = (rng.random(size=(n, n)) < params.r).astype(float)
    np.fill_diagonal(g, 0.0)
    np.fill_diagonal(r, 0.0)
    return Instance(
        n=n,
        quality=GraphSpillover(q=q, g=g, r=r, scale=1.0 / n),
        cost=LinearCost(c=c / n),
        label=f"random-graph n={n} r={params.r} qstar={params.qstar} seed={params.seed}",
    )


def random_tree_instance(n: int, qstar: float, seed: int) -> TreeInstance:
    """
    Uniform random recursive tree rooted at node 0.

    Node i >= 1 attaches to a parent drawn uniformly from 0..i-1;
    q_u, gpar_u ~ U(0, q*] and c_u ~ U[0, 1].
    """
    if n < 1:
        raise InstanceValidationError(f"n must be at least 1, got {n}", field="n")
    if not 0.0 < qstar <= 1.0:
        raise InstanceValidationError(f"qstar must lie in (0, 1], got {qstar}", field="qstar")
    rng = make_rng(seed)
    parent = [None] + [int(rng.integers(0, i)) for i in range(1, n)]
    q = qstar - rng.uniform(0.0, qstar, size=n)
    gpar = qstar - rng.uniform(0.0, qstar, size=n)
    gpar[0] = 0.0
    c = rng.uniform(0.0, 1.0, size=n)
    return TreeInstance(
        n=n, parent=parent, q=q, gpar=gpar, c=c, label=f"random-tree n={n} qstar={qstar} seed={seed}"
    )


def beta_bounded_instance(n: int, beta: float, eps: float, seed: int) -> Instance:
    """
    β-bounded graph instance with decisive incentive thresholds.

    Each player gets a unit threshold k_i on the ε-grid and a spillover ratio
    β_i <= β small enough that c_i / (q_i + S) rounds up to k_i for every
    spillover S in [0, β_i q_i]. Player 0 has k = 1 and β_0 = β, so the bound
    is tight. Row sums of g equal β_i q_i and every link is active.
    """
    if n < 1:
        raise InstanceValidationError(f"n must be at least 1, got {n}", field="n")
    if beta < 0:
        raise InstanceValidationError(f"beta must be nonnegative, got {beta}", field="beta")
    units = grid_units(eps)
    rng = make_rng(seed)

    k = rng.integers(1, units + 1, size=n)
    k[0] = 1
    ratios = np.full(n, float(beta))
    for i in range(1, n):
        if k[i] > 1:
            ratios[i] = min(beta, max(0.0, k[i] / (k[i] - 1) * (1.0 - THRESHOLD_MARGIN) - 1.0))
    if n == 1:
        ratios[0] = 0.0

    lo = (k - 1) * eps * (1.0 + ratios)
    hi = k * eps
    thresholds = lo + (hi - lo) * rng.uniform(THRESHOLD_MARGIN, 1.0 - THRESHOLD_MARGIN, size=n)
    q = rng.uniform(0.1, 1.0 / (1.0 + beta), size=n)
    c = np.minimum(thresholds * q, 1.0)

    g = np.zeros((n, n))
    if n > 1:
        split = rng.uniform(0.0, 1.0, size=(n, n)) + 1e-3
        np.fill_diagonal(split, 0.0)
        g = split / split.sum(axis=1, keepdims=True) * (ratios * q)[:, None]
    r = np.ones((n, n))
    np.fill_diagonal(r, 0.0)
    return Instance(
        n=n,
        quality=GraphSpillover(q=q, g=g, r=r),
        cost=LinearCost(c=c),
        label=f"beta-bounded n={n} beta={beta} eps={eps} seed={seed}",
    )


# ============================================================================
# Hardness Constructions
# ============================================================================

def clique_reduction_instance(graph: nx.Graph) -> Instance:
    """
    Maximum-clique reduction.

    Q_i = (x_i + sum over neighbours x_i x_j) / N and c_i(x) = x / N; the best
    feasible activation set is a maximum clique with welfare ω(G)^2 / N.

    Args:
        graph: Simple undirected graph; nodes are relabelled 0..N-1 in sorted order
    """
    if graph.is_directed():
        raise InstanceValidationError("graph must be undirected", field="graph")
    nodes = sorted(graph.nodes())
    n = len(nodes)
    if n == 0:
        raise InstanceValidationError("graph has no nodes", field="graph")
    adjacency = nx.to_numpy_array(graph, nodelist=nodes, weight=None)
    np.fill_diagonal(adjacency, 0.0)
    adjacency = (adjacency > 0).astype(float)
    return Instance(
        n=n,
        quality=GraphSpillover(q=np.ones(n), g=adjacency, r=adjacency, scale=1.0 / n),
        cost=LinearCost(c=np.full(n, 1.0 / n)),
        label=f"clique-reduction n={n} m={graph.number_of_edges()}",
    )


def knapsack_reduction_instance(
    values: Sequence[float],
    weights: Sequence[float],
    capacity: float,
) -> Instance:
    """
    No-spillover knapsack construction.

    Q_i = v_i x_i and c_i(x) = v_i (w_i / W) x, so each item's tight portion
    is w_i / W and the optimal welfare equals the 0-1 knapsack optimum.

    Raises:
        InstanceValidationError: If values leave [0, 1], weights are negative
                                 or exceed the capacity, or lengths differ
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.shape != w.shape or v.ndim != 1 or v.size == 0:
        raise InstanceValidationError("values and weights must be equal-length non-empty lists", field="weights")
    if np.any(v < 0) or np.any(v > 1):
        raise InstanceValidationError("values must lie in [0, 1]", field="values")
    if capacity <= 0:
        raise InstanceValidationError(f"capacity must be positive, got {capacity}", field="capacity")
    if np.any(w < 0) or np.any(w > capacity):
        raise InstanceValidationError("weights must lie in [0, capacity]", field="weights")
    n = v.size
    return Instance(
        n=n,
        quality=GraphSpillover(q=v, g=np.zeros((n, n)), r=np.zeros((n, n))),
        cost=LinearCost(c=v * w / capacity),
        label=f"knapsack n={n} capacity={capacity}",
    )


# ============================================================================
# Instability Fixtures
# ============================================================================

def counterexample_wta() -> Tuple[Instance, WTA]:
    """Q_1 = x_1, Q_2 = 2 x_2, c = 0.5 x under winner-takes-all (no PNE)."""
    inst = Instance(
        n=2,
        quality=GraphSpillover(q=[1.0, 2.0], g=np.zeros((2, 2)), r=np.zeros((2, 2))),
        cost=LinearCost(c=[0.5, 0.5]),
        label="wta-counter",
        enforce_quality_cap=False,
    )
    return inst, WTA()


def counterexample_tullock() -> Tuple[Instance, Tullock]:
    """Q_1 = 0.5 x_1, Q_2 = x_1 x_2, c = 0.25 x under Tullock (no PNE)."""
    inst = Instance(
        n=2,
        quality=GraphSpillover(q=[0.5, 0.0], g=[[0.0, 0.0], [1.0, 0.0]], r=[[0.0, 0.0], [1.0, 0.0]]),
        cost=LinearCost(c=[0.25, 0.25]),
        label="tullock-counter",
    )
    return inst, Tullock()


FIXTURES = {
    "wta-counter": counterexample_wta,
    "tullock-counter": counterexample_tullock,
}


# ============================================================================
# Instance Files
# ============================================================================

def _field_path(loc) -> str:
    # Discriminated unions insert the tag ("graph", "linear") into the path
    tags = {"graph", "scaling", "linear", "power"}
    return ".".join(str(part) for part in loc if part not in tags) or "instance"


def _decode(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise InstanceFormatError(f"malformed instance document: {e.msg}", offset=offset)
    if not isinstance(data, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    return data


def parse_instance(text: str) -> Union[Instance, TreeInstance]:
    """
    Parse an instance document; documents carrying a parent list are trees.

    Raises:
        InstanceFormatError: If the text is not valid JSON (reports the byte offset)
        InstanceValidationError: If a field violates the model (names the field path)
    """
    data = _decode(text)
    model = TreeInstance if "parent" in data else Instance
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise InstanceValidationError(first["msg"], field=_field_path(first["loc"]))


def load_instance(path: Union[str, Path]) -> Union[Instance, TreeInstance]:
    """Read and validate an instance JSON file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InstanceFormatError(f"cannot read {path}: {e.strerror}")
    inst = parse_instance(text)
    logger.debug(f"Loaded instance '{inst.label}' (n={inst.n}) from {path}")
    return inst


def save_instance(inst: Union[Instance, TreeInstance], path: Union[str, Path]) -> Path:
    """Write an instance as JSON; floats keep their full repr precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(inst.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Saved instance '{inst.label}' to {path}")
    return path
