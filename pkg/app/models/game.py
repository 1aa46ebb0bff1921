"""
Game-domain models: quality families, cost families and instances.

All models are frozen pydantic models holding read-only numpy arrays, so they
can be shared across worker processes. Vectors are validated from plain lists
and serialized back to lists for the instance JSON format.

Quality families:
- GraphSpillover: Q_i = scale * x_i * (q_i + sum_j g_ij r_ij x_j)
- ScalingLaw: Q_i = x_i * (a + b * (1 - (dc / (sum_j x_j + d)) ** alpha))

Cost families:
- LinearCost: c_i * x
- PowerCost: c_i * x ** exponent
"""
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    ValidationError,
    ValidationInfo,
    field_serializer,
    field_validator,
    model_validator,
)

from app.core.exceptions import InstanceValidationError
from config.defaults import QUALITY_RANGE_SLACK, SHARE_SUM_SLACK


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    """Copy value into a read-only float array of the given rank."""
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{name} must be numeric: {e}")
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


class _ArrayModel(BaseModel):
    """Frozen model base allowing numpy array fields."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, extra="forbid")


# ============================================================================
# Quality Models
# ============================================================================

class GraphSpillover(_ArrayModel):
    """
    Graph spillover quality: intrinsic quality plus weighted in-neighbour effort.

    Row i of g and r describes the spillovers player i receives. Diagonals are
    ignored. scale carries the 1/N factor of random-graph instances.
    """

    kind: Literal["graph"] = "graph"
    q: np.ndarray = Field(..., description="Intrinsic quality per player")
    g: np.ndarray = Field(..., description="Spillover weights, g[i][j] flows from j to i")
    r: np.ndarray = Field(..., description="Adjacency bits, r[i][j] in {0, 1}")
    scale: float = Field(1.0, gt=0, description="Common multiplier on every quality")
    allow_negative: bool = Field(False, description="Permit negative q or g (test-only)")

    _weights: np.ndarray = PrivateAttr()

    @field_validator("q", mode="before")
    @classmethod
    def _validate_q(cls, v):
        return _frozen_array(v, 1, "q")

    @field_validator("g", "r", mode="before")
    @classmethod
    def _validate_matrix(cls, v, info: ValidationInfo):
        arr = _frozen_array(v, 2, info.field_name)
        q = info.data.get("q")
        if q is not None and arr.shape != (q.shape[0], q.shape[0]):
            raise ValueError(
                f"{info.field_name} must have shape ({q.shape[0]}, {q.shape[0]}) to match q, "
                f"got {arr.shape}"
            )
        if info.field_name == "r" and not np.all((arr == 0.0) | (arr == 1.0)):
            raise ValueError("r entries must be 0 or 1")
        return arr

    @model_validator(mode="after")
    def _check_signs(self) -> "GraphSpillover":
        if self.allow_negative:
            return self
        if np.any(self.q < 0):
            raise ValueError("q must be nonnegative")
        off_diagonal = ~np.eye(self.q.shape[0], dtype=bool)
        if np.any(self.g[off_diagonal] < 0):
            raise ValueError("g must be nonnegative off the diagonal")
        return self

    def model_post_init(self, __context) -> None:
        weights = self.g * self.r
        np.fill_diagonal(weights, 0.0)
        weights.setflags(write=False)
        self._weights = weights

    @field_serializer("q", "g", "r")
    def _serialize_array(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def n(self) -> int:
        return int(self.q.shape[0])

    @property
    def weights(self) -> np.ndarray:
        """Effective spillover matrix g * r with a zero diagonal (unscaled)."""
        return self._weights

    def qualities(self, x: np.ndarray) -> np.ndarray:
        """Qualities for one profile (n,) or a batch of profiles (B, n)."""
        x = np.asarray(x, dtype=float)
        return self.scale * x * (self.q + x @ self._weights.T)

    def marginal(self, i: int, x: np.ndarray) -> float:
        """dQ_i/dx_i, which does not depend on x_i."""
        return float(self.scale * (self.q[i] + self._weights[i] @ x))

    def deviation_qualities(self, i: int, z: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Quality vectors (len(z), n) when player i moves to each effort in z."""
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        base = self.qualities(x)
        column = self.scale * x * self._weights[:, i]
        result = base[None, :] + np.outer(z - x[i], column)
        result[:, i] = z * self.marginal(i, x)
        return result


class ScalingLaw(_ArrayModel):
    """
    Scaling-law quality: shared performance curve driven by total effort.

    P(D) = 1 - (dc / D) ** alpha with D = sum_j x_j + d.
    """

    kind: Literal["scaling"] = "scaling"
    a: float = Field(..., ge=0, description="Quality floor")
    b: float = Field(..., ge=0, description="Weight of the performance curve")
    alpha: float = Field(0.095, gt=0, description="Scaling exponent")
    dc: float = Field(..., gt=0, description="Scaling constant")
    d: float = Field(..., description="Baseline data volume, must exceed alpha")

    @model_validator(mode="after")
    def _check_constants(self) -> "ScalingLaw":
        if self.a + self.b > 1.0 + QUALITY_RANGE_SLACK:
            raise ValueError(f"a + b must not exceed 1, got {self.a + self.b}")
        if self.d <= self.alpha:
            raise ValueError(f"d must exceed alpha ({self.alpha}), got {self.d}")
        return self

    def performance(self, total: np.ndarray) -> np.ndarray:
        base = np.asarray(total, dtype=float) + self.d
        if np.any(base <= 0):
            raise InstanceValidationError("sum of efforts plus d must be positive", field="quality.d")
        return 1.0 - (self.dc / base) ** self.alpha

    def qualities(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = x.sum(axis=-1, keepdims=True)
        return x * (self.a + self.b * self.performance(total))

    def deviation_qualities(self, i: int, z: np.ndarray, x: np.ndarray) -> np.ndarray:
        profiles = np.tile(np.asarray(x, dtype=float), (len(z), 1))
        profiles[:, i] = z
        return self.qualities(profiles)

    def min_rate(self) -> float:
        """Infimum of a + b * P over nonnegative totals (reached as effort -> 0)."""
        return float(self.a + self.b * (1.0 - (self.dc / self.d) ** self.alpha))


QualityModel = Annotated[Union[GraphSpillover, ScalingLaw], Field(discriminator="kind")]


# ============================================================================
# Cost Models
# ============================================================================

class LinearCost(_ArrayModel):
    """Linear cost c_i * x with c_i in [0, 1]."""

    kind: Literal["linear"] = "linear"
    c: np.ndarray = Field(..., description="Cost per unit effort")

    @field_validator("c", mode="before")
    @classmethod
    def _validate_c(cls, v):
        arr = _frozen_array(v, 1, "c")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("linear cost coefficients must lie in [0, 1]")
        return arr

    @field_serializer("c")
    def _serialize_c(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def exponent(self) -> float:
        return 1.0

    def costs(self, x: np.ndarray) -> np.ndarray:
        return self.c * np.asarray(x, dtype=float)


class PowerCost(_ArrayModel):
    """Power cost c_i * x ** exponent with exponent >= 1 (convex)."""

    kind: Literal["power"] = "power"
    c: np.ndarray = Field(..., description="Cost coefficients")
    exponent: float = Field(..., ge=1, description="Cost exponent")

    @field_validator("c", mode="before")
    @classmethod
    def _validate_c(cls, v):
        arr = _frozen_array(v, 1, "c")
        if np.any(arr < 0):
            raise ValueError("cost coefficients must be nonnegative")
        return arr

    @field_serializer("c")
    def _serialize_c(self, value: np.ndarray) -> list:
        return value.tolist()

    def costs(self, x: np.ndarray) -> np.ndarray:
        return self.c * np.asarray(x, dtype=float) ** self.exponent


CostModel = Annotated[Union[LinearCost, PowerCost], Field(discriminator="kind")]


# ============================================================================
# Instance
# ============================================================================

class Instance(BaseModel):
    """
    A full game: player count, quality model, cost model and provenance label.

    enforce_quality_cap switches off the Q <= 1 spot check; it exists for the
    winner-takes-all fixture whose second player reaches quality 2.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    n: int = Field(..., ge=1, description="Number of players")
    quality: QualityModel
    cost: CostModel
    label: str = Field("", description="Free-form provenance")
    enforce_quality_cap: bool = Field(True, description="Spot-check Q <= 1 at all-ones")

    @model_validator(mode="after")
    def _check_instance(self) -> "Instance":
        if isinstance(self.quality, GraphSpillover) and self.quality.n != self.n:
            raise ValueError(f"quality.q has length {self.quality.n} but n = {self.n}")
        if self.cost.c.shape[0] != self.n:
            raise ValueError(f"cost.c has length {self.cost.c.shape[0]} but n = {self.n}")
        if isinstance(self.quality, ScalingLaw) and self.quality.min_rate() < -QUALITY_RANGE_SLACK:
            raise ValueError("scaling-law quality becomes negative at small total effort")
        if self.enforce_quality_cap:
            top = self.quality.qualities(np.ones(self.n))
            worst = int(np.argmax(top))
            if top[worst] > 1.0 + QUALITY_RANGE_SLACK:
                raise ValueError(
                    f"quality of player {worst} at all-ones is {top[worst]:.6g}, exceeding 1"
                )
        return self

    # ------------------------------------------------------------------
    # Family predicates
    # ------------------------------------------------------------------

    @property
    def is_graph(self) -> bool:
        return isinstance(self.quality, GraphSpillover)

    @property
    def has_linear_cost(self) -> bool:
        return isinstance(self.cost, LinearCost)

    @property
    def is_own_linear(self) -> bool:
        """True when every utility is linear in the player's own effort."""
        return self.is_graph and self.has_linear_cost

    @property
    def allows_negative(self) -> bool:
        return self.is_graph and self.quality.allow_negative

    # ------------------------------------------------------------------
    # Vectorized evaluation
    # ------------------------------------------------------------------

    def qualities(self, x: np.ndarray) -> np.ndarray:
        return self.quality.qualities(x)

    def deviation_qualities(self, i: int, z: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.quality.deviation_qualities(i, z, x)

    def costs(self, x: np.ndarray) -> np.ndarray:
        return self.cost.costs(x)

    def player_costs(self, i: int, z: np.ndarray) -> np.ndarray:
        """Cost of player i at each effort in z."""
        z = np.asarray(z, dtype=float)
        exponent = self.cost.exponent
        return self.cost.c[i] * (z if exponent == 1.0 else z ** exponent)


# ============================================================================
# Profiles and Allocations
# ============================================================================

def active_count(x: np.ndarray) -> int:
    """K(x): number of players at effort exactly 1."""
    return int(np.count_nonzero(np.asarray(x) == 1.0))


class EffortProfile(_ArrayModel):
    """Joint strategy x in [0, 1]^n."""

    x: np.ndarray

    @field_validator("x", mode="before")
    @classmethod
    def _validate_x(cls, v):
        arr = _frozen_array(v, 1, "x")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("efforts must lie in [0, 1]")
        return arr

    @field_serializer("x")
    def _serialize_x(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def active_count(self) -> int:
        return active_count(self.x)


class AllocationVector(_ArrayModel):
    """Provisional allocation shares p with sum(p) <= 1."""

    p: np.ndarray

    @field_validator("p", mode="before")
    @classmethod
    def _validate_p(cls, v):
        arr = _frozen_array(v, 1, "p")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("shares must lie in [0, 1]")
        if arr.sum() > 1.0 + SHARE_SUM_SLACK:
            raise ValueError(f"shares sum to {arr.sum():.15g} > 1")
        return arr

    @field_serializer("p")
    def _serialize_p(self, value: np.ndarray) -> list:
        return value.tolist()


def _validated(model, field: str, values, n: int, noun: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape[0] != n:
        raise InstanceValidationError(f"expected {n} {noun}, got {arr.shape[0]}", field=field)
    try:
        validated = model.model_validate({field: arr})
    except ValidationError as e:
        message = e.errors()[0]["msg"].removeprefix("Value error, ")
        raise InstanceValidationError(message, field=field)
    return getattr(validated, field).copy()


def as_effort_profile(x, n: int) -> np.ndarray:
    """
    Validate an effort profile through EffortProfile and return a writable copy.

    Raises:
        InstanceValidationError: If the length differs from n or an entry leaves [0, 1]
    """
    return _validated(EffortProfile, "x", x, n, "efforts")


def as_allocation(p, n: int) -> np.ndarray:
    """
    Validate an allocation vector through AllocationVector: entries in [0, 1],
    sum at most 1 (+1e-12).

    Raises:
        InstanceValidationError: If the vector is malformed or over budget
    """
    return _validated(AllocationVector, "p", p, n, "shares")
