"""
Pydantic schemas for solver inputs and results.

Defines the parameter and result models exchanged between services, the
experiment pipeline and the CLI. These models handle validation and JSON
serialization of everything the CLI writes.
"""
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config.defaults import SOLVER_DEFAULTS, default_iterations


# ============================================================================
# SOLVER CONFIGURATION
# ============================================================================

class SolverConfig(BaseModel):
    """
    Tolerances and grid settings for equilibrium computations.

    Ties are always broken toward the highest effort.
    """
    model_config = ConfigDict(frozen=True)

    delta: float = Field(SOLVER_DEFAULTS["delta"], gt=0, le=1, description="Effort grid step")
    br_tol: float = Field(SOLVER_DEFAULTS["br_tol"], gt=0, description="Best-response tie band")
    deviation_tol: float = Field(SOLVER_DEFAULTS["deviation_tol"], gt=0, description="PNE deviation tolerance")
    max_iter: Optional[int] = Field(None, ge=1, description="Sweep cap; None means 10n + 100")
    tie_break: Literal["high"] = "high"

    def max_iterations(self, n: int) -> int:
        return self.max_iter if self.max_iter is not None else default_iterations(n)


# ============================================================================
# EQUILIBRIUM AND SOLVER RESULTS
# ============================================================================

class EquilibriumResult(BaseModel):
    """
    Outcome of best-response dynamics.

    converged means a full sweep changed nothing beyond br_tol; verified means
    no grid deviation gains more than deviation_tol.
    """
    profile: List[float] = Field(..., description="Final effort profile")
    utilities: List[float] = Field(..., description="Per-player utilities at the profile")
    sw: float = Field(..., description="Social welfare at the profile")
    active_count: int = Field(..., ge=0, description="Players at effort 1")
    iterations: int = Field(..., ge=0, description="Number of sweeps run")
    converged: bool
    verified: bool
    trace: Optional[List[List[float]]] = Field(None, description="Profile after every sweep")

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "profile": [1.0, 1.0],
                "utilities": [0.0, 0.25],
                "sw": 1.5,
                "active_count": 2,
                "iterations": 1,
                "converged": True,
                "verified": True,
                "trace": None,
            }
        }
    )


class SolveOutcome(BaseModel):
    """Allocation produced by an optimizer with its predicted outcome."""
    algorithm: Literal["gcs", "nsr", "hop", "oracle-subset", "oracle-alloc", "equal"]
    p: List[float] = Field(..., description="Allocation shares")
    predicted_active: List[int] = Field(..., description="Players expected at effort 1")
    predicted_sw: float = Field(..., description="Predicted social welfare")
    epsilon: Optional[float] = Field(None, description="Share granularity, when gridded")
    objective: Optional[float] = Field(None, description="Relaxed objective (NSR only)")
    realized_sw: Optional[float] = Field(None, description="Welfare at the greatest equilibrium, when verified")
    elapsed: Optional[float] = Field(None, description="Wall time in seconds, when recorded")

    @field_validator("predicted_active")
    @classmethod
    def _sorted_active(cls, v: List[int]) -> List[int]:
        return sorted(v)


# ============================================================================
# DIAGNOSTIC REPORTS
# ============================================================================

class CrossPartialReport(BaseModel):
    """Finite-difference cross-partial scan (complementarity or supermodularity)."""
    passed: bool
    worst_value: float = Field(..., description="Most negative estimate found")
    worst_point: Optional[List[float]] = None
    worst_pair: Optional[Tuple[int, int]] = None
    samples: int
    note: Optional[str] = Field(None, description="Set when the check is vacuous")


class AxiomReport(BaseModel):
    """Monotonicity and separability check for one mechanism."""
    mechanism: str
    applicable: bool
    monotonicity_passed: Optional[bool] = None
    monotonicity_worst: Optional[float] = None
    separability_passed: Optional[bool] = None
    separability_worst: Optional[float] = None
    note: Optional[str] = None

    @property
    def passed(self) -> bool:
        if not self.applicable:
            return True
        return bool(self.monotonicity_passed) and self.separability_passed is not False


# ============================================================================
# INSTANCE GENERATION AND EXPERIMENTS
# ============================================================================

class RandomGraphParams(BaseModel):
    """Parameters of the Erdős–Rényi random-graph instance family."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Number of players")
    r: float = Field(..., ge=0, le=1, description="Edge probability")
    qstar: float = Field(..., ge=0, le=1, description="Upper support of q and g")
    seed: int = Field(0, ge=0, lt=2**64, description="64-bit seed")


SweepAxis = Literal["n", "r", "qstar"]
Algorithm = Literal["gcs", "equal"]


class SweepConfig(BaseModel):
    """
    One parameter sweep of the simulation study.

    fixed must hold the two parameters that are not swept.
    """
    sweep_axis: SweepAxis
    axis_values: List[float] = Field(..., min_length=1)
    fixed: Dict[str, float] = Field(default_factory=dict)
    instances_per_point: int = Field(1000, ge=1)
    master_seed: int = Field(0, ge=0)
    algorithms: List[Algorithm] = Field(default_factory=lambda: ["gcs", "equal"], min_length=1)
    out_dir: str = "./results"
    verify_fraction: float = Field(0.01, ge=0, le=1, description="Share of GCS runs cross-checked")
    record_timings: bool = False

    @model_validator(mode="after")
    def _check_axes(self) -> "SweepConfig":
        missing = {"n", "r", "qstar"} - {self.sweep_axis} - set(self.fixed)
        if missing:
            raise ValueError(f"fixed is missing {sorted(missing)}")
        for name, value in [(self.sweep_axis, v) for v in self.axis_values] + list(self.fixed.items()):
            if name == "n" and (value < 1 or value != int(value)):
                raise ValueError(f"n must be a positive integer, got {value}")
            if name in ("r", "qstar") and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        return self

    def params_at(self, axis_value: float) -> Dict[str, float]:
        """Resolve (n, r, qstar) for one axis point."""
        params = {key: self.fixed[key] for key in ("n", "r", "qstar") if key != self.sweep_axis}
        params[self.sweep_axis] = axis_value
        params["n"] = int(params["n"])
        return params


class ExperimentRecord(BaseModel):
    """One (axis point, seed, algorithm) simulation outcome."""
    axis_value: float
    seed_index: int = Field(..., ge=0)
    algorithm: Algorithm
    sw: float = Field(..., ge=0)
    active_count: int = Field(..., ge=0)
    elapsed: Optional[float] = None
    status: Literal["ok", "error"] = "ok"
    verified: Optional[bool] = None


class AggregateRow(BaseModel):
    """Per (axis point, algorithm) statistics with theory overlays."""
    axis: float
    algorithm: Algorithm
    mean_sw: float
    sd_sw: float
    mean_active: float
    sd_active: float
    theory_sw: float
    theory_active: float
