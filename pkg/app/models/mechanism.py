"""
Attention-allocation mechanism definitions.

A mechanism maps the observed quality vector to attention shares. Only the
definition lives here; evaluation is in app.services.mechanism_service.
"""
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_serializer, field_validator

from config.defaults import SHARE_SUM_SLACK


class PRA(BaseModel):
    """Provisional allocation: M_i = p_i * Q_i, unallocated attention is withheld."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, extra="forbid")

    kind: Literal["pra"] = "pra"
    p: np.ndarray = Field(..., description="Shares p_i in [0, 1] with sum <= 1")

    @field_validator("p", mode="before")
    @classmethod
    def _validate_p(cls, v):
        arr = np.array(v, dtype=float)
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValueError("p must be a non-empty vector")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("p entries must lie in [0, 1]")
        if arr.sum() > 1.0 + SHARE_SUM_SLACK:
            raise ValueError(f"p sums to {arr.sum():.15g}, exceeding 1")
        arr.setflags(write=False)
        return arr

    @field_serializer("p")
    def _serialize_p(self, value: np.ndarray) -> list:
        return value.tolist()


class WTA(BaseModel):
    """Winner-takes-all: uniform split among the highest qualities."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["wta"] = "wta"


class Tullock(BaseModel):
    """Tullock contest: M_i = Q_i / sum_j Q_j, uniform when every quality is zero."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["tullock"] = "tullock"


MechanismSpec = Annotated[Union[PRA, WTA, Tullock], Field(discriminator="kind")]

MECHANISM_ADAPTER: TypeAdapter = TypeAdapter(MechanismSpec)


def parse_mechanism(data: dict):
    """Build a mechanism from its {kind, p?} document."""
    return MECHANISM_ADAPTER.validate_python(data)
