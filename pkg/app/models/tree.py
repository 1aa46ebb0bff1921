"""
Tree instances: every node receives spillovers from at most its parent.

Q_u(x_u, x_par) = x_u * (q_u + gpar_u * x_par), linear costs c_u * x_u.
"""
from typing import List, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_serializer, field_validator, model_validator


class TreeInstance(BaseModel):
    """Rooted tree game with parent spillovers and linear costs."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, extra="forbid")

    n: int = Field(..., ge=1)
    parent: List[Optional[int]] = Field(..., description="Parent index, None for the root")
    q: np.ndarray = Field(..., description="Intrinsic qualities")
    gpar: np.ndarray = Field(..., description="Spillover weight from the parent")
    c: np.ndarray = Field(..., description="Linear cost coefficients")
    label: str = ""

    _graph: nx.DiGraph = PrivateAttr()
    _parent_index: np.ndarray = PrivateAttr()

    @field_validator("q", "gpar", "c", mode="before")
    @classmethod
    def _validate_vector(cls, v, info):
        arr = np.array(v, dtype=float)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValueError(f"{info.field_name} must be a finite vector")
        if np.any(arr < 0):
            raise ValueError(f"{info.field_name} must be nonnegative")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_tree(self) -> "TreeInstance":
        for name in ("parent", "q", "gpar", "c"):
            if len(getattr(self, name)) != self.n:
                raise ValueError(f"{name} has length {len(getattr(self, name))} but n = {self.n}")
        if np.any(self.c > 1):
            raise ValueError("c must lie in [0, 1]")
        if any(p is not None and not 0 <= p < self.n for p in self.parent):
            raise ValueError("parent indices out of range")
        if not nx.is_arborescence(self._build_graph()):
            raise ValueError("parent links must form a single rooted tree")
        return self

    def _build_graph(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n))
        graph.add_edges_from((p, u) for u, p in enumerate(self.parent) if p is not None)
        return graph

    def model_post_init(self, __context) -> None:
        self._graph = self._build_graph()
        index = np.array([self.n if p is None else p for p in self.parent], dtype=int)
        self._parent_index = index

    @field_serializer("q", "gpar", "c")
    def _serialize_vector(self, value: np.ndarray) -> list:
        return value.tolist()

    @property
    def root(self) -> int:
        return self.parent.index(None)

    def children(self, u: int) -> List[int]:
        return sorted(self._graph.successors(u))

    def postorder(self) -> List[int]:
        return list(nx.dfs_postorder_nodes(self._graph, source=self.root))

    def qualities(self, x: np.ndarray) -> np.ndarray:
        """Qualities for one profile (n,) or a batch (B, n)."""
        x = np.asarray(x, dtype=float)
        padded = np.concatenate([x, np.zeros(x.shape[:-1] + (1,))], axis=-1)
        return x * (self.q + self.gpar * padded[..., self._parent_index])
