"""
Pipeline state definition for LangGraph.

Defines the SweepState TypedDict that carries one parameter sweep from its
configuration through records and aggregates to the written artifacts.
"""

from typing import List, Optional

from typing_extensions import NotRequired, TypedDict

from app.api.schemas import AggregateRow, ExperimentRecord, SweepConfig


class SweepState(TypedDict):
    """
    State schema for the experiment pipeline.

    Required fields (must be provided at invocation):
        config: Sweep configuration
        workers: Worker processes for the sweep node
        tag: File stem shared by the artifacts of this sweep

    Optional fields (populated during execution):
        records: Per-instance records
        rows: Aggregated rows
        records_path / csv_path / plot_path: Written artifacts
        error: Error message if a stage failed (None if successful)
    """

    # Required input fields
    config: SweepConfig
    workers: int
    tag: str

    # Optional intermediate state fields
    records: NotRequired[List[ExperimentRecord]]
    rows: NotRequired[List[AggregateRow]]
    records_path: NotRequired[str]
    csv_path: NotRequired[str]
    plot_path: NotRequired[str]

    # Error tracking
    error: NotRequired[Optional[str]]
