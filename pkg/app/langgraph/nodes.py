"""
Pipeline nodes for the LangGraph experiment workflow.

Each node reads the SweepState, performs one stage and returns a dictionary
of state updates. A stage that fails with a domain error returns
{"error": "<stage>: <message>"} instead of raising; the workflow routes such
states straight to END.

Nodes:
1. run_sweep_node - Generate instances and run the algorithms
2. aggregate_node - Reduce records to per-point statistics
3. emit_csv_node - Write the records and aggregate CSV files
4. emit_plot_node - Render the two-panel SVG
"""

import logging
from pathlib import Path
from typing import Any, Dict

from app.core.exceptions import SpilloverForgeError
from app.langgraph.state import SweepState
from app.services.experiment_service import (
    aggregate,
    emit_csv,
    emit_plot,
    emit_records_csv,
    run_sweep,
)

logger = logging.getLogger(__name__)

AXIS_LABELS = {"n": "Number of players N", "r": "Edge probability r", "qstar": "Quality support q*"}


def _out_path(state: SweepState, kind: str, suffix: str) -> Path:
    return Path(state["config"].out_dir) / f"{kind}-{state['tag']}.{suffix}"


def _failed(stage: str, state: SweepState, e: Exception) -> Dict[str, Any]:
    logger.error(f"Stage '{stage}' of sweep '{state['tag']}' failed: {e}")
    return {"error": f"{stage}: {e}"}


# ============================================================================
# Node 1: Sweep
# ============================================================================

def run_sweep_node(state: SweepState) -> Dict[str, Any]:
    """
    Run every (axis point, seed) of the sweep.

    Per-instance failures are already recorded with status "error" by
    run_sweep; only failures of the sweep as a whole end up in state["error"].

    Args:
        state: Current pipeline state (requires config and workers)

    Returns:
        dict: State update with records, or with error
    """
    logger.info(f"Running sweep '{state['tag']}'")
    try:
        return {"records": run_sweep(state["config"], workers=state["workers"])}
    except SpilloverForgeError as e:
        return _failed("sweep", state, e)


# ============================================================================
# Node 2: Aggregate
# ============================================================================

def aggregate_node(state: SweepState) -> Dict[str, Any]:
    """Aggregate records into mean / sd rows with theory overlays."""
    try:
        return {"rows": aggregate(state["records"], state["config"])}
    except SpilloverForgeError as e:
        return _failed("aggregate", state, e)


# ============================================================================
# Node 3: CSV
# ============================================================================

def emit_csv_node(state: SweepState) -> Dict[str, Any]:
    """Write records-<tag>.csv and aggregate-<tag>.csv."""
    try:
        records_path = emit_records_csv(state["records"], _out_path(state, "records", "csv"))
        csv_path = emit_csv(state["rows"], _out_path(state, "aggregate", "csv"))
    except SpilloverForgeError as e:
        return _failed("emit_csv", state, e)
    return {"records_path": str(records_path), "csv_path": str(csv_path)}


# ============================================================================
# Node 4: Plot
# ============================================================================

def emit_plot_node(state: SweepState) -> Dict[str, Any]:
    """Render plot-<tag>.svg."""
    cfg = state["config"]
    fixed = ", ".join(f"{key}={value:g}" for key, value in sorted(cfg.fixed.items()))
    try:
        plot_path = emit_plot(
            state["rows"],
            _out_path(state, "plot", "svg"),
            axis_label=AXIS_LABELS[cfg.sweep_axis],
            title=fixed or None,
        )
    except SpilloverForgeError as e:
        return _failed("emit_plot", state, e)
    return {"plot_path": str(plot_path), "error": None}
