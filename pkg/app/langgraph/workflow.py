"""
LangGraph workflow definition for experiment sweeps.

Defines the StateGraph pipeline:
1. Run the sweep over random-graph instances
2. Aggregate records per axis point and algorithm
3. Write the records and aggregate CSV files
4. Render the SVG plot

A stage that records an error ends the run; run_pipeline then raises it.
"""

import logging
from typing import Optional

from langgraph.graph import END, START, StateGraph

from app.api.schemas import SweepConfig
from app.core.exceptions import ExperimentError
from app.langgraph.nodes import aggregate_node, emit_csv_node, emit_plot_node, run_sweep_node
from app.langgraph.state import SweepState

logger = logging.getLogger(__name__)


def _continue_to(next_node: str):
    """Router that stops the pipeline once a stage has recorded an error."""

    def route(state: SweepState) -> str:
        return END if state.get("error") else next_node

    return route


def create_workflow():
    """
    Create and compile the experiment pipeline.

    Returns:
        Compiled LangGraph workflow ready for invocation

    Example:
        ```python
        workflow = create_workflow()
        result = workflow.invoke({"config": cfg, "workers": 1, "tag": "n"})
        ```
    """
    builder = StateGraph(SweepState)

    builder.add_node("sweep", run_sweep_node)
    builder.add_node("aggregate", aggregate_node)
    builder.add_node("emit_csv", emit_csv_node)
    builder.add_node("emit_plot", emit_plot_node)

    builder.add_edge(START, "sweep")
    builder.add_conditional_edges("sweep", _continue_to("aggregate"), ["aggregate", END])
    builder.add_conditional_edges("aggregate", _continue_to("emit_csv"), ["emit_csv", END])
    builder.add_conditional_edges("emit_csv", _continue_to("emit_plot"), ["emit_plot", END])
    builder.add_edge("emit_plot", END)

    workflow = builder.compile()
    logger.debug("Experiment workflow compiled")
    return workflow


def sweep_tag(cfg: SweepConfig) -> str:
    """File stem naming the axis and fixed parameters, e.g. 'n_qstar1_r0.5'."""
    parts = [cfg.sweep_axis] + [f"{key}{value:g}" for key, value in sorted(cfg.fixed.items())]
    return "_".join(parts)


def run_pipeline(cfg: SweepConfig, workers: int = 1, tag: Optional[str] = None) -> SweepState:
    """
    Run one sweep through the full pipeline.

    Args:
        cfg: Sweep configuration
        workers: Worker processes for the sweep stage
        tag: Artifact file stem (derived from the config when omitted)

    Returns:
        Final SweepState with records, rows and artifact paths

    Raises:
        ExperimentError: If a stage recorded an error
    """
    tag = tag or sweep_tag(cfg)
    logger.info(f"Starting experiment pipeline '{tag}'")
    state = create_workflow().invoke({"config": cfg, "workers": workers, "tag": tag})
    if state.get("error"):
        raise ExperimentError(f"sweep '{tag}' failed at {state['error']}")
    return state
