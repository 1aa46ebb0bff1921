"""
LangGraph experiment pipeline.

- state.py: SweepState TypedDict definition
- nodes.py: Node functions for each pipeline stage
- workflow.py: StateGraph definition, compilation and run_pipeline
"""

from app.langgraph.state import SweepState
from app.langgraph.workflow import create_workflow, run_pipeline, sweep_tag

__all__ = ["SweepState", "create_workflow", "run_pipeline", "sweep_tag"]
