"""
Integration tests for the LangGraph experiment workflow.

Runs the complete pipeline on small sweeps and checks the written artifacts.
"""

from pathlib import Path
from unittest.mock import patch

import pytest

from app.api.schemas import SweepConfig
from app.core.exceptions import ExperimentError
from app.langgraph.workflow import create_workflow, run_pipeline, sweep_tag
from app.main import main
from app.services.experiment_service import AGGREGATE_COLUMNS, read_aggregate_csv


def small_config(out_dir, **overrides) -> SweepConfig:
    params = dict(
        sweep_axis="n",
        axis_values=[6, 12],
        fixed={"r": 0.5, "qstar": 1.0},
        instances_per_point=4,
        master_seed=7,
        out_dir=str(out_dir),
    )
    params.update(overrides)
    return SweepConfig(**params)


class TestWorkflowCreation:
    """Tests for workflow creation and structure."""

    def test_create_workflow_returns_compiled_graph(self):
        workflow = create_workflow()
        assert callable(workflow.invoke)

    def test_workflow_nodes_are_registered(self):
        nodes = set(create_workflow().get_graph().nodes)
        assert {"sweep", "aggregate", "emit_csv", "emit_plot"} <= nodes

    def test_sweep_tag(self, tmp_path):
        assert sweep_tag(small_config(tmp_path)) == "n_qstar1_r0.5"


class TestWorkflowExecution:
    """Tests for full workflow execution."""

    def test_pipeline_writes_artifacts(self, tmp_path):
        state = run_pipeline(small_config(tmp_path))

        assert len(state["records"]) == 2 * 4 * 2
        assert len(state["rows"]) == 2 * 2
        for key in ("records_path", "csv_path", "plot_path"):
            assert Path(state[key]).exists()
        assert Path(state["plot_path"]).name == "plot-n_qstar1_r0.5.svg"

        header = Path(state["csv_path"]).read_text().splitlines()[0]
        assert header.split(",") == AGGREGATE_COLUMNS
        assert len(read_aggregate_csv(state["csv_path"])) == 4

    def test_pipeline_is_deterministic(self, tmp_path):
        first = run_pipeline(small_config(tmp_path / "a"), tag="run")
        second = run_pipeline(small_config(tmp_path / "b"), tag="run")
        for key in ("records_path", "csv_path", "plot_path"):
            assert Path(first[key]).read_bytes() == Path(second[key]).read_bytes()

    def test_single_algorithm(self, tmp_path):
        state = run_pipeline(small_config(tmp_path, algorithms=["equal"]))
        assert {row.algorithm for row in state["rows"]} == {"equal"}

    @patch("app.langgraph.nodes.emit_plot")
    def test_nodes_run_in_order(self, mock_emit_plot, tmp_path):
        """The plot stage receives the rows produced by aggregation."""
        mock_emit_plot.side_effect = lambda rows, path, **kwargs: path
        state = run_pipeline(small_config(tmp_path))
        rows_passed = mock_emit_plot.call_args[0][0]
        assert rows_passed == state["rows"]
        assert not Path(state["plot_path"]).exists()


class TestWorkflowFailures:
    """Tests for stage failures ending the pipeline early."""

    @patch("app.langgraph.nodes.emit_plot")
    @patch("app.langgraph.nodes.emit_csv")
    def test_failed_stage_skips_the_rest(self, mock_emit_csv, mock_emit_plot, tmp_path):
        mock_emit_csv.side_effect = ExperimentError("disk full")

        state = create_workflow().invoke({"config": small_config(tmp_path), "workers": 1, "tag": "run"})

        assert state["error"] == "emit_csv: disk full"
        assert "csv_path" not in state
        mock_emit_plot.assert_not_called()

    @patch("app.langgraph.nodes.aggregate")
    def test_run_pipeline_raises_recorded_error(self, mock_aggregate, tmp_path):
        mock_aggregate.side_effect = ExperimentError("no successful records to aggregate")

        with pytest.raises(ExperimentError, match="failed at aggregate: no successful records"):
            run_pipeline(small_config(tmp_path), tag="run")
        assert not (tmp_path / "aggregate-run.csv").exists()

    @patch("app.langgraph.nodes.emit_csv")
    def test_cli_maps_pipeline_failure_to_exit_one(self, mock_emit_csv, tmp_path, capsys):
        mock_emit_csv.side_effect = ExperimentError("disk full")
        args = [
            "experiment", "--sweep", "n", "--values", "5", "--fixed-r", "0.5", "--fixed-qstar", "1",
            "--instances", "2", "--out-dir", str(tmp_path),
        ]
        assert main(args) == 1
        assert "emit_csv: disk full" in capsys.readouterr().err

