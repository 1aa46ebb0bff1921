"""
Unit tests for the command-line entry point.

Tests subcommand dispatch, stdout documents and exit codes
(0 success, 1 domain error, 2 usage error).
"""
import argparse
import json

import pytest

from app import __version__
from app.main import build_parser, main


@pytest.fixture
def graph_file(tmp_path, capsys):
    """Random-graph instance written through the CLI."""
    path = tmp_path / "graph.json"
    assert main(["gen", "--kind", "random-graph", "--n", "6", "--seed", "3", "--out", str(path)]) == 0
    capsys.readouterr()
    return path


@pytest.fixture
def tree_file(tmp_path, capsys):
    path = tmp_path / "tree.json"
    assert main(["gen", "--kind", "random-tree", "--n", "6", "--seed", "3", "--out", str(path)]) == 0
    capsys.readouterr()
    return path


def stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


class TestParser:
    """Tests for argument parsing and usage errors."""

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_missing_subcommand(self):
        assert main([]) == 2

    def test_unknown_algorithm(self, graph_file):
        assert main(["solve", "--instance", str(graph_file), "--algo", "greedy"]) == 2

    def test_subcommands_registered(self):
        parser = build_parser()
        for command in ("gen", "solve", "equilibrium", "probe", "check", "experiment"):
            assert parser.parse_args([command] + {
                "gen": ["--kind", "wta-counter"],
                "solve": ["--instance", "x", "--algo", "gcs"],
                "equilibrium": ["--instance", "x", "--p", "0.5"],
                "probe": [],
                "check": [],
                "experiment": [],
            }[command]).command == command

    def test_resolved_config_on_stderr(self, capsys):
        assert main(["gen", "--kind", "wta-counter"]) == 0
        err = capsys.readouterr().err
        assert err.startswith(f"spillover-forge {__version__} ")


class TestGen:
    """Tests for the gen subcommand."""

    def test_random_graph(self, graph_file, capsys):
        document = json.loads(graph_file.read_text())
        assert document["n"] == 6
        assert document["quality"]["kind"] == "graph"

    def test_same_seed_same_document(self, tmp_path, capsys):
        main(["gen", "--kind", "random-graph", "--n", "5", "--seed", "9"])
        first = capsys.readouterr().out
        main(["gen", "--kind", "random-graph", "--n", "5", "--seed", "9"])
        assert capsys.readouterr().out == first

    def test_clique_from_edges(self, capsys):
        assert main(["gen", "--kind", "clique", "--n", "3", "--edges", "0-1,1-2"]) == 0
        document = stdout_json(capsys)
        assert document["quality"]["r"] == [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]]

    def test_fixture(self, capsys):
        assert main(["gen", "--kind", "tullock-counter"]) == 0
        assert stdout_json(capsys)["label"] == "tullock-counter"

    def test_knapsack(self, capsys):
        args = ["gen", "--kind", "knapsack", "--values", "0.6,0.5", "--weights", "3,2", "--capacity", "4"]
        assert main(args) == 0
        assert stdout_json(capsys)["cost"]["c"] == pytest.approx([0.45, 0.25])

    def test_knapsack_needs_items(self):
        assert main(["gen", "--kind", "knapsack"]) == 2

    def test_bad_edge_list(self):
        assert main(["gen", "--kind", "clique", "--edges", "0:1"]) == 2

    def test_invalid_parameters(self, capsys):
        assert main(["gen", "--kind", "random-graph", "--r", "1.5"]) == 1


class TestSolve:
    """Tests for the solve subcommand."""

    def test_gcs(self, graph_file, capsys):
        assert main(["solve", "--instance", str(graph_file), "--algo", "gcs", "--verify"]) == 0
        document = stdout_json(capsys)
        assert document["algorithm"] == "gcs"
        assert document["realized_sw"] == pytest.approx(document["predicted_sw"])
        assert document["elapsed"] is None

    def test_timings_flag(self, graph_file, capsys):
        assert main(["solve", "--instance", str(graph_file), "--algo", "gcs", "--timings"]) == 0
        assert stdout_json(capsys)["elapsed"] is not None

    def test_hop_on_tree(self, tree_file, capsys):
        assert main(["solve", "--instance", str(tree_file), "--algo", "hop", "--epsilon", "0.1"]) == 0
        assert stdout_json(capsys)["algorithm"] == "hop"

    def test_hop_on_non_tree(self, graph_file, capsys):
        assert main(["solve", "--instance", str(graph_file), "--algo", "hop", "--epsilon", "0.1"]) == 1
        assert "not a tree" in capsys.readouterr().err

    def test_hop_rejects_spillover_free_forest(self, tmp_path, capsys):
        forest = tmp_path / "forest.json"
        args = ["gen", "--kind", "knapsack", "--values", "0.6,0.5", "--weights", "3,2", "--capacity", "4"]
        assert main(args + ["--out", str(forest)]) == 0
        capsys.readouterr()
        assert main(["solve", "--instance", str(forest), "--algo", "hop", "--epsilon", "0.1"]) == 1
        assert "not a tree" in capsys.readouterr().err

    def test_algo_help_mentions_forests(self):
        subparsers = next(a for a in build_parser()._actions if isinstance(a, argparse._SubParsersAction))
        solve = subparsers.choices["solve"]
        assert "forests" in solve.format_help()

    def test_missing_granularity(self, graph_file):
        assert main(["solve", "--instance", str(graph_file), "--algo", "nsr"]) == 1

    def test_missing_instance_file(self, tmp_path, capsys):
        assert main(["solve", "--instance", str(tmp_path / "absent.json"), "--algo", "gcs"]) == 1
        assert "cannot read" in capsys.readouterr().err

    def test_out_file(self, graph_file, tmp_path, capsys):
        out = tmp_path / "out" / "solution.json"
        assert main(["solve", "--instance", str(graph_file), "--algo", "equal", "--out", str(out)]) == 0
        assert json.loads(out.read_text()) == stdout_json(capsys)


class TestEquilibrium:
    """Tests for the equilibrium subcommand."""

    def test_inline_shares_and_trace(self, tmp_path, capsys):
        instance = tmp_path / "tullock.json"
        main(["gen", "--kind", "tullock-counter", "--out", str(instance)])
        capsys.readouterr()
        trace = tmp_path / "trace.csv"
        assert main(["equilibrium", "--instance", str(instance), "--p", "0.5,0.5", "--trace", str(trace)]) == 0
        assert stdout_json(capsys)["profile"] == [1.0, 1.0]
        assert trace.read_text().splitlines() == ["iter,x_1,x_2", "0,1.0,1.0"]

    def test_shares_file(self, graph_file, tmp_path, capsys):
        shares = tmp_path / "p.json"
        shares.write_text(json.dumps({"p": [0.0] * 6}))
        assert main(["equilibrium", "--instance", str(graph_file), "--p", str(shares)]) == 0
        assert stdout_json(capsys)["profile"] == [0.0] * 6

    def test_over_budget_shares(self, graph_file, capsys):
        assert main(["equilibrium", "--instance", str(graph_file), "--p", "[0.9,0.9,0,0,0,0]"]) == 1
        assert "p:" in capsys.readouterr().err

    def test_shares_file_without_p_entry(self, graph_file, tmp_path, capsys):
        shares = tmp_path / "q.json"
        shares.write_text(json.dumps({"q": [0.0] * 6}))
        assert main(["equilibrium", "--instance", str(graph_file), "--p", str(shares)]) == 1
        assert "no 'p' entry" in capsys.readouterr().err

    def test_non_numeric_shares(self, graph_file, capsys):
        assert main(["equilibrium", "--instance", str(graph_file), "--p", '["a", 0, 0, 0, 0, 0]']) == 1
        assert "JSON list of numbers" in capsys.readouterr().err


class TestGridSearchCommand:
    """Tests for the grid PNE search subcommand."""

    def test_wta_fixture_has_no_grid_pne(self, capsys):
        assert main(["probe", "--fixture", "wta-counter", "--delta", "0.1"]) == 0
        assert capsys.readouterr().out.strip() == "no grid PNE found"

    def test_pra_on_tullock_fixture(self, tmp_path, capsys):
        out = tmp_path / "grid.json"
        args = ["probe", "--fixture", "tullock-counter", "--mechanism", "pra", "--delta", "0.5", "--out", str(out)]
        assert main(args) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("found ")
        assert "1 1" in lines[1:]
        document = json.loads(out.read_text())
        assert document["mechanism"] == "pra"
        assert [1.0, 1.0] in document["profiles"]

    def test_inline_mechanism_document(self, tmp_path, capsys):
        out = tmp_path / "grid.json"
        document = json.dumps({"kind": "pra", "p": [0.5, 0.5]})
        args = ["probe", "--fixture", "tullock-counter", "--mechanism", document, "--delta", "0.5", "--out", str(out)]
        assert main(args) == 0
        assert "1 1" in capsys.readouterr().out.splitlines()[1:]
        assert json.loads(out.read_text())["mechanism"] == "pra"

    def test_mechanism_file(self, tmp_path, capsys):
        spec = tmp_path / "wta.json"
        spec.write_text(json.dumps({"kind": "wta"}))
        assert main(["probe", "--fixture", "wta-counter", "--mechanism", str(spec), "--delta", "0.1"]) == 0
        assert capsys.readouterr().out.strip() == "no grid PNE found"

    def test_unknown_mechanism_name(self):
        assert main(["probe", "--fixture", "wta-counter", "--mechanism", "lottery"]) == 2

    def test_pra_share_length_mismatch(self, capsys):
        document = json.dumps({"kind": "pra", "p": [0.2, 0.2, 0.2]})
        assert main(["probe", "--fixture", "tullock-counter", "--mechanism", document]) == 1
        assert "expected 2 shares" in capsys.readouterr().err

    def test_malformed_mechanism_document(self, capsys):
        assert main(["probe", "--fixture", "tullock-counter", "--mechanism", '{"kind": "pra",']) == 1
        assert "malformed mechanism document" in capsys.readouterr().err

    def test_needs_a_game(self):
        assert main(["probe"]) == 2


class TestCheck:
    """Tests for the check subcommand."""

    def test_tullock_fixture_passes_pra_diagnostics(self, capsys):
        assert main(["check", "--fixture", "tullock-counter", "--samples", "50"]) == 0
        document = stdout_json(capsys)
        assert document["passed"] is True
        assert [report["mechanism"] for report in document["axioms"]] == ["pra", "wta", "tullock"]
        assert document["axioms"][2]["monotonicity_passed"] is False

    def test_needs_a_game(self):
        assert main(["check"]) == 2


class TestExperiment:
    """Tests for the experiment subcommand."""

    def test_custom_sweep(self, tmp_path, capsys):
        args = [
            "experiment", "--sweep", "n", "--values", "5,8", "--fixed-r", "0.5", "--fixed-qstar", "1",
            "--instances", "2", "--out-dir", str(tmp_path),
        ]
        assert main(args) == 0
        summary = stdout_json(capsys)
        assert summary[0]["tag"] == "n_qstar1_r0.5"
        assert (tmp_path / "aggregate-n_qstar1_r0.5.csv").exists()
        assert (tmp_path / "plot-n_qstar1_r0.5.svg").exists()
        assert len(summary[0]["rows"]) == 4

    def test_needs_sweep_or_preset(self):
        assert main(["experiment"]) == 2

    def test_missing_fixed_parameter(self, tmp_path):
        args = ["experiment", "--sweep", "n", "--values", "5", "--fixed-r", "0.5", "--out-dir", str(tmp_path)]
        assert main(args) == 1
