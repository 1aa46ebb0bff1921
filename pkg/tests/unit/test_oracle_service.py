"""
Unit tests for the brute-force subset and allocation oracles.
"""
import networkx as nx
import numpy as np
import pytest

from app.core.exceptions import GuardExceededError, SolverError
from app.services.instance_service import clique_reduction_instance
from app.services.oracle_service import brute_force_allocation_oracle, brute_force_subset_oracle
from app.services.tree_service import tree_to_instance
from tests.conftest import make_graph_instance


class TestSubsetOracle:
    """Tests for brute_force_subset_oracle."""

    @pytest.mark.parametrize(
        "graph, expected",
        [
            (nx.complete_graph(2), 2.0),
            (nx.complete_graph(3), 3.0),
            (nx.disjoint_union(nx.complete_graph(3), nx.complete_graph(3)), 1.5),
            (nx.empty_graph(3), 1.0 / 3.0),
        ],
        ids=["k2", "k3", "two-triangles", "edgeless"],
    )
    def test_clique_reduction(self, graph, expected):
        """Best welfare is omega^2 / n."""
        outcome = brute_force_subset_oracle(clique_reduction_instance(graph))
        assert outcome.predicted_sw == pytest.approx(expected)

    def test_chosen_set_is_a_clique(self):
        graph = nx.Graph([(0, 1), (1, 2), (2, 0), (2, 3)])
        outcome = brute_force_subset_oracle(clique_reduction_instance(graph))
        assert outcome.predicted_active == [0, 1, 2]
        assert outcome.p == pytest.approx([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0])

    def test_two_player(self, two_player_graph):
        outcome = brute_force_subset_oracle(two_player_graph)
        assert outcome.predicted_active == [0, 1]
        assert outcome.predicted_sw == pytest.approx(1.1)
        assert outcome.epsilon is None

    def test_granularity_rounds_portions_up(self, two_player_graph):
        """Portions 0.2 and 1/3 become 0.25 and 0.5 on the quarter grid."""
        outcome = brute_force_subset_oracle(two_player_graph, 0.25)
        assert outcome.p == pytest.approx([0.25, 0.5])
        assert outcome.predicted_sw == pytest.approx(1.1)

    def test_half_grid(self, two_player_graph):
        """Both portions round up to 0.5 and still fit."""
        outcome = brute_force_subset_oracle(two_player_graph, 0.5)
        assert outcome.p == pytest.approx([0.5, 0.5])

    def test_empty_set_on_ties(self):
        inst = make_graph_instance([0.0, 0.0], np.zeros((2, 2)), [0.0, 0.0])
        outcome = brute_force_subset_oracle(inst)
        assert outcome.predicted_active == []
        assert outcome.predicted_sw == 0.0

    def test_guard(self):
        inst = make_graph_instance([0.1] * 21, np.zeros((21, 21)), [0.1] * 21)
        with pytest.raises(GuardExceededError):
            brute_force_subset_oracle(inst)

    def test_requires_linear_graph(self, scaling_instance):
        with pytest.raises(SolverError):
            brute_force_subset_oracle(scaling_instance)

    def test_tree_instances_accepted(self, path_tree):
        assert brute_force_subset_oracle(path_tree, 0.1).predicted_sw == pytest.approx(1.4)


class TestAllocationOracle:
    """Tests for brute_force_allocation_oracle."""

    def test_two_player(self, two_player_graph):
        outcome = brute_force_allocation_oracle(two_player_graph, 0.5)
        assert outcome.p == pytest.approx([0.5, 0.5])
        assert outcome.predicted_active == [0, 1]
        assert outcome.predicted_sw == pytest.approx(1.1)

    def test_single_player_threshold(self, single_player):
        """The cheapest share reaching p q = c wins; ties keep the first found."""
        outcome = brute_force_allocation_oracle(single_player, 0.1)
        assert outcome.p == pytest.approx([0.8])
        assert outcome.predicted_sw == pytest.approx(0.5)

    def test_dominates_subset_oracle_on_grid(self, path_tree):
        inst = tree_to_instance(path_tree)
        alloc = brute_force_allocation_oracle(inst, 0.2)
        subset = brute_force_subset_oracle(inst, 0.2)
        assert alloc.predicted_sw >= subset.predicted_sw - 1e-12

    def test_guard(self):
        inst = make_graph_instance([0.1] * 4, np.zeros((4, 4)), [0.1] * 4)
        with pytest.raises(GuardExceededError):
            brute_force_allocation_oracle(inst, 0.01)
