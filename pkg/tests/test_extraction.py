"""Tests for rtlab core and regular pair extraction."""
import math
from fractions import Fraction

import pytest

from rtlab.core.exceptions import InvalidParameterError, NoCoreError, PreconditionError
from rtlab.core.models import BipartitePair, Graph, VertexSet
from rtlab.extraction import (
    ExtractionTrace,
    RefuterBudget,
    StopReason,
    check_core_self_bound,
    check_pair,
    core_threshold,
    extract_min_degree_core,
    extract_regular_pair,
    induced_edge_count,
    iteration_bound,
    peel_min_degree,
    stopping_level,
    verify_trace,
)
from rtlab.generators import gen_bipartite_min_degree
from rtlab.regularity import CheckMethod, RegularityStatus

from .conftest import complete_bipartite, split_sides

EXACT = RefuterBudget(exact_limit=10**6)


def two_block_pair() -> BipartitePair:
    """Return A = 0..23, B = 24..47 with 0..11 joined to 24..35 and 12..23 to 36..47."""
    edges = [(u, v) for u in range(12) for v in range(24, 36)]
    edges += [(u, v) for u in range(12, 24) for v in range(36, 48)]
    a, b = split_sides(48, 24)
    return BipartitePair(Graph.from_edges(48, edges), a, b)


def clique_with_pendants() -> Graph:
    """Return K20 on 0..19 with pendant vertices 20..24 hanging off vertex 0."""
    edges = [(u, v) for u in range(20) for v in range(u + 1, 20)]
    edges += [(0, p) for p in range(20, 25)]
    return Graph.from_edges(25, edges)


class TestBounds:
    """Tests for the extraction constants."""

    def test_stopping_level(self):
        """Test (delta (1 + eps/2) - 2 eps) b."""
        assert stopping_level(Fraction(1, 6), Fraction(1), 6) == Fraction(9, 2)
        assert stopping_level(Fraction(1, 12), Fraction(1, 2), 24) == Fraction(17, 2)

    def test_iteration_bound(self):
        """Test log(2/delta)/eps."""
        assert iteration_bound(Fraction(1, 6), Fraction(1)) == pytest.approx(6 * math.log(2))

    def test_core_threshold(self):
        """Test (size^2 + size)/8 + (alpha n - alpha^2)/2."""
        assert core_threshold(25, 25, 6) == Fraction(553, 4)
        assert core_threshold(8, 8, 0) == 9


class TestMinDegreeCore:
    """Tests for the minimum-degree core."""

    def test_pendants_are_peeled(self):
        """Test the clique survives and the pendants go in index order."""
        core = extract_min_degree_core(clique_with_pendants(), 6)
        assert core.v1 == VertexSet.from_range(25, 0, 20)
        assert core.n1 == 20
        assert core.removed_order == [20, 21, 22, 23, 24]
        assert core.edges == 190
        assert core.min_degree == 19
        assert core.inequality_margin == Fraction(161, 2)
        assert induced_edge_count(clique_with_pendants(), core.v1) == 190

    def test_core_self_bound(self):
        """Test the core's own inequality with alpha(K20) = 1."""
        core = extract_min_degree_core(clique_with_pendants(), 6)
        check = check_core_self_bound(core, 1)
        assert check.holds
        assert check.bound == 62
        assert check.to_dict()["bound"] == "62/1"

    def test_dense_input_needs_no_peeling(self):
        """Test a graph already at minimum degree n/4 is its own core."""
        g = Graph.complete(10)
        core = extract_min_degree_core(g, 1)
        assert core.removed_order == []
        assert core.v1 == g.vertices

    def test_below_threshold(self, c5):
        """Test a sparse graph has no core."""
        with pytest.raises(NoCoreError) as err:
            extract_min_degree_core(c5, 2)
        assert err.value.reason == "input below threshold"

    def test_alpha_out_of_range(self, c5):
        """Test alpha_count outside 0..n."""
        with pytest.raises(InvalidParameterError):
            extract_min_degree_core(c5, 6)
        with pytest.raises(InvalidParameterError):
            peel_min_degree(c5, -1)

    def test_peel_without_inequality(self, p4):
        """Test plain peeling of a path stops once 4 deg >= |V|."""
        core = peel_min_degree(p4)
        assert core.removed_order == [0]
        assert core.v1.to_list() == [1, 2, 3]
        assert core.edges == 2


class TestCheckPair:
    """Tests for the per-step regularity test."""

    def test_small_pair_is_exact(self, k33):
        """Test a small enumeration goes to the exact checker."""
        a, b = split_sides(6, 3)
        verdict = check_pair(BipartitePair(k33, a, b), Fraction(1, 3), EXACT, 0)
        assert verdict.method == CheckMethod.EXACT
        assert verdict.status == RegularityStatus.REGULAR

    def test_large_pair_is_sampled(self):
        """Test a large enumeration goes to the refuter."""
        a, b = split_sides(60, 30)
        pair = BipartitePair(complete_bipartite(30, 30), a, b)
        verdict = check_pair(pair, Fraction(1, 3), RefuterBudget(trials=3, exact_limit=10), 0)
        assert verdict.method == CheckMethod.SAMPLED
        assert verdict.status == RegularityStatus.UNREFUTED


class TestExtractRegularPair:
    """Tests for the extraction loop."""

    def test_complete_pair_stops_at_once(self):
        """Test a complete pair is regular before any step."""
        a, b = split_sides(12, 6)
        pair = BipartitePair(complete_bipartite(6, 6), a, b)
        out, trace = extract_regular_pair(pair, Fraction(1, 6), Fraction(1), EXACT)
        assert trace.length == 0
        assert trace.stop_reason == StopReason.REGULAR_BY_CHECK
        assert out.a_side == a
        assert out.b_side == b

    def test_two_blocks(self):
        """Test the loop discards the block the first A vertices miss."""
        pair = two_block_pair()
        out, trace = extract_regular_pair(pair, Fraction(1, 12), Fraction(1, 2), EXACT)
        assert trace.stop_reason == StopReason.REGULAR_BY_CHECK
        assert trace.length == 6
        assert out.a_side.to_list() == [0]
        assert out.b_side == VertexSet.from_range(48, 24, 36)
        assert trace.steps[0].x_prime.to_list() == [0, 1]
        assert trace.steps[0].y_prime.to_list() == [36, 37]
        for step in trace.steps:
            assert step.sparse_edges == 0
            assert all(v >= 36 for v in step.y_prime)

    @pytest.mark.parametrize("seed", range(3))
    def test_random_pairs_meet_guarantees(self, seed):
        """Test all four output guarantees on generated pairs."""
        pair = gen_bipartite_min_degree(40, 40, "1/2", "1/2", seed)
        eps, delta = Fraction(1, 12), Fraction(1, 2)
        out, trace = extract_regular_pair(pair, eps, delta, RefuterBudget(trials=8, seed=seed))
        floor = (delta - 2 * eps) * 40
        assert len(out.b_side) >= floor
        for v in out.a_side:
            assert (pair.graph.adj[v] & out.b_side.bits).bit_count() >= floor
        assert trace.length < iteration_bound(eps, delta)
        assert len(out.a_side) >= (eps / 2) ** trace.length * 40
        assert verify_trace(pair.graph, trace, eps, delta).ok

    def test_low_degree_vertex_rejected(self, p4):
        """Test the minimum degree precondition."""
        pair = BipartitePair(
            p4, VertexSet.from_iterable(4, [0, 2]), VertexSet.from_iterable(4, [1, 3])
        )
        with pytest.raises(PreconditionError):
            extract_regular_pair(pair, Fraction(1, 12), Fraction(3, 4))

    @pytest.mark.parametrize(("eps", "delta"), [("1/5", "1"), ("0", "1/2"), ("1/20", "0")])
    def test_bad_parameters(self, k33, eps, delta):
        """Test eps must lie in (0, delta/6] and delta in (0, 1]."""
        a, b = split_sides(6, 3)
        with pytest.raises(InvalidParameterError):
            extract_regular_pair(BipartitePair(k33, a, b), eps, delta)


class TestVerifyTrace:
    """Tests for trace replay."""

    def test_serialized_trace_replays(self):
        """Test a trace read back from its dict still verifies."""
        pair = two_block_pair()
        _, trace = extract_regular_pair(pair, Fraction(1, 12), Fraction(1, 2), EXACT)
        restored = ExtractionTrace.from_dict(48, trace.to_dict())
        assert restored.length == trace.length
        assert verify_trace(pair.graph, restored, Fraction(1, 12), Fraction(1, 2)).ok

    def test_tampered_edge_count(self):
        """Test a changed sparse edge count is caught at its step."""
        pair = two_block_pair()
        _, trace = extract_regular_pair(pair, Fraction(1, 12), Fraction(1, 2), EXACT)
        trace.steps[2].sparse_edges = 1
        check = verify_trace(pair.graph, trace, Fraction(1, 12), Fraction(1, 2))
        assert not check.ok
        assert check.step == 3
        assert check.invariant == "sparse_density"

    def test_tampered_final_pair(self):
        """Test a final pair that does not follow from the steps."""
        pair = two_block_pair()
        _, trace = extract_regular_pair(pair, Fraction(1, 12), Fraction(1, 2), EXACT)
        trace.final_a = VertexSet.from_iterable(48, [1])
        check = verify_trace(pair.graph, trace, Fraction(1, 12), Fraction(1, 2))
        assert check.invariant == "final_pair"

    def test_overlapping_initial_pair(self):
        """Test a trace whose sides overlap."""
        side = VertexSet.from_iterable(4, [0, 1])
        trace = ExtractionTrace(side, side, Fraction(1, 12), Fraction(1, 2))
        check = verify_trace(Graph.complete(4), trace, Fraction(1, 12), Fraction(1, 2))
        assert check.invariant == "initial_pair"
        assert check.to_dict()["ok"] is False

    def test_budget_from_dict(self):
        """Test missing keys fall back to defaults."""
        assert RefuterBudget.from_dict(None) == RefuterBudget()
        assert RefuterBudget.from_dict({"trials": 3}).trials == 3
        assert RefuterBudget.from_dict(EXACT.to_dict()) == EXACT
