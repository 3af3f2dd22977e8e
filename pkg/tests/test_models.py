"""Tests for rtlab graph models."""
from fractions import Fraction

import numpy as np
import pytest

from rtlab.core.exceptions import GraphFormatError, InvalidParameterError, PreconditionError
from rtlab.core.models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    bipartite_density,
    bipartite_density_approx,
    count_edges_between,
    degree_into,
    edge_count,
    format_fraction,
    induced_subgraph,
    iter_bits,
)

from .conftest import complete_bipartite, split_sides


class TestRationals:
    """Tests for rational parsing and formatting."""

    def test_as_fraction_accepts_strings_ints_and_floats(self):
        """Test the accepted input forms."""
        assert as_fraction("1/20") == Fraction(1, 20)
        assert as_fraction(3) == Fraction(3)
        assert as_fraction(0.1) == Fraction(1, 10)
        assert as_fraction(Fraction(2, 4)) == Fraction(1, 2)

    @pytest.mark.parametrize("value", ["abc", "1/0", True])
    def test_as_fraction_rejects_garbage(self, value):
        """Test non-rationals are rejected."""
        with pytest.raises(InvalidParameterError):
            as_fraction(value)

    def test_format_fraction(self):
        """Test the num/den form, integers included."""
        assert format_fraction(Fraction(6, 4)) == "3/2"
        assert format_fraction(3) == "3/1"


class TestVertexSet:
    """Tests for VertexSet."""

    def test_iteration_is_ascending(self):
        """Test vertices come out sorted whatever the input order."""
        s = VertexSet.from_iterable(10, [7, 2, 5, 2])
        assert list(s) == [2, 5, 7]
        assert len(s) == 3
        assert 5 in s
        assert 3 not in s

    def test_set_algebra(self):
        """Test union, intersection and difference."""
        a = VertexSet.from_iterable(6, [0, 1, 2])
        b = VertexSet.from_iterable(6, [2, 3])
        assert (a | b).to_list() == [0, 1, 2, 3]
        assert (a & b).to_list() == [2]
        assert (a - b).to_list() == [0, 1]
        assert not a.isdisjoint(b)
        assert (a & b).issubset(a)

    def test_range_full_and_empty(self):
        """Test the constructors for intervals."""
        assert VertexSet.from_range(8, 3, 6).to_list() == [3, 4, 5]
        assert len(VertexSet.full(5)) == 5
        assert not VertexSet.empty(5)

    def test_with_and_without_vertex(self):
        """Test single-vertex updates return new sets."""
        s = VertexSet.from_iterable(4, [1])
        assert s.with_vertex(3).to_list() == [1, 3]
        assert s.without_vertex(1).to_list() == []
        assert s.to_list() == [1]

    def test_out_of_range_vertex_rejected(self):
        """Test vertices outside 0..n-1 raise."""
        with pytest.raises(InvalidParameterError):
            VertexSet.from_iterable(3, [3])
        with pytest.raises(InvalidParameterError):
            VertexSet(3, 1 << 5)

    def test_different_universes_rejected(self):
        """Test combining sets over different n raises."""
        with pytest.raises(InvalidParameterError):
            VertexSet.full(3) | VertexSet.full(4)

    def test_serialization(self):
        """Test sorted array form."""
        s = VertexSet.from_iterable(9, [8, 0, 4])
        assert s.to_dict() == [0, 4, 8]
        assert VertexSet.from_dict(9, [0, 4, 8]) == s


class TestGraph:
    """Tests for Graph."""

    def test_complete_and_complement(self):
        """Test K5 has 10 edges and its complement none."""
        k5 = Graph.complete(5)
        assert k5.edge_total == 10
        assert k5.min_degree() == 4
        assert k5.complement().edge_total == 0
        assert k5.complement().complement() == k5

    def test_from_edges_strict_rejects_duplicates_and_loops(self):
        """Test strict edge lists."""
        with pytest.raises(GraphFormatError):
            Graph.from_edges(3, [(0, 1), (1, 0)], strict=True)
        with pytest.raises(GraphFormatError):
            Graph.from_edges(3, [(1, 1)], strict=True)

    def test_from_edges_lenient_merges(self):
        """Test duplicates merge and loops drop when not strict."""
        g = Graph.from_edges(3, [(0, 1), (1, 0), (2, 2)])
        assert g.edge_total == 1
        assert list(g.edges()) == [(0, 1)]

    def test_from_edges_out_of_range(self):
        """Test edges outside the vertex range raise."""
        with pytest.raises(GraphFormatError):
            Graph.from_edges(3, [(0, 3)])

    def test_rows_reject_self_loop(self):
        """Test a row with its own bit set is rejected."""
        with pytest.raises(GraphFormatError):
            Graph(2, (0b01, 0b00))

    def test_from_matrix(self):
        """Test numpy matrices round trip and asymmetry is rejected."""
        g = complete_bipartite(2, 3)
        assert Graph.from_matrix(g.to_matrix()) == g
        bad = np.zeros((3, 3), dtype=bool)
        bad[0, 1] = True
        with pytest.raises(GraphFormatError):
            Graph.from_matrix(bad)

    def test_degree_and_neighbors(self, c5):
        """Test local queries on C5."""
        assert c5.degree(0) == 2
        assert c5.neighbors(0).to_list() == [1, 4]
        assert c5.has_edge(4, 0)
        assert not c5.has_edge(0, 2)
        with pytest.raises(InvalidParameterError):
            c5.degree(5)

    def test_edges_are_lexicographic(self, c5):
        """Test edge order."""
        assert list(c5.edges()) == [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]

    def test_digest_identifies_adjacency(self, c5, c6):
        """Test equal graphs share a digest and different graphs do not."""
        assert c5.digest() == Graph.from_edges(5, c5.edges()).digest()
        assert c5.digest() != c6.digest()
        assert len(c5.digest()) == 64

    def test_dict_round_trip(self, petersen):
        """Test the edge-list serialization."""
        assert Graph.from_dict(petersen.to_dict()) == petersen

    def test_empty_graph(self):
        """Test the zero-vertex graph."""
        g = Graph.empty(0)
        assert g.edge_total == 0
        assert g.min_degree() == 0


class TestPairsAndDegrees:
    """Tests for pair helpers."""

    def test_overlapping_sides_rejected(self):
        """Test a pair needs disjoint sides."""
        g = Graph.complete(4)
        with pytest.raises(PreconditionError):
            BipartitePair(g, VertexSet.from_iterable(4, [0, 1]), VertexSet.from_iterable(4, [1, 2]))

    def test_density_exact(self):
        """Test density of a split of K5 is 1 and of K_{2,3} with one edge missing."""
        a, b = split_sides(5, 2)
        assert bipartite_density(BipartitePair(Graph.complete(5), a, b)) == 1
        g = Graph.from_edges(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3)])
        pair = BipartitePair(g, a, b)
        assert pair.edge_total == 5
        assert bipartite_density(pair) == Fraction(5, 6)

    def test_density_approx(self):
        """Test the float companion matches the exact density and is swap invariant."""
        a, b = split_sides(5, 2)
        g = Graph.from_edges(5, [(0, 2), (0, 3), (0, 4), (1, 2), (1, 3)])
        exact, approx = bipartite_density_approx(BipartitePair(g, a, b))
        assert exact == Fraction(5, 6)
        assert approx == pytest.approx(5 / 6)
        assert bipartite_density_approx(BipartitePair(g, b, a)) == (exact, approx)

    def test_density_of_empty_side(self):
        """Test the density of an empty side is undefined."""
        g = Graph.complete(3)
        with pytest.raises(PreconditionError):
            bipartite_density(BipartitePair(g, VertexSet.empty(3), VertexSet.full(3)))

    def test_swapped_and_restrict(self):
        """Test side exchange and sub-pairs."""
        g = complete_bipartite(3, 3)
        a, b = split_sides(6, 3)
        pair = BipartitePair(g, a, b)
        assert pair.swapped().a_side == b
        sub = pair.restrict(VertexSet.from_iterable(6, [0]), VertexSet.from_iterable(6, [4, 5]))
        assert sub.edge_total == 2
        with pytest.raises(InvalidParameterError):
            pair.restrict(b, a)

    def test_edge_count(self, c6):
        """Test |E(G)| on C6 and K_{3,3}."""
        assert edge_count(c6) == 6
        assert edge_count(complete_bipartite(3, 3)) == 9
        assert edge_count(Graph.empty(4)) == 0

    def test_degree_into_and_edges_between(self, c6):
        """Test deg(v, S) and e(S, T) on C6."""
        evens = VertexSet.from_iterable(6, [0, 2, 4])
        odds = VertexSet.from_iterable(6, [1, 3, 5])
        assert degree_into(c6, 0, odds) == 2
        assert degree_into(c6, 0, evens) == 0
        assert count_edges_between(c6, evens, odds) == 6

    def test_induced_subgraph_relabels(self, c5):
        """Test G[S] is relabelled in ascending order."""
        sub, index = induced_subgraph(c5, VertexSet.from_iterable(5, [4, 0, 1]))
        assert index == {0: 0, 1: 1, 4: 2}
        assert sorted(sub.edges()) == [(0, 1), (0, 2)]

    def test_iter_bits(self):
        """Test bit positions."""
        assert list(iter_bits(0b101001)) == [0, 3, 5]
        assert list(iter_bits(0)) == []
