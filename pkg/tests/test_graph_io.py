"""Tests for rtlab graph file formats."""
import networkx as nx
import pytest

from rtlab.core.exceptions import GraphFormatError
from rtlab.core.graph_io import (
    format_edge_list,
    format_graph6,
    from_networkx,
    looks_like_graph6,
    parse_edge_list,
    parse_graph,
    parse_graph6,
    read_graph,
    to_networkx,
    write_graph,
)
from rtlab.core.models import Graph


class TestEdgeList:
    """Tests for the edge list format."""

    def test_parse(self):
        """Test a well-formed triangle."""
        g = parse_edge_list("3 3\n0 1\n0 2\n1 2\n")
        assert g == Graph.complete(3)

    def test_format_is_lexicographic(self, c5):
        """Test header and edge order."""
        assert format_edge_list(c5) == "5 5\n0 1\n0 4\n1 2\n2 3\n3 4\n"

    def test_blank_lines_ignored(self):
        """Test surrounding whitespace does not matter."""
        assert parse_edge_list("\n2 1\n\n0 1\n\n").edge_total == 1

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "3\n",
            "3 2\n0 1\n",
            "3 1\n1 0\n",
            "3 1\n0 3\n",
            "3 2\n0 1\n0 1\n",
            "3 1\n0 x\n",
            "-1 0\n",
        ],
    )
    def test_rejects_malformed(self, text):
        """Test each malformed input raises GraphFormatError."""
        with pytest.raises(GraphFormatError):
            parse_edge_list(text)

    def test_empty_graph(self):
        """Test a graph without edges."""
        g = parse_edge_list("4 0\n")
        assert g.n == 4
        assert g.edge_total == 0


class TestGraph6:
    """Tests for the graph6 format."""

    def test_k4(self, k4):
        """Test the known encoding of K4."""
        assert format_graph6(k4) == "C~\n"
        assert parse_graph6("C~") == k4

    def test_header_accepted(self, k4):
        """Test the optional >>graph6<< header."""
        assert parse_graph6(">>graph6<<C~\n") == k4

    def test_petersen(self, petersen):
        """Test a graph matches networkx's own encoding."""
        expected = nx.to_graph6_bytes(nx.petersen_graph(), header=False).decode().strip()
        assert format_graph6(petersen).strip() == expected
        assert parse_graph6(expected) == petersen

    def test_rejects_garbage(self):
        """Test a string with bad length raises GraphFormatError."""
        with pytest.raises(GraphFormatError):
            parse_graph6("C~~~~")


class TestDetection:
    """Tests for format detection."""

    def test_looks_like_graph6(self):
        """Test single tokens are graph6 and headers are edge lists."""
        assert looks_like_graph6("C~\n")
        assert looks_like_graph6(">>graph6<<C~")
        assert not looks_like_graph6("4 0\n")
        assert not looks_like_graph6("")

    def test_parse_graph_dispatches(self, k4):
        """Test both formats go through parse_graph."""
        assert parse_graph("C~\n") == k4
        assert parse_graph(format_edge_list(k4)) == k4


class TestFiles:
    """Tests for reading and writing graph files."""

    @pytest.mark.parametrize("fmt", ["edgelist", "graph6"])
    def test_write_then_read(self, tmp_path, petersen, fmt):
        """Test a written file reads back as the same graph."""
        path = tmp_path / "nested" / f"petersen.{fmt}"
        write_graph(petersen, path, fmt=fmt)
        assert read_graph(path) == petersen
        assert not list(path.parent.glob("*.tmp"))

    def test_unknown_format(self, tmp_path, k4):
        """Test an unknown format name raises."""
        with pytest.raises(GraphFormatError):
            write_graph(k4, tmp_path / "out", fmt="dot")

    def test_non_ascii_file(self, tmp_path):
        """Test binary junk is reported as a format error."""
        path = tmp_path / "junk"
        path.write_bytes(b"\xff\xfe")
        with pytest.raises(GraphFormatError):
            read_graph(path)


class TestNetworkx:
    """Tests for networkx conversion."""

    def test_round_trip(self, octahedron):
        """Test conversion preserves edges."""
        assert from_networkx(to_networkx(octahedron)) == octahedron
        assert to_networkx(Graph.empty(3)).number_of_nodes() == 3

    def test_relabels_in_sorted_order(self):
        """Test string labels are mapped in sorted order."""
        g = from_networkx(nx.Graph([("b", "c"), ("a", "b")]))
        assert sorted(g.edges()) == [(0, 1), (1, 2)]

    def test_rejects_directed(self):
        """Test directed graphs are refused."""
        with pytest.raises(GraphFormatError):
            from_networkx(nx.DiGraph([(0, 1)]))
