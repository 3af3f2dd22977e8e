"""Graph file formats for rtlab (edge list and graph6)."""
from __future__ import annotations

import logging
import os
import tempfile
from pathlib import Path

import networkx as nx

from .exceptions import GraphFormatError
from .models import Graph

_LOGGER = logging.getLogger(__name__)

GRAPH6_HEADER = ">>graph6<<"


def to_networkx(g: Graph) -> nx.Graph:
    """Convert to a networkx graph on nodes 0..n-1."""
    nxg = nx.Graph()
    nxg.add_nodes_from(range(g.n))
    nxg.add_edges_from(g.edges())
    return nxg


def from_networkx(nxg: nx.Graph) -> Graph:
    """Convert from a networkx graph, relabelling nodes in sorted order."""
    if nxg.is_directed() or nxg.is_multigraph():
        raise GraphFormatError("Only simple undirected graphs are supported")
    relabelled = nx.convert_node_labels_to_integers(nxg, ordering="sorted")
    return Graph.from_edges(relabelled.number_of_nodes(), relabelled.edges())


def parse_edge_list(text: str) -> Graph:
    """Parse the "n m" header plus m lines of "u v" with u < v."""
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines:
        raise GraphFormatError("Empty edge list")
    header = lines[0]
    try:
        n, m = (int(tok) for tok in header)
    except ValueError as err:
        raise GraphFormatError(f"Bad edge list header: {' '.join(header)!r}") from err
    if n < 0 or m < 0:
        raise GraphFormatError(f"Negative sizes in header: n={n} m={m}")
    body = lines[1:]
    if len(body) != m:
        raise GraphFormatError(f"Header announces {m} edges, found {len(body)}")

    edges = []
    for lineno, tokens in enumerate(body, start=2):
        try:
            u, v = (int(tok) for tok in tokens)
        except ValueError as err:
            raise GraphFormatError(f"Line {lineno}: expected 'u v', got {tokens}") from err
        if not 0 <= u < v < n:
            raise GraphFormatError(f"Line {lineno}: need 0 <= u < v < {n}, got {u} {v}")
        edges.append((u, v))
    return Graph.from_edges(n, edges, strict=True)


def format_edge_list(g: Graph) -> str:
    """Format as an edge list, edges in lexicographic order."""
    out = [f"{g.n} {g.edge_total}"]
    out.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(out) + "\n"


def parse_graph6(text: str) -> Graph:
    """Parse a single graph6 string (header optional)."""
    data = text.strip()
    if data.startswith(GRAPH6_HEADER):
        data = data[len(GRAPH6_HEADER):]
    try:
        nxg = nx.from_graph6_bytes(data.encode("ascii"))
    except (nx.NetworkXError, ValueError, UnicodeEncodeError) as err:
        raise GraphFormatError(f"Bad graph6 string: {err}") from err
    return from_networkx(nxg)


def format_graph6(g: Graph) -> str:
    """Format as a graph6 string without header."""
    return nx.to_graph6_bytes(to_networkx(g), header=False).decode("ascii").strip() + "\n"


def looks_like_graph6(text: str) -> bool:
    """Return True if the text is a graph6 string rather than an edge list."""
    stripped = text.strip()
    if stripped.startswith(GRAPH6_HEADER):
        return True
    first = stripped.splitlines()[0].split() if stripped else []
    return len(first) == 1 and all(63 <= ord(ch) <= 126 for ch in first[0])


def parse_graph(text: str) -> Graph:
    """Parse either format, detected from the first line."""
    if looks_like_graph6(text):
        return parse_graph6(text)
    return parse_edge_list(text)


def read_graph(path: str | Path) -> Graph:
    """Read a graph file in either format."""
    path = Path(path)
    _LOGGER.debug("Reading graph from %s", path)
    try:
        text = path.read_text(encoding="ascii")
    except UnicodeDecodeError as err:
        raise GraphFormatError(f"{path}: not an ASCII graph file") from err
    graph = parse_graph(text)
    _LOGGER.debug("Read graph with n=%d, m=%d", graph.n, graph.edge_total)
    return graph


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to path via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_graph(g: Graph, path: str | Path, fmt: str = "edgelist") -> None:
    """Write a graph as "edgelist" or "graph6"."""
    if fmt == "edgelist":
        text = format_edge_list(g)
    elif fmt == "graph6":
        text = format_graph6(g)
    else:
        raise GraphFormatError(f"Unknown graph format {fmt!r}")
    atomic_write_text(path, text)
    _LOGGER.debug("Wrote %s graph with n=%d to %s", fmt, g.n, path)
