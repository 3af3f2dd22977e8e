"""Pytest configuration for rtlab tests."""
from fractions import Fraction
from itertools import combinations

import networkx as nx
import pytest

from rtlab.core.graph_io import from_networkx
from rtlab.core.models import BipartitePair, Graph, VertexSet


def cycle_graph(n: int) -> Graph:
    """Return C_n on 0..n-1."""
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def complete_bipartite(a: int, b: int) -> Graph:
    """Return K_{a,b} with sides 0..a-1 and a..a+b-1."""
    return Graph.from_edges(a + b, [(u, v) for u in range(a) for v in range(a, a + b)])


def brute_alpha(g: Graph) -> int:
    """Largest independent set by trying every subset, largest first."""
    for size in range(g.n, 0, -1):
        for subset in combinations(range(g.n), size):
            if all(not g.has_edge(u, v) for u, v in combinations(subset, 2)):
                return size
    return 0


def brute_k4(g: Graph) -> tuple[int, ...] | None:
    """First 4-subset (lexicographic) that is a clique."""
    for quad in combinations(range(g.n), 4):
        if all(g.has_edge(u, v) for u, v in combinations(quad, 2)):
            return quad
    return None


def brute_irregular(pair: BipartitePair, eps: Fraction) -> bool:
    """True if some X, Y with |X| >= eps|A|, |Y| >= eps|B| has d(X, Y) < eps."""
    a_list, b_list = pair.a_side.to_list(), pair.b_side.to_list()
    for k in range(1, len(a_list) + 1):
        if k < eps * len(a_list):
            continue
        for xs in combinations(a_list, k):
            for m in range(1, len(b_list) + 1):
                if m < eps * len(b_list):
                    continue
                for ys in combinations(b_list, m):
                    edges = sum(pair.graph.has_edge(x, y) for x in xs for y in ys)
                    if Fraction(edges, k * m) < eps:
                        return True
    return False


def split_sides(n: int, split: int) -> tuple[VertexSet, VertexSet]:
    """Return ({0..split-1}, {split..n-1})."""
    return VertexSet.from_range(n, 0, split), VertexSet.from_range(n, split, n)


@pytest.fixture
def k4():
    """Return K4."""
    return Graph.complete(4)


@pytest.fixture
def c5():
    """Return the 5-cycle."""
    return cycle_graph(5)


@pytest.fixture
def c6():
    """Return the 6-cycle."""
    return cycle_graph(6)


@pytest.fixture
def c7():
    """Return the 7-cycle."""
    return cycle_graph(7)


@pytest.fixture
def petersen():
    """Return the Petersen graph."""
    return from_networkx(nx.petersen_graph())


@pytest.fixture
def k33():
    """Return K_{3,3}."""
    return complete_bipartite(3, 3)


@pytest.fixture
def k44():
    """Return K_{4,4}."""
    return complete_bipartite(4, 4)


@pytest.fixture
def octahedron():
    """Return K_{2,2,2}."""
    return from_networkx(nx.octahedral_graph())


@pytest.fixture
def p4():
    """Return the path on 4 vertices."""
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
