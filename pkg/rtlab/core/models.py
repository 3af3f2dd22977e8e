"""Graph data models for rtlab."""
from __future__ import annotations

import hashlib
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any

import numpy as np

from .exceptions import GraphFormatError, InvalidParameterError, PreconditionError


def as_fraction(value: Fraction | int | float | str) -> Fraction:
    """Convert a user supplied number to an exact rational.

    Floats go through their shortest decimal repr, so 0.1 becomes 1/10.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InvalidParameterError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as err:
        raise InvalidParameterError(f"Not a rational: {value!r}") from err


def format_fraction(value: Fraction | int) -> str:
    """Format a rational as a "num/den" string."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def iter_bits(bits: int) -> Iterator[int]:
    """Yield the set bit positions of an integer in ascending order."""
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


def bits_from_mask(mask: np.ndarray) -> int:
    """Pack a boolean vector into an integer bit row (index 0 is bit 0)."""
    packed = np.packbits(np.asarray(mask, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def mask_from_bits(bits: int, n: int) -> np.ndarray:
    """Unpack an integer bit row into a boolean vector of length n."""
    raw = bits.to_bytes(max(1, (n + 7) // 8), "little")
    unpacked = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    return unpacked[:n].astype(bool)


@dataclass(frozen=True)
class VertexSet:
    """Subset of the vertices 0..n-1 of a graph."""

    n: int
    bits: int = 0

    def __post_init__(self) -> None:
        """Validate the bit set against n."""
        if self.n < 0:
            raise InvalidParameterError(f"Negative vertex count {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise InvalidParameterError(f"Vertex set has bits outside 0..{self.n - 1}")

    @classmethod
    def from_iterable(cls, n: int, vertices: Iterable[int]) -> VertexSet:
        """Create from an iterable of vertex indices."""
        bits = 0
        for v in vertices:
            if not 0 <= v < n:
                raise InvalidParameterError(f"Vertex {v} out of range for n={n}")
            bits |= 1 << v
        return cls(n, bits)

    @classmethod
    def from_range(cls, n: int, start: int, stop: int) -> VertexSet:
        """Create the interval start..stop-1."""
        if not 0 <= start <= stop <= n:
            raise InvalidParameterError(f"Bad range {start}..{stop} for n={n}")
        return cls(n, ((1 << (stop - start)) - 1) << start)

    @classmethod
    def full(cls, n: int) -> VertexSet:
        """Create the set of all vertices."""
        return cls(n, (1 << n) - 1)

    @classmethod
    def empty(cls, n: int) -> VertexSet:
        """Create the empty set."""
        return cls(n, 0)

    def _same_universe(self, other: VertexSet) -> None:
        if self.n != other.n:
            raise InvalidParameterError(
                f"Vertex sets over different universes ({self.n} vs {other.n})"
            )

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def __contains__(self, v: object) -> bool:
        return isinstance(v, int) and 0 <= v < self.n and bool(self.bits >> v & 1)

    def __or__(self, other: VertexSet) -> VertexSet:
        self._same_universe(other)
        return VertexSet(self.n, self.bits | other.bits)

    def __and__(self, other: VertexSet) -> VertexSet:
        self._same_universe(other)
        return VertexSet(self.n, self.bits & other.bits)

    def __sub__(self, other: VertexSet) -> VertexSet:
        self._same_universe(other)
        return VertexSet(self.n, self.bits & ~other.bits)

    def isdisjoint(self, other: VertexSet) -> bool:
        """Return True if the sets share no vertex."""
        self._same_universe(other)
        return not self.bits & other.bits

    def issubset(self, other: VertexSet) -> bool:
        """Return True if every vertex is also in other."""
        self._same_universe(other)
        return not self.bits & ~other.bits

    def with_vertex(self, v: int) -> VertexSet:
        """Return a copy with v added."""
        return VertexSet(self.n, self.bits | 1 << v)

    def without_vertex(self, v: int) -> VertexSet:
        """Return a copy with v removed."""
        return VertexSet(self.n, self.bits & ~(1 << v))

    def to_list(self) -> list[int]:
        """Return the vertices as a sorted list."""
        return list(iter_bits(self.bits))

    def to_dict(self) -> list[int]:
        """Serialize as a sorted integer array."""
        return self.to_list()

    @classmethod
    def from_dict(cls, n: int, data: list[int]) -> VertexSet:
        """Create from a serialized integer array."""
        return cls.from_iterable(n, data)


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on vertices 0..n-1 stored as bit rows."""

    n: int
    adj: tuple[int, ...]

    def __post_init__(self) -> None:
        """Validate row count, row width and self-loops."""
        if len(self.adj) != self.n:
            raise GraphFormatError(f"Expected {self.n} rows, got {len(self.adj)}")
        for v, row in enumerate(self.adj):
            if row < 0 or row >> self.n:
                raise GraphFormatError(f"Row {v} has bits outside 0..{self.n - 1}")
            if row >> v & 1:
                raise GraphFormatError(f"Self-loop at vertex {v}")

    @classmethod
    def from_rows(cls, rows: Iterable[int], validate: bool = True) -> Graph:
        """Create from bit rows, checking symmetry unless told otherwise."""
        adj = tuple(rows)
        graph = cls(len(adj), adj)
        if validate:
            for v, row in enumerate(adj):
                for u in iter_bits(row >> (v + 1)):
                    if not adj[u + v + 1] >> v & 1:
                        raise GraphFormatError(f"Asymmetric adjacency at {{{v}, {u + v + 1}}}")
        return graph

    @classmethod
    def from_edges(
        cls, n: int, edges: Iterable[tuple[int, int]], strict: bool = False
    ) -> Graph:
        """Create from an edge list.

        With strict=True self-loops and duplicate edges are rejected; otherwise
        loops are dropped and duplicates merged.
        """
        rows = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(f"Edge ({u}, {v}) out of range for n={n}")
            if u == v:
                if strict:
                    raise GraphFormatError(f"Self-loop at vertex {u}")
                continue
            if strict and rows[u] >> v & 1:
                raise GraphFormatError(f"Duplicate edge ({u}, {v})")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> Graph:
        """Create from a symmetric boolean adjacency matrix."""
        mat = np.asarray(matrix, dtype=bool)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise GraphFormatError(f"Adjacency matrix must be square, got {mat.shape}")
        if not np.array_equal(mat, mat.T):
            raise GraphFormatError("Adjacency matrix is not symmetric")
        if mat.diagonal().any():
            raise GraphFormatError("Adjacency matrix has self-loops")
        return cls(mat.shape[0], tuple(bits_from_mask(row) for row in mat))

    @classmethod
    def complete(cls, n: int) -> Graph:
        """Create the complete graph K_n."""
        full = (1 << n) - 1
        return cls(n, tuple(full & ~(1 << v) for v in range(n)))

    @classmethod
    def empty(cls, n: int) -> Graph:
        """Create the edgeless graph on n vertices."""
        return cls(n, (0,) * n)

    @property
    def vertices(self) -> VertexSet:
        """Return the full vertex set."""
        return VertexSet.full(self.n)

    @cached_property
    def edge_total(self) -> int:
        """Return the number of edges."""
        return sum(row.bit_count() for row in self.adj) // 2

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise InvalidParameterError(f"Vertex {v} out of range for n={self.n}")

    def degree(self, v: int) -> int:
        """Return the degree of v."""
        self._check_vertex(v)
        return self.adj[v].bit_count()

    def neighbors(self, v: int) -> VertexSet:
        """Return N(v)."""
        self._check_vertex(v)
        return VertexSet(self.n, self.adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        """Return True if {u, v} is an edge."""
        self._check_vertex(u)
        self._check_vertex(v)
        return bool(self.adj[u] >> v & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield the edges (u, v) with u < v in lexicographic order."""
        for u, row in enumerate(self.adj):
            for w in iter_bits(row >> (u + 1)):
                yield u, u + 1 + w

    def min_degree(self) -> int:
        """Return the minimum degree (0 for the empty graph)."""
        return min((row.bit_count() for row in self.adj), default=0)

    def complement(self) -> Graph:
        """Return the complement graph."""
        full = (1 << self.n) - 1
        return Graph(self.n, tuple(full & ~row & ~(1 << v) for v, row in enumerate(self.adj)))

    def to_matrix(self) -> np.ndarray:
        """Return the adjacency matrix as a boolean array."""
        if self.n == 0:
            return np.zeros((0, 0), dtype=bool)
        return np.vstack([mask_from_bits(row, self.n) for row in self.adj])

    def digest(self) -> str:
        """Return a sha256 hex digest of the adjacency."""
        width = max(1, (self.n + 7) // 8)
        h = hashlib.sha256(self.n.to_bytes(8, "little"))
        for row in self.adj:
            h.update(row.to_bytes(width, "little"))
        return h.hexdigest()

    def to_dict(self) -> dict[str, Any]:
        """Serialize as n plus a sorted edge list."""
        return {"n": self.n, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Graph:
        """Create from a serialized edge list."""
        edges = (tuple(e) for e in data.get("edges", []))
        return cls.from_edges(int(data["n"]), edges, strict=True)


@dataclass(frozen=True)
class BipartitePair:
    """Bipartite subgraph G[A, B] between two disjoint vertex sets."""

    graph: Graph
    a_side: VertexSet
    b_side: VertexSet

    def __post_init__(self) -> None:
        """Validate that both sides live in the graph and are disjoint."""
        for side in (self.a_side, self.b_side):
            if side.n != self.graph.n:
                raise InvalidParameterError("Pair side is bound to a different graph")
        if not self.a_side.isdisjoint(self.b_side):
            raise PreconditionError(
                "Pair sides overlap",
                detail={"common": (self.a_side & self.b_side).to_list()},
            )

    @property
    def a(self) -> int:
        """Return |A|."""
        return len(self.a_side)

    @property
    def b(self) -> int:
        """Return |B|."""
        return len(self.b_side)

    def swapped(self) -> BipartitePair:
        """Return the pair with its sides exchanged."""
        return BipartitePair(self.graph, self.b_side, self.a_side)

    def restrict(self, a_side: VertexSet, b_side: VertexSet) -> BipartitePair:
        """Return the sub-pair on subsets of the two sides."""
        if not (a_side.issubset(self.a_side) and b_side.issubset(self.b_side)):
            raise InvalidParameterError("Sub-pair sides are not subsets of the pair")
        return BipartitePair(self.graph, a_side, b_side)

    @cached_property
    def edge_total(self) -> int:
        """Return e(A, B)."""
        return count_edges_between(self.graph, self.a_side, self.b_side)

    def to_dict(self) -> dict[str, Any]:
        """Serialize the two sides (the graph is stored separately)."""
        return {"a_side": self.a_side.to_list(), "b_side": self.b_side.to_list()}


def edge_count(g: Graph) -> int:
    """Return |E(G)|."""
    return g.edge_total


def degree_into(g: Graph, v: int, s: VertexSet) -> int:
    """Return deg(v, S) = |N(v) ∩ S|."""
    g._check_vertex(v)
    return (g.adj[v] & s.bits).bit_count()


def count_edges_between(g: Graph, s: VertexSet, t: VertexSet) -> int:
    """Return e(S, T) for disjoint S and T."""
    if len(s) > len(t):
        s, t = t, s
    tb = t.bits
    return sum((g.adj[v] & tb).bit_count() for v in s)


def bipartite_density(p: BipartitePair) -> Fraction:
    """Return d(A, B) = e(A, B) / (|A||B|) exactly."""
    if not p.a_side or not p.b_side:
        raise PreconditionError("Density of a pair with an empty side")
    return Fraction(p.edge_total, p.a * p.b)


def bipartite_density_approx(p: BipartitePair) -> tuple[Fraction, float]:
    """Return d(A, B) exactly and as the nearest float."""
    exact = bipartite_density(p)
    return exact, float(exact)


def induced_subgraph(g: Graph, s: VertexSet) -> tuple[Graph, dict[int, int]]:
    """Return G[S] relabelled to 0..|S|-1 plus the old -> new index map."""
    if not s:
        raise PreconditionError("Induced subgraph of an empty vertex set")
    order = s.to_list()
    index = {old: new for new, old in enumerate(order)}
    rows = []
    for old in order:
        row = 0
        for u in iter_bits(g.adj[old] & s.bits):
            row |= 1 << index[u]
        rows.append(row)
    return Graph(len(order), tuple(rows)), index
