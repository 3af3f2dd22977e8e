"""Exact combinatorial oracles for rtlab."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .const import DEFAULT_NODE_LIMIT, DEFAULT_TIME_LIMIT
from .core.exceptions import InvalidParameterError, K4PresentError, RtlabError
from .core.models import Graph, VertexSet, iter_bits

_LOGGER = logging.getLogger(__name__)

ODD_CYCLE_LENGTHS = (3, 5, 7)


@dataclass(frozen=True)
class OracleBudget:
    """Limits for branch-and-bound searches (None means unlimited)."""

    node_limit: int | None = None
    time_limit: float | None = None

    @classmethod
    def default(cls) -> OracleBudget:
        """Return the budget used when the caller gives none."""
        return cls(node_limit=DEFAULT_NODE_LIMIT, time_limit=DEFAULT_TIME_LIMIT)

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> OracleBudget:
        """Create from a config mapping."""
        if not data:
            return cls()
        return cls(node_limit=data.get("node_limit"), time_limit=data.get("time_limit"))

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a config mapping."""
        return {"node_limit": self.node_limit, "time_limit": self.time_limit}


class IndependenceStatus(Enum):
    """Outcome of the independence number oracle."""

    EXACT = "exact"
    BOUNDS = "bounds"


@dataclass
class IndependenceResult:
    """Independence number, or certified bounds when the budget ran out."""

    status: IndependenceStatus
    lower: int
    upper: int
    witness: VertexSet
    nodes: int = 0

    @property
    def exact(self) -> bool:
        """Return True if lower == upper is the exact value."""
        return self.status == IndependenceStatus.EXACT

    @property
    def value(self) -> int:
        """Return the exact value."""
        if not self.exact:
            raise RtlabError(
                f"Independence number only bounded: {self.lower}..{self.upper}",
                detail=self.to_dict(),
            )
        return self.lower

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "status": self.status.value,
            "lower": self.lower,
            "upper": self.upper,
            "witness": self.witness.to_list(),
            "nodes": self.nodes,
        }


class _BudgetExceeded(Exception):
    """Raised inside the search when the budget is spent."""


@dataclass
class _Frame:
    chosen: int
    size: int
    order: list[int]
    colors: list[int]
    candidates: int
    index: int = field(default=-1)


def is_independent(g: Graph, bits: int) -> bool:
    """Return True if no two vertices of the bit set are adjacent."""
    return all(not g.adj[v] & bits for v in iter_bits(bits))


def greedy_independent_set(g: Graph, candidates: VertexSet | None = None) -> VertexSet:
    """Return a maximal independent set built in ascending degree order."""
    allowed = g.vertices.bits if candidates is None else candidates.bits
    order = sorted(iter_bits(allowed), key=lambda v: ((g.adj[v] & allowed).bit_count(), v))
    chosen = 0
    blocked = 0
    for v in order:
        if blocked >> v & 1:
            continue
        chosen |= 1 << v
        blocked |= g.adj[v] | 1 << v
    return VertexSet(g.n, chosen)


def _clique_cover(g: Graph, candidates: int) -> tuple[list[int], list[int]]:
    """Greedy partition of the candidates into cliques.

    Returns the vertices in class order with the running class count, so the
    first i+1 vertices have independence number at most colors[i].
    """
    order: list[int] = []
    colors: list[int] = []
    color = 0
    work = candidates
    while work:
        color += 1
        pool = work
        while pool:
            low = pool & -pool
            v = low.bit_length() - 1
            order.append(v)
            colors.append(color)
            work &= ~low
            pool &= g.adj[v]
    return order, colors


def independence_upper_bound(g: Graph) -> int:
    """Return min(clique cover bound, n - ceil(e / max degree))."""
    if g.n == 0:
        return 0
    _, colors = _clique_cover(g, g.vertices.bits)
    cover = colors[-1]
    max_deg = max(row.bit_count() for row in g.adj)
    if max_deg == 0:
        return g.n
    degree_bound = g.n - -(-g.edge_total // max_deg)
    return min(cover, degree_bound)


def _forced_low_degree(g: Graph) -> tuple[int, int]:
    """Take vertices of degree <= 1 into the solution while any remain.

    Such a vertex lies in some maximum independent set, so the reduction is
    exact. Returns (forced vertices, remaining candidates).
    """
    remaining = g.vertices.bits
    forced = 0
    changed = True
    while changed:
        changed = False
        for v in iter_bits(remaining):
            if not remaining >> v & 1:
                continue
            nbrs = g.adj[v] & remaining
            if nbrs.bit_count() <= 1:
                forced |= 1 << v
                remaining &= ~(nbrs | 1 << v)
                changed = True
    return forced, remaining


def independence_number(g: Graph, budget: OracleBudget | None = None) -> IndependenceResult:
    """Return alpha(G) with a witness, or certified bounds if the budget runs out.

    Branch and bound over bit sets; each branch is pruned by a greedy clique
    cover of its candidate set.
    """
    budget = budget or OracleBudget()
    deadline = None if budget.time_limit is None else time.monotonic() + budget.time_limit

    forced, candidates = _forced_low_degree(g)
    start = greedy_independent_set(g, VertexSet(g.n, candidates)).bits
    best_bits = forced | start
    best_size = best_bits.bit_count()
    base = forced.bit_count()
    nodes = 0

    stack: list[_Frame] = []
    if candidates:
        order, colors = _clique_cover(g, candidates)
        stack.append(_Frame(forced, base, order, colors, candidates, len(order) - 1))

    try:
        while stack:
            frame = stack[-1]
            i = frame.index
            if i < 0 or frame.size + frame.colors[i] <= best_size:
                stack.pop()
                continue
            frame.index -= 1
            v = frame.order[i]
            branch = frame.candidates & ~g.adj[v] & ~(1 << v)
            frame.candidates &= ~(1 << v)

            nodes += 1
            if budget.node_limit is not None and nodes > budget.node_limit:
                raise _BudgetExceeded
            if deadline is not None and not nodes & 1023 and time.monotonic() > deadline:
                raise _BudgetExceeded

            chosen = frame.chosen | 1 << v
            if branch:
                order, colors = _clique_cover(g, branch)
                stack.append(_Frame(chosen, frame.size + 1, order, colors, branch, len(order) - 1))
            elif frame.size + 1 > best_size:
                best_bits = chosen
                best_size = frame.size + 1
    except _BudgetExceeded:
        if not is_independent(g, best_bits):
            raise RtlabError("Independence witness is not independent") from None
        upper = max(best_size, independence_upper_bound(g))
        _LOGGER.warning(
            "Independence oracle budget spent after %d nodes; bounds %d..%d",
            nodes,
            best_size,
            upper,
        )
        status = IndependenceStatus.EXACT if upper == best_size else IndependenceStatus.BOUNDS
        return IndependenceResult(status, best_size, upper, VertexSet(g.n, best_bits), nodes)

    if not is_independent(g, best_bits):
        raise RtlabError("Independence witness is not independent")
    _LOGGER.debug("alpha = %d for n=%d after %d nodes", best_size, g.n, nodes)
    return IndependenceResult(
        IndependenceStatus.EXACT, best_size, best_size, VertexSet(g.n, best_bits), nodes
    )


def find_k4(g: Graph) -> tuple[int, int, int, int] | None:
    """Return the lexicographically first 4-clique, or None."""
    adj = g.adj
    for a in range(g.n):
        above_a = adj[a] >> (a + 1) << (a + 1)
        for b in iter_bits(above_a):
            common_ab = above_a & adj[b] >> (b + 1) << (b + 1)
            for c in iter_bits(common_ab):
                rest = common_ab & adj[c] >> (c + 1) << (c + 1)
                if rest:
                    d = (rest & -rest).bit_length() - 1
                    clique = (a, b, c, d)
                    _verify_clique(g, clique)
                    return clique
    return None


def _verify_clique(g: Graph, clique: tuple[int, ...]) -> None:
    for i, u in enumerate(clique):
        for v in clique[i + 1:]:
            if not g.adj[u] >> v & 1:
                raise RtlabError(f"Reported clique {clique} misses edge {u}-{v}")


def find_k4_through(
    g: Graph, v: int, pair_side: VertexSet, apex_side: VertexSet
) -> tuple[int, int, int, int] | None:
    """Return a K4 on v, one vertex w of apex_side and an edge xy in pair_side."""
    nv = g.adj[v]
    for w in iter_bits(nv & apex_side.bits):
        common = nv & g.adj[w] & pair_side.bits & ~(1 << w)
        for x in iter_bits(common):
            rest = common & g.adj[x]
            if rest:
                y = (rest & -rest).bit_length() - 1
                clique = tuple(sorted((v, w, x, y)))
                _verify_clique(g, clique)
                return clique  # type: ignore[return-value]
    return None


def is_bipartite(g: Graph, s: VertexSet | None = None) -> bool:
    """Return True if G[S] has no odd cycle."""
    allowed = g.vertices.bits if s is None else s.bits
    visited = 0
    even = 0
    odd = 0
    for start in iter_bits(allowed):
        if visited >> start & 1:
            continue
        frontier = 1 << start
        visited |= frontier
        parity = 0
        while frontier:
            if parity:
                odd |= frontier
            else:
                even |= frontier
            nxt = 0
            for u in iter_bits(frontier):
                nxt |= g.adj[u]
            frontier = nxt & allowed & ~visited
            visited |= frontier
            parity ^= 1
    return all(not g.adj[u] & even for u in iter_bits(even)) and all(
        not g.adj[u] & odd for u in iter_bits(odd)
    )


def _distances_to(g: Graph, root: int, allowed: int, limit: int) -> dict[int, int]:
    """BFS distances from root inside allowed, up to limit."""
    dist = {root: 0}
    frontier = 1 << root
    seen = frontier
    for depth in range(1, limit + 1):
        nxt = 0
        for u in iter_bits(frontier):
            nxt |= g.adj[u]
        nxt &= allowed & ~seen
        if not nxt:
            break
        for u in iter_bits(nxt):
            dist[u] = depth
        seen |= nxt
        frontier = nxt
    return dist


def _find_cycle(g: Graph, allowed: int, length: int) -> list[int] | None:
    """Return a cycle on `length` distinct vertices of allowed, or None.

    The cycle's smallest vertex is the DFS root; a branch is cut when the
    root is farther away than the edges left to close the cycle.
    """
    for root in iter_bits(allowed):
        above = allowed >> (root + 1) << (root + 1)
        region = above | 1 << root
        dist = _distances_to(g, root, region, length)
        path = [root]
        used = 1 << root
        # stack of candidate bit sets per depth
        stack = [g.adj[root] & above]
        while stack:
            options = stack[-1]
            if not options:
                stack.pop()
                last = path.pop()
                used &= ~(1 << last)
                continue
            low = options & -options
            stack[-1] = options ^ low
            y = low.bit_length() - 1
            steps_left = length - len(path)
            if dist.get(y, length + 1) > steps_left:
                continue
            if len(path) == length - 1:
                if g.adj[y] >> root & 1:
                    return path + [y]
                continue
            path.append(y)
            used |= low
            stack.append(g.adj[y] & above & ~used)
        # the root stays on the path until its own frame is exhausted
    return None


def _verify_cycle(g: Graph, allowed: int, cycle: list[int]) -> None:
    if len(set(cycle)) != len(cycle):
        raise RtlabError(f"Cycle {cycle} repeats a vertex")
    for i, u in enumerate(cycle):
        v = cycle[(i + 1) % len(cycle)]
        if not allowed >> u & 1 or not g.adj[u] >> v & 1:
            raise RtlabError(f"Cycle {cycle} is broken at {u}-{v}")


def has_short_odd_cycle(
    g: Graph, s: VertexSet | None = None, lengths: tuple[int, ...] = ODD_CYCLE_LENGTHS
) -> dict[int, list[int] | None]:
    """Return a cycle of each odd length inside G[S], or None where absent."""
    allowed = g.vertices.bits if s is None else s.bits
    if is_bipartite(g, VertexSet(g.n, allowed)):
        return {length: None for length in lengths}
    found: dict[int, list[int] | None] = {}
    for length in lengths:
        cycle = _find_cycle(g, allowed, length)
        if cycle is not None:
            _verify_cycle(g, allowed, cycle)
        found[length] = cycle
    return found


class CheckStatus(Enum):
    """Outcome of an inequality check."""

    OK = "ok"
    VIOLATION = "violation"
    NOT_APPLICABLE = "not_applicable"
    UNDECIDED = "undecided"


@dataclass
class EdgeDegreeResult:
    """Result of the edge degree-sum check."""

    status: CheckStatus
    edges_checked: int
    edge: tuple[int, int] | None = None
    lhs: int | None = None
    rhs: int | None = None

    @property
    def ok(self) -> bool:
        """Return True if no edge violates the inequality."""
        return self.status == CheckStatus.OK

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "status": self.status.value,
            "edges_checked": self.edges_checked,
            "edge": list(self.edge) if self.edge else None,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


def check_edge_degree_sum(g: Graph, s: VertexSet, alpha: int) -> EdgeDegreeResult:
    """Check deg(u, S) + deg(v, S) <= |S| + alpha on every edge uv.

    Valid for K4-free graphs with alpha >= alpha(G); a K4 raises K4PresentError.
    """
    if alpha < 0:
        raise InvalidParameterError(f"alpha must be non-negative, got {alpha}")
    clique = find_k4(g)
    if clique is not None:
        raise K4PresentError(clique)
    rhs = len(s) + alpha
    deg_s = [(row & s.bits).bit_count() for row in g.adj]
    checked = 0
    for u, v in g.edges():
        checked += 1
        lhs = deg_s[u] + deg_s[v]
        if lhs > rhs:
            return EdgeDegreeResult(CheckStatus.VIOLATION, checked, (u, v), lhs, rhs)
    return EdgeDegreeResult(CheckStatus.OK, checked)


@dataclass
class EdgeAlphaResult:
    """Result of the e(F) <= alpha(F)^2 check."""

    status: CheckStatus
    edges: int
    alpha_lower: int | None = None
    alpha_upper: int | None = None
    cycle: list[int] | None = None

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "status": self.status.value,
            "edges": self.edges,
            "alpha_lower": self.alpha_lower,
            "alpha_upper": self.alpha_upper,
            "cycle": self.cycle,
        }


def check_edges_vs_alpha(g: Graph, budget: OracleBudget | None = None) -> EdgeAlphaResult:
    """Check e(F) <= alpha(F)^2 for graphs without cycles of length 3, 5 or 7."""
    cycles = has_short_odd_cycle(g)
    for length in ODD_CYCLE_LENGTHS:
        if cycles[length] is not None:
            return EdgeAlphaResult(CheckStatus.NOT_APPLICABLE, g.edge_total, cycle=cycles[length])

    result = independence_number(g, budget)
    edges = g.edge_total
    if edges <= result.lower**2:
        status = CheckStatus.OK
    elif edges > result.upper**2:
        status = CheckStatus.VIOLATION
    else:
        status = CheckStatus.UNDECIDED
    return EdgeAlphaResult(status, edges, result.lower, result.upper)
