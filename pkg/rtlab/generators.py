"""Seeded test-instance generators for rtlab."""
from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np

from .const import BE_DEFAULT_DIM, BE_DEFAULT_FAR, BE_DEFAULT_NEAR
from .core.exceptions import InvalidParameterError, RtlabError
from .core.models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    format_fraction,
    iter_bits,
)
from .oracles import OracleBudget, find_k4, has_short_odd_cycle, independence_number

_LOGGER = logging.getLogger(__name__)


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Return a counter-based (Philox) generator for one seed and stream."""
    if seed < 0 or stream < 0:
        raise InvalidParameterError(f"Seed and stream must be non-negative: {seed}, {stream}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))


class GenKind(Enum):
    """Generator families."""

    GNP = "gnp"
    BIPARTITE_MIN_DEG = "bipartite_min_deg"
    K4_FREE_GREEDY = "k4_free_greedy"
    BOLLOBAS_ERDOS = "bollobas_erdos"
    ODD_CYCLE_FREE = "odd_cycle_free"


def _check_probability(name: str, value: Fraction | int | float | str) -> Fraction:
    value = as_fraction(value)
    if not 0 <= value <= 1:
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {value}")
    return value


def _bernoulli(rng: np.random.Generator, p: Fraction, shape: tuple[int, ...]) -> np.ndarray:
    """Exact Bernoulli(p) draws for a rational p."""
    return rng.integers(0, p.denominator, size=shape) < p.numerator


def gen_gnp(n: int, p: Fraction | str, seed: int) -> Graph:
    """Return G(n, p): each pair is an edge independently with probability p."""
    if n < 0:
        raise InvalidParameterError(f"n must be non-negative, got {n}")
    p = _check_probability("p", p)
    rng = make_rng(seed)
    upper = np.triu(_bernoulli(rng, p, (n, n)), k=1)
    return Graph.from_matrix(upper | upper.T)


def gen_bipartite_min_degree(
    a: int, b: int, delta: Fraction | str, p: Fraction | str, seed: int
) -> BipartitePair:
    """Return a random pair on A = 0..a-1, B = a..a+b-1 with deg(v, B) >= ceil(delta b).

    Deficient A vertices receive uniformly random missing edges.
    """
    if a < 1 or b < 1:
        raise InvalidParameterError(f"Both sides need a vertex, got a={a} b={b}")
    delta = _check_probability("delta", delta)
    p = _check_probability("p", p)
    if p < delta:
        raise InvalidParameterError(f"Need p >= delta for headroom, got p={p} delta={delta}")
    rng = make_rng(seed)
    block = _bernoulli(rng, p, (a, b))
    need = -(-delta.numerator * b // delta.denominator)
    repaired = 0
    for row in range(a):
        short = need - int(block[row].sum())
        if short > 0:
            missing = np.flatnonzero(~block[row])
            block[row, rng.choice(missing, size=short, replace=False)] = True
            repaired += 1
    _LOGGER.debug("Repaired %d of %d A vertices to degree %d", repaired, a, need)

    n = a + b
    matrix = np.zeros((n, n), dtype=bool)
    matrix[:a, a:] = block
    matrix[a:, :a] = block.T
    pair = BipartitePair(
        Graph.from_matrix(matrix), VertexSet.from_range(n, 0, a), VertexSet.from_range(n, a, n)
    )
    low = min((pair.graph.adj[v] & pair.b_side.bits).bit_count() for v in range(a))
    if low < need:
        raise RtlabError(f"Minimum degree {low} below {need} after repair")
    return pair


def _closes_k4(rows: list[int], u: int, v: int) -> bool:
    """Return True if adding uv would complete a K4."""
    common = rows[u] & rows[v]
    return any(rows[w] & common for w in iter_bits(common))


def gen_k4_free(n: int, target_density: Fraction | str, seed: int) -> Graph:
    """Insert random edges, skipping any that would close a K4.

    Stops once e >= target_density * C(n, 2) or every pair has been tried.
    """
    if n < 0:
        raise InvalidParameterError(f"n must be non-negative, got {n}")
    target = _check_probability("target_density", target_density)
    rng = make_rng(seed)
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    total = len(pairs)
    rows = [0] * n
    edges = 0
    for index in rng.permutation(total):
        if edges * target.denominator >= target.numerator * total:
            break
        u, v = pairs[int(index)]
        if _closes_k4(rows, u, v):
            continue
        rows[u] |= 1 << v
        rows[v] |= 1 << u
        edges += 1
    graph = Graph(n, tuple(rows))
    _verify_k4_free(graph)
    return graph


def _verify_k4_free(g: Graph) -> None:
    clique = find_k4(g)
    if clique is not None:
        raise RtlabError(f"Generator emitted a K4 on {clique}")


def _sphere_points(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    points = rng.standard_normal((count, dim))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def forbids_k4(theta_near: float, theta_far: float) -> bool:
    """Return True if the two thresholds rule out a K4 on any point set.

    With cosines c = 1 - theta_near^2/2 (cross pairs need more) and
    f = 1 - theta_far^2/2 (same-class pairs need less), k pairwise joined points
    of one class have |sum|^2 < k + k(k - 1) f, and any point of the other class
    joined to all of them has inner product above k c with that sum.
    """
    near = 1.0 - theta_near**2 / 2.0
    far = 1.0 - theta_far**2 / 2.0
    if near <= 0.0:
        return False
    return 4.0 + 12.0 * far <= 0.0 and 9.0 * near**2 >= 3.0 + 6.0 * far and (
        4.0 * near**2 >= 2.0 + 2.0 * far
    )


def sphere_graph(
    n: int,
    dim: int = BE_DEFAULT_DIM,
    theta_near: float = BE_DEFAULT_NEAR,
    theta_far: float = BE_DEFAULT_FAR,
    seed: int = 0,
) -> Graph:
    """Return the two-class geometric graph on the unit sphere before any repair.

    Each class gets n/2 uniform points on the whole sphere: vertices
    0..n/2-1 and n/2..n-1. Same-class vertices are joined when far apart
    (distance > theta_far), cross-class vertices when close (distance < theta_near).
    """
    if n % 2:
        raise InvalidParameterError(f"n must be even, got {n}")
    if dim < 2:
        raise InvalidParameterError(f"dim must be >= 2, got {dim}")
    rng = make_rng(seed)
    points = _sphere_points(rng, n, dim)
    gram = points @ points.T
    gram = np.clip((gram + gram.T) / 2.0, -1.0, 1.0)
    dist = np.sqrt(np.maximum(0.0, 2.0 - 2.0 * gram))
    half = n // 2
    same = np.zeros((n, n), dtype=bool)
    same[:half, :half] = True
    same[half:, half:] = True
    matrix = np.where(same, dist > theta_far, dist < theta_near)
    np.fill_diagonal(matrix, False)
    return Graph.from_matrix(matrix)


def gen_bollobas_erdos(
    n: int,
    dim: int = BE_DEFAULT_DIM,
    theta_near: float = BE_DEFAULT_NEAR,
    theta_far: float = BE_DEFAULT_FAR,
    seed: int = 0,
) -> Graph:
    """Return the sphere graph, repaired to be K4-free.

    At thresholds where forbids_k4 holds there is nothing to repair. Otherwise
    every K4 left over loses one edge, a same-class edge where possible.
    """
    graph = sphere_graph(n, dim, theta_near, theta_far, seed)
    if forbids_k4(theta_near, theta_far):
        return graph
    half = n // 2
    rows = list(graph.adj)
    removed = 0
    while (clique := find_k4(Graph(n, tuple(rows)))) is not None:
        pairs = [(u, v) for i, u in enumerate(clique) for v in clique[i + 1:]]
        within = [(u, v) for u, v in pairs if (u < half) == (v < half)]
        u, v = (within or pairs)[0]
        rows[u] &= ~(1 << v)
        rows[v] &= ~(1 << u)
        removed += 1
    if removed:
        _LOGGER.debug("Removed %d edges to break K4s (n=%d, dim=%d)", removed, n, dim)
    return Graph(n, tuple(rows))


def gen_odd_cycle_free(n: int, p: Fraction | str, seed: int) -> Graph:
    """Return a random bipartite graph between 0..n//2-1 and n//2..n-1."""
    if n < 0:
        raise InvalidParameterError(f"n must be non-negative, got {n}")
    p = _check_probability("p", p)
    rng = make_rng(seed)
    half = n // 2
    block = _bernoulli(rng, p, (half, n - half))
    matrix = np.zeros((n, n), dtype=bool)
    matrix[:half, half:] = block
    matrix[half:, :half] = block.T
    graph = Graph.from_matrix(matrix)
    cycles = has_short_odd_cycle(graph)
    if any(cycle is not None for cycle in cycles.values()):
        raise RtlabError("Bipartite generator emitted a short odd cycle")
    return graph


def _param_to_json(value: Any) -> Any:
    return format_fraction(value) if isinstance(value, Fraction) else value


@dataclass(frozen=True)
class GenSpec:
    """Generator kind, its parameters and the seed."""

    kind: GenKind
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> GenSpec:
        """Create from a serialized mapping."""
        try:
            kind = GenKind(data["kind"])
        except (KeyError, ValueError) as err:
            raise InvalidParameterError(f"Unknown generator kind in {data!r}") from err
        return cls(kind=kind, params=dict(data.get("params", {})), seed=int(data.get("seed", 0)))

    def to_dict(self) -> dict[str, Any]:
        """Serialize with rationals as "num/den" strings."""
        return {
            "kind": self.kind.value,
            "params": {key: _param_to_json(val) for key, val in sorted(self.params.items())},
            "seed": self.seed,
        }


def _build_bollobas_erdos(
    seed: int,
    n: int,
    dim: int = BE_DEFAULT_DIM,
    theta_near: float = BE_DEFAULT_NEAR,
    theta_far: float = BE_DEFAULT_FAR,
) -> Graph:
    return gen_bollobas_erdos(int(n), int(dim), float(theta_near), float(theta_far), seed)


_BUILDERS: dict[GenKind, Callable[..., Graph]] = {
    GenKind.GNP: lambda seed, n, p: gen_gnp(int(n), p, seed),
    GenKind.BIPARTITE_MIN_DEG: lambda seed, a, b, delta, p: gen_bipartite_min_degree(
        int(a), int(b), delta, p, seed
    ).graph,
    GenKind.K4_FREE_GREEDY: lambda seed, n, target_density: gen_k4_free(
        int(n), target_density, seed
    ),
    GenKind.BOLLOBAS_ERDOS: lambda seed, n, **geometry: _build_bollobas_erdos(seed, n, **geometry),
    GenKind.ODD_CYCLE_FREE: lambda seed, n, p: gen_odd_cycle_free(int(n), p, seed),
}


def generate(spec: GenSpec) -> Graph:
    """Build the graph a GenSpec describes."""
    try:
        return _BUILDERS[spec.kind](spec.seed, **spec.params)
    except TypeError as err:
        raise InvalidParameterError(
            f"Bad parameters for {spec.kind.value}: {sorted(spec.params)}"
        ) from err


@dataclass
class CalibrationPoint:
    """Measured size and independence bounds for one geometry choice."""

    theta_near: float
    theta_far: float
    edges: int
    alpha_lower: int
    alpha_upper: int
    n: int

    @property
    def meets_target(self) -> bool:
        """Return True if e > n^2/10 and alpha < n/4 are certain."""
        return 10 * self.edges > self.n**2 and 4 * self.alpha_upper < self.n

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "theta_near": self.theta_near,
            "theta_far": self.theta_far,
            "edges": self.edges,
            "alpha_lower": self.alpha_lower,
            "alpha_upper": self.alpha_upper,
            "meets_target": self.meets_target,
        }


def calibrate_bollobas_erdos(
    n: int,
    dim: int,
    seed: int,
    near_grid: Iterable[float],
    far_grid: Iterable[float],
    budget: OracleBudget | None = None,
) -> list[CalibrationPoint]:
    """Sweep the geometry grid and measure e(G) and alpha(G) for each point."""
    far_values = list(far_grid)
    points = []
    for near in near_grid:
        for far in far_values:
            graph = gen_bollobas_erdos(n, dim, near, far, seed)
            alpha = independence_number(graph, budget)
            point = CalibrationPoint(near, far, graph.edge_total, alpha.lower, alpha.upper, n)
            _LOGGER.info(
                "near=%.3f far=%.3f: e=%d alpha in [%d, %d]",
                near,
                far,
                point.edges,
                point.alpha_lower,
                point.alpha_upper,
            )
            points.append(point)
    return points
