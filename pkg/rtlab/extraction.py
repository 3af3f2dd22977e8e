"""Minimum-degree core and regular pair extraction for rtlab."""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb
from typing import Any

import numpy as np

from .const import DEFAULT_REFUTER_TRIALS, EXTRACTION_EXACT_LIMIT
from .core.exceptions import (
    ExtractionError,
    InvalidParameterError,
    NoCoreError,
    PreconditionError,
    WitnessSearchError,
)
from .core.models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    count_edges_between,
    format_fraction,
    iter_bits,
)
from .generators import make_rng
from .regularity import (
    CheckMethod,
    EpsPlusVerdict,
    IrregularityWitness,
    is_eps_plus_regular_exact,
    min_subset_size,
    refute_eps_plus_sampled,
)

_LOGGER = logging.getLogger(__name__)


# Minimum-degree core


def core_threshold(size: int, n: int, alpha_count: int) -> Fraction:
    """Return (size^2 + size)/8 + (alpha n - alpha^2)/2."""
    return Fraction(size * size + size, 8) + Fraction(alpha_count * n - alpha_count**2, 2)


@dataclass
class CoreResult:
    """Vertex set V1 left by peeling, with the quantities its claims use."""

    v1: VertexSet
    n1: int
    removed_order: list[int]
    edges: int
    min_degree: int
    inequality_margin: Fraction
    alpha_count: int

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "v1": self.v1.to_list(),
            "n1": self.n1,
            "removed_order": list(self.removed_order),
            "edges": self.edges,
            "min_degree": self.min_degree,
            "inequality_margin": format_fraction(self.inequality_margin),
            "alpha_count": self.alpha_count,
        }


def _peel(g: Graph, alpha_count: int, enforce: bool) -> CoreResult:
    """Remove a minimum-degree vertex (lowest index first) while 4 deg < |V|."""
    n = g.n
    alive = g.vertices.bits
    degree = [row.bit_count() for row in g.adj]
    heap = [(d, v) for v, d in enumerate(degree)]
    heapq.heapify(heap)
    size = n
    edges = g.edge_total
    removed: list[int] = []

    while heap:
        d, v = heap[0]
        if not alive >> v & 1 or d != degree[v]:
            heapq.heappop(heap)
            continue
        if 4 * d >= size:
            break
        heapq.heappop(heap)
        alive &= ~(1 << v)
        for u in iter_bits(g.adj[v] & alive):
            degree[u] -= 1
            heapq.heappush(heap, (degree[u], u))
        size -= 1
        edges -= d
        removed.append(v)
        if enforce and edges <= core_threshold(size, n, alpha_count):
            raise NoCoreError("peeling broke the edge inequality", removed)

    min_degree = min((degree[v] for v in iter_bits(alive)), default=0)
    margin = edges - core_threshold(size, n, alpha_count)
    return CoreResult(
        VertexSet(n, alive), size, removed, edges, min_degree, margin, alpha_count
    )


def _check_alpha_count(g: Graph, alpha_count: int) -> None:
    if not 0 <= alpha_count <= g.n:
        raise InvalidParameterError(f"alpha_count must lie in 0..{g.n}, got {alpha_count}")


def peel_min_degree(g: Graph, alpha_count: int = 0) -> CoreResult:
    """Peel low-degree vertices without requiring the edge inequality."""
    _check_alpha_count(g, alpha_count)
    return _peel(g, alpha_count, enforce=False)


def extract_min_degree_core(g: Graph, alpha_count: int) -> CoreResult:
    """Return V1 with e(G[V1]) above threshold, min degree >= n1/4 and n1 > sqrt(alpha n / 2)."""
    _check_alpha_count(g, alpha_count)
    n = g.n
    if g.edge_total <= core_threshold(n, n, alpha_count):
        raise NoCoreError("input below threshold")

    core = _peel(g, alpha_count, enforce=True)
    if 2 * core.n1 * core.n1 <= alpha_count * n:
        raise NoCoreError("core too small", core.removed_order)
    if core.inequality_margin <= 0:
        raise ExtractionError("Core edge inequality fails", detail=core.to_dict())
    if 4 * core.min_degree < core.n1:
        raise ExtractionError("Core minimum degree below n1/4", detail=core.to_dict())
    if induced_edge_count(g, core.v1) != core.edges:
        raise ExtractionError("Core edge count drifted during peeling", detail=core.to_dict())

    _LOGGER.info(
        "Core: n1=%d of %d after removing %d vertices (min degree %d)",
        core.n1,
        n,
        len(core.removed_order),
        core.min_degree,
    )
    return core


def induced_edge_count(g: Graph, s: VertexSet) -> int:
    """Return e(G[S])."""
    return sum((g.adj[v] & s.bits).bit_count() for v in s) // 2


@dataclass(frozen=True)
class SelfBoundCheck:
    """e(G1) against (n1^2 + n1)/8 + (alpha1 n1 - alpha1^2)/2."""

    holds: bool
    edges: int
    bound: Fraction

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {"holds": self.holds, "edges": self.edges, "bound": format_fraction(self.bound)}


def check_core_self_bound(core: CoreResult, core_alpha: int) -> SelfBoundCheck:
    """Check the core's own edge inequality using alpha(G1)."""
    bound = core_threshold(core.n1, core.n1, core_alpha)
    return SelfBoundCheck(core.edges > bound, core.edges, bound)


# Regular pair extraction


class StopReason(Enum):
    """Why the extraction loop ended."""

    REGULAR_BY_CHECK = "regular_by_check"
    STOPPING_RULE_Y = "stopping_rule_y"
    ITERATION_BOUND_HIT = "iteration_bound_hit"


@dataclass(frozen=True)
class RefuterBudget:
    """Per-step regularity test settings."""

    trials: int = DEFAULT_REFUTER_TRIALS
    exact_limit: int = EXTRACTION_EXACT_LIMIT
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> RefuterBudget:
        """Create from a config mapping."""
        data = data or {}
        return cls(
            trials=int(data.get("trials", DEFAULT_REFUTER_TRIALS)),
            exact_limit=int(data.get("exact_limit", EXTRACTION_EXACT_LIMIT)),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a config mapping."""
        return {"trials": self.trials, "exact_limit": self.exact_limit, "seed": self.seed}


@dataclass
class ExtractionStep:
    """One shrinking step: X' - X'' replaces X and Y' leaves Y."""

    index: int
    x_prev_size: int
    y_prev_size: int
    witness: IrregularityWitness
    method: CheckMethod
    x_prime: VertexSet
    y_prime: VertexSet
    x_double_prime: VertexSet
    x_next: VertexSet
    y_next: VertexSet
    sparse_edges: int

    def to_dict(self) -> dict[str, Any]:
        """Serialize with sorted vertex arrays and "num/den" densities."""
        return {
            "index": self.index,
            "x_prev_size": self.x_prev_size,
            "y_prev_size": self.y_prev_size,
            "witness": self.witness.to_dict(),
            "method": self.method.value,
            "x_prime": self.x_prime.to_list(),
            "y_prime": self.y_prime.to_list(),
            "x_double_prime": self.x_double_prime.to_list(),
            "x_next": self.x_next.to_list(),
            "y_next": self.y_next.to_list(),
            "sparse_edges": self.sparse_edges,
            "sparse_density": format_fraction(
                Fraction(self.sparse_edges, len(self.x_prime) * len(self.y_prime))
            ),
        }

    @classmethod
    def from_dict(cls, n: int, data: dict[str, Any]) -> ExtractionStep:
        """Create from a serialized mapping."""
        return cls(
            index=int(data["index"]),
            x_prev_size=int(data["x_prev_size"]),
            y_prev_size=int(data["y_prev_size"]),
            witness=IrregularityWitness.from_dict(n, data["witness"]),
            method=CheckMethod(data["method"]),
            x_prime=VertexSet.from_dict(n, data["x_prime"]),
            y_prime=VertexSet.from_dict(n, data["y_prime"]),
            x_double_prime=VertexSet.from_dict(n, data["x_double_prime"]),
            x_next=VertexSet.from_dict(n, data["x_next"]),
            y_next=VertexSet.from_dict(n, data["y_next"]),
            sparse_edges=int(data["sparse_edges"]),
        )


def contract_size_bound(eps: Fraction, delta: Fraction, a: int) -> float:
    """Return exp(-2 log(2/eps) log(2/delta) / eps) * a."""
    e, d = float(eps), float(delta)
    return math.exp(-2 * math.log(2 / e) * math.log(2 / d) / e) * a


def strong_size_bound(eps: Fraction, delta: Fraction, a: int) -> float:
    """Return exp(-log(2/eps) log(2/delta) / eps) * a."""
    e, d = float(eps), float(delta)
    return math.exp(-math.log(2 / e) * math.log(2 / d) / e) * a


def iteration_bound(eps: Fraction, delta: Fraction) -> float:
    """Return log(2/delta) / eps, a strict upper bound on the step count."""
    return math.log(2 / float(delta)) / float(eps)


def stopping_level(eps: Fraction, delta: Fraction, b: int) -> Fraction:
    """Return (delta (1 + eps/2) - 2 eps) b."""
    return (delta * (1 + eps / 2) - 2 * eps) * b


@dataclass
class ExtractionTrace:
    """Replayable record of one extraction run."""

    a_side: VertexSet
    b_side: VertexSet
    eps: Fraction
    delta: Fraction
    steps: list[ExtractionStep] = field(default_factory=list)
    stop_reason: StopReason = StopReason.REGULAR_BY_CHECK
    final_a: VertexSet | None = None
    final_b: VertexSet | None = None
    final_check: EpsPlusVerdict | None = None

    @property
    def length(self) -> int:
        """Return the number of steps l."""
        return len(self.steps)

    def final_pair(self, g: Graph) -> BipartitePair:
        """Return the output pair F[X, Y]."""
        if self.final_a is None or self.final_b is None:
            raise ExtractionError("Trace has no final pair")
        return BipartitePair(g, self.final_a, self.final_b)

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        a = len(self.a_side)
        return {
            "a_side": self.a_side.to_list(),
            "b_side": self.b_side.to_list(),
            "eps": format_fraction(self.eps),
            "delta": format_fraction(self.delta),
            "steps": [step.to_dict() for step in self.steps],
            "stop_reason": self.stop_reason.value,
            "final_pair": {
                "a_side": self.final_a.to_list() if self.final_a else [],
                "b_side": self.final_b.to_list() if self.final_b else [],
            },
            "final_check": self.final_check.to_dict() if self.final_check else None,
            "iteration_bound": iteration_bound(self.eps, self.delta),
            "size_bound_contract": contract_size_bound(self.eps, self.delta, a),
            "size_bound_strong": strong_size_bound(self.eps, self.delta, a),
        }

    @classmethod
    def from_dict(cls, n: int, data: dict[str, Any]) -> ExtractionTrace:
        """Create from a serialized mapping over a graph with n vertices."""
        final = data.get("final_pair") or {}
        return cls(
            a_side=VertexSet.from_dict(n, data["a_side"]),
            b_side=VertexSet.from_dict(n, data["b_side"]),
            eps=as_fraction(data["eps"]),
            delta=as_fraction(data["delta"]),
            steps=[ExtractionStep.from_dict(n, step) for step in data.get("steps", [])],
            stop_reason=StopReason(data["stop_reason"]),
            final_a=VertexSet.from_dict(n, final.get("a_side", [])),
            final_b=VertexSet.from_dict(n, final.get("b_side", [])),
        )


def _check_extraction_params(p: BipartitePair, eps: Fraction, delta: Fraction) -> None:
    if not 0 < delta <= 1:
        raise InvalidParameterError(f"delta must lie in (0, 1], got {delta}")
    if not 0 < eps or 6 * eps > delta:
        raise InvalidParameterError(f"Need 0 < eps <= delta/6, got eps={eps} delta={delta}")
    if not p.a_side or not p.b_side:
        raise PreconditionError("Extraction needs two non-empty sides")
    b_bits = p.b_side.bits
    for v in p.a_side:
        deg = (p.graph.adj[v] & b_bits).bit_count()
        if deg * delta.denominator < delta.numerator * p.b:
            raise PreconditionError(
                f"Vertex {v} has {deg} neighbours in B, below delta*b = {delta * p.b}",
                detail={"vertex": v, "degree": deg, "required": format_fraction(delta * p.b)},
            )


def check_pair(
    pair: BipartitePair, eps: Fraction, refuter: RefuterBudget, stream: int
) -> EpsPlusVerdict:
    """Exact test when the enumeration is small, sampled refutation otherwise."""
    k = min_subset_size(eps, pair.a)
    m = min_subset_size(eps, pair.b)
    if comb(pair.a, k) * comb(pair.b, m) <= refuter.exact_limit:
        return is_eps_plus_regular_exact(pair, eps, limit=refuter.exact_limit)
    return refute_eps_plus_sampled(pair, eps, refuter.trials, refuter.seed + stream)


def _shrink_witness(
    g: Graph,
    witness: IrregularityWitness,
    k: int,
    m: int,
    eps: Fraction,
    refuter: RefuterBudget,
    stream: int,
) -> tuple[VertexSet, VertexSet, int]:
    """Cut the witness down to exactly k x m vertices with density below eps.

    Greedy: drop the vertex of highest cross-degree from the side with the
    larger excess. Falls back to random k x m subsets of the witness.
    """
    s_bits, t_bits = witness.a_prime.bits, witness.b_prime.bits
    while s_bits.bit_count() > k or t_bits.bit_count() > m:
        s_excess = s_bits.bit_count() - k
        t_excess = t_bits.bit_count() - m
        side, other = (s_bits, t_bits) if s_excess >= t_excess else (t_bits, s_bits)
        drop = max(iter_bits(side), key=lambda v: ((g.adj[v] & other).bit_count(), -v))
        if s_excess >= t_excess:
            s_bits &= ~(1 << drop)
        else:
            t_bits &= ~(1 << drop)

    x_prime, y_prime = VertexSet(g.n, s_bits), VertexSet(g.n, t_bits)
    edges = count_edges_between(g, x_prime, y_prime)
    if edges * eps.denominator < eps.numerator * k * m:
        return x_prime, y_prime, edges

    rng = make_rng(refuter.seed, stream + 1)
    s_list = np.asarray(witness.a_prime.to_list())
    t_list = np.asarray(witness.b_prime.to_list())
    for _ in range(refuter.trials):
        x_prime = VertexSet.from_iterable(g.n, rng.choice(s_list, size=k, replace=False).tolist())
        y_prime = VertexSet.from_iterable(g.n, rng.choice(t_list, size=m, replace=False).tolist())
        edges = count_edges_between(g, x_prime, y_prime)
        if edges * eps.denominator < eps.numerator * k * m:
            return x_prime, y_prime, edges
    raise WitnessSearchError(
        f"No sparse {k}x{m} subset pair found inside the witness",
        detail={"witness": witness.to_dict(), "k": k, "m": m},
    )


def extract_regular_pair(
    p: BipartitePair,
    eps: Fraction | str,
    delta: Fraction | str,
    refuter: RefuterBudget | None = None,
) -> tuple[BipartitePair, ExtractionTrace]:
    """Shrink F[A, B] to an eps-plus regular pair F[X, Y].

    Requires deg(v, B) >= delta b on A and 0 < eps <= delta/6. The output
    satisfies |Y| >= (delta - 2 eps) b, deg(v, Y) >= (delta - 2 eps) b on X,
    l < log(2/delta)/eps and |X| >= (eps/2)^l a; all four are re-verified.
    """
    eps = as_fraction(eps)
    delta = as_fraction(delta)
    refuter = refuter or RefuterBudget()
    _check_extraction_params(p, eps, delta)
    g = p.graph
    b = p.b
    stop_level = stopping_level(eps, delta, b)
    max_steps = iteration_bound(eps, delta)
    trace = ExtractionTrace(p.a_side, p.b_side, eps, delta)

    x, y = p.a_side, p.b_side
    while True:
        if len(y) <= stop_level:
            trace.stop_reason = StopReason.STOPPING_RULE_Y
            break
        if len(trace.steps) + 1 >= max_steps:
            trace.stop_reason = StopReason.ITERATION_BOUND_HIT
            break
        verdict = check_pair(BipartitePair(g, x, y), eps, refuter, len(trace.steps))
        if not verdict.irregular:
            trace.stop_reason = StopReason.REGULAR_BY_CHECK
            trace.final_check = verdict
            break

        k = min_subset_size(eps, len(x))
        m = min_subset_size(eps, len(y))
        x_prime, y_prime, edges = _shrink_witness(
            g, verdict.witness, k, m, eps, refuter, len(trace.steps)
        )
        cap = 2 * eps * m
        x_double = VertexSet.from_iterable(
            g.n, (v for v in x_prime if (g.adj[v] & y_prime.bits).bit_count() > cap)
        )
        step = ExtractionStep(
            index=len(trace.steps) + 1,
            x_prev_size=len(x),
            y_prev_size=len(y),
            witness=verdict.witness,
            method=verdict.method,
            x_prime=x_prime,
            y_prime=y_prime,
            x_double_prime=x_double,
            x_next=x_prime - x_double,
            y_next=y - y_prime,
            sparse_edges=edges,
        )
        trace.steps.append(step)
        _LOGGER.debug(
            "Extraction step %d: |X|=%d -> %d, |Y|=%d -> %d",
            step.index,
            len(x),
            len(step.x_next),
            len(y),
            len(step.y_next),
        )
        x, y = step.x_next, step.y_next

    trace.final_a, trace.final_b = x, y
    result = verify_trace(g, trace, eps, delta)
    if not result.ok:
        _LOGGER.error("Extraction postcondition failed: %s", result.invariant)
        raise ExtractionError(
            f"Extraction invariant {result.invariant} failed at step {result.step}",
            detail={"check": result.to_dict(), "trace": trace.to_dict()},
        )
    _LOGGER.info(
        "Extracted %dx%d pair from %dx%d in %d steps (%s)",
        len(x),
        len(y),
        p.a,
        b,
        trace.length,
        trace.stop_reason.value,
    )
    return BipartitePair(g, x, y), trace


@dataclass
class TraceCheck:
    """Outcome of replaying a trace: OK, or the first broken invariant."""

    ok: bool
    step: int | None = None
    invariant: str | None = None
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "ok": self.ok,
            "step": self.step,
            "invariant": self.invariant,
            "detail": self.detail,
        }


def _broken(step: int | None, invariant: str, **detail: Any) -> TraceCheck:
    return TraceCheck(False, step, invariant, {key: str(val) for key, val in detail.items()})


def _replay_step(
    g: Graph,
    step: ExtractionStep,
    x: VertexSet,
    y: VertexSet,
    eps: Fraction,
    stop_level: Fraction,
) -> TraceCheck | None:
    i = step.index
    if step.x_prev_size != len(x) or step.y_prev_size != len(y):
        return _broken(i, "previous_sizes", x=len(x), y=len(y))
    if len(y) <= stop_level:
        return _broken(i, "stopping_rule", y=len(y), level=stop_level)

    s, t = step.witness.a_prime, step.witness.b_prime
    if not (s.issubset(x) and t.issubset(y)):
        return _broken(i, "witness_subsets")
    k = min_subset_size(eps, len(x))
    m = min_subset_size(eps, len(y))
    witness_edges = count_edges_between(g, s, t)
    if (
        len(s) < k
        or len(t) < m
        or witness_edges != step.witness.edges
        or witness_edges * eps.denominator >= eps.numerator * len(s) * len(t)
    ):
        return _broken(i, "witness", edges=witness_edges, size_s=len(s), size_t=len(t))

    if not (step.x_prime.issubset(s) and step.y_prime.issubset(t)):
        return _broken(i, "sparse_subsets")
    if len(step.x_prime) != k or len(step.y_prime) != m:
        return _broken(i, "subset_sizes", x_prime=len(step.x_prime), y_prime=len(step.y_prime))
    edges = count_edges_between(g, step.x_prime, step.y_prime)
    if edges != step.sparse_edges or edges * eps.denominator >= eps.numerator * k * m:
        return _broken(i, "sparse_density", edges=edges)

    cap = 2 * eps * m
    x_double = VertexSet.from_iterable(
        g.n, (v for v in step.x_prime if (g.adj[v] & step.y_prime.bits).bit_count() > cap)
    )
    if x_double != step.x_double_prime:
        return _broken(i, "x_double_prime", expected=x_double.to_list())
    if step.x_next != step.x_prime - x_double:
        return _broken(i, "x_next")
    if step.y_next != y - step.y_prime or len(step.y_next) != len(y) - m:
        return _broken(i, "y_next", expected=len(y) - m, found=len(step.y_next))
    if 2 * len(step.x_next) < eps * len(x) or len(step.x_next) > k:
        return _broken(i, "x_size", size=len(step.x_next), prev=len(x))
    return None


def verify_trace(g: Graph, t: ExtractionTrace, eps: Fraction, delta: Fraction) -> TraceCheck:
    """Replay a trace against g, recomputing every set, density and degree."""
    eps = as_fraction(eps)
    delta = as_fraction(delta)
    a, b = len(t.a_side), len(t.b_side)
    if a == 0 or b == 0 or not t.a_side.isdisjoint(t.b_side):
        return _broken(None, "initial_pair")
    stop_level = stopping_level(eps, delta, b)

    x, y = t.a_side, t.b_side
    removed = 0
    for step in t.steps:
        broken = _replay_step(g, step, x, y, eps, stop_level)
        if broken is not None:
            return broken
        removed += len(step.y_prime)
        x, y = step.x_next, step.y_next
        outside = t.b_side - y
        cap = 2 * eps * removed
        for u in x:
            loss = (g.adj[u] & outside.bits).bit_count()
            if loss > cap:
                return _broken(step.index, "degree_loss", vertex=u, loss=loss, cap=cap)

    if t.final_a != x or t.final_b != y:
        return _broken(None, "final_pair")
    if t.stop_reason == StopReason.STOPPING_RULE_Y and len(y) > stop_level:
        return _broken(None, "stop_reason", y=len(y), level=stop_level)
    if t.final_check is not None and t.final_check.irregular:
        return _broken(None, "stop_reason", status=t.final_check.status.value)

    floor_y = (delta - 2 * eps) * b
    if len(y) < floor_y:
        return _broken(None, "final_y_size", size=len(y), floor=floor_y)
    for v in x:
        deg = (g.adj[v] & y.bits).bit_count()
        if deg < floor_y:
            return _broken(None, "final_degree", vertex=v, degree=deg, floor=floor_y)
    if not t.length < iteration_bound(eps, delta):
        return _broken(None, "iteration_bound", length=t.length)
    if len(x) < (eps / 2) ** t.length * a:
        return _broken(None, "final_x_size", size=len(x))
    return TraceCheck(True)

