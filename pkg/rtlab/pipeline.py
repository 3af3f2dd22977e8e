"""Partition, symmetrization and edge-bound pipeline for rtlab."""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any

from .const import DEFAULT_NU, MAX_NU
from .core.exceptions import (
    ClaimFailedError,
    InvalidParameterError,
    NoCoreError,
    PreconditionError,
    RtlabError,
)
from .core.models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    format_fraction,
    induced_subgraph,
    iter_bits,
)
from .extraction import (
    CoreResult,
    ExtractionTrace,
    RefuterBudget,
    check_core_self_bound,
    extract_min_degree_core,
    extract_regular_pair,
    induced_edge_count,
    peel_min_degree,
)
from .generators import make_rng
from .oracles import (
    OracleBudget,
    find_k4,
    find_k4_through,
    has_short_odd_cycle,
    independence_number,
)

_LOGGER = logging.getLogger(__name__)

B0_STREAM = 1
SECOND_PAIR_SEED_OFFSET = 1000


class ClaimMode(Enum):
    """What a failing claim does."""

    ASSERT = "assert"
    DIAGNOSE = "diagnose"


def _jsonable(value: Any) -> Any:
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, VertexSet):
        return value.to_list()
    if isinstance(value, (tuple, list)):
        return [_jsonable(item) for item in value]
    if isinstance(value, dict):
        return {key: _jsonable(item) for key, item in value.items()}
    return value


@dataclass
class ClaimResult:
    """Whether one claim held on this input, with its counterexample if not."""

    name: str
    holds: bool
    applicable: bool = True
    informational: bool = False
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "holds": self.holds,
            "applicable": self.applicable,
            "informational": self.informational,
            "detail": _jsonable(self.detail),
        }


class ClaimRecorder:
    """Collects claim results; raises on failure in assert mode."""

    def __init__(self, mode: ClaimMode = ClaimMode.DIAGNOSE) -> None:
        """Initialize the recorder."""
        self.mode = mode
        self.results: dict[str, ClaimResult] = {}

    def record(
        self,
        name: str,
        holds: bool,
        *,
        applicable: bool = True,
        informational: bool = False,
        **detail: Any,
    ) -> ClaimResult:
        """Record a claim outcome."""
        result = ClaimResult(name, bool(holds), applicable, informational, detail)
        self.results[name] = result
        if result.holds:
            _LOGGER.debug("Claim %s holds", name)
            return result
        if self.mode == ClaimMode.ASSERT and applicable and not informational:
            _LOGGER.error("Claim %s failed: %s", name, result.to_dict()["detail"])
            raise ClaimFailedError(name, result.to_dict())
        _LOGGER.warning("Claim %s failed: %s", name, result.to_dict()["detail"])
        return result

    @property
    def passed(self) -> int:
        """Return the number of claims that held."""
        return sum(1 for result in self.results.values() if result.holds)

    @property
    def failed(self) -> int:
        """Return the number of claims that failed."""
        return len(self.results) - self.passed

    def to_dict(self) -> dict[str, Any]:
        """Serialize all results keyed by claim name."""
        return {name: result.to_dict() for name, result in sorted(self.results.items())}


@dataclass(frozen=True)
class PipelineConfig:
    """Pipeline parameters."""

    nu: Fraction = DEFAULT_NU
    alpha_count: int | None = None
    seed: int = 0
    claim_mode: ClaimMode = ClaimMode.DIAGNOSE
    refuter: RefuterBudget = field(default_factory=RefuterBudget)
    oracle: OracleBudget = field(default_factory=OracleBudget.default)

    def __post_init__(self) -> None:
        """Validate nu and alpha."""
        nu = as_fraction(self.nu)
        object.__setattr__(self, "nu", nu)
        if not 0 < nu < MAX_NU:
            raise InvalidParameterError(f"nu must lie in (0, 1/15), got {nu}")
        if self.alpha_count is not None and self.alpha_count < 0:
            raise InvalidParameterError(f"alpha_count must be non-negative, got {self.alpha_count}")

    @property
    def log_n_threshold(self) -> float:
        """Return log N = 10 log(1/nu) / nu."""
        return 10 * math.log(1 / float(self.nu)) / float(self.nu)

    @property
    def log_gamma(self) -> float:
        """Return log gamma = -log N."""
        return -self.log_n_threshold

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PipelineConfig:
        """Create from a config mapping."""
        alpha = data.get("alpha_count")
        oracle = data.get("oracle")
        return cls(
            nu=as_fraction(data.get("nu", DEFAULT_NU)),
            alpha_count=None if alpha is None else int(alpha),
            seed=int(data.get("seed", 0)),
            claim_mode=ClaimMode(data.get("claim_mode", ClaimMode.DIAGNOSE.value)),
            refuter=RefuterBudget.from_dict(data.get("refuter")),
            oracle=OracleBudget.default() if oracle is None else OracleBudget.from_dict(oracle),
        )

    def to_dict(self) -> dict[str, Any]:
        """Serialize to a config mapping."""
        return {
            "nu": format_fraction(self.nu),
            "alpha_count": self.alpha_count,
            "seed": self.seed,
            "claim_mode": self.claim_mode.value,
            "refuter": self.refuter.to_dict(),
            "oracle": self.oracle.to_dict(),
            "log_n_threshold": self.log_n_threshold,
            "log_gamma": self.log_gamma,
        }


def resolve_alpha(g: Graph, cfg: PipelineConfig) -> tuple[int, bool]:
    """Return (alpha, exact): the configured value or the oracle's best.

    When the oracle runs out of budget its upper bound is used.
    """
    if cfg.alpha_count is not None:
        return cfg.alpha_count, True
    result = independence_number(g, cfg.oracle)
    return (result.lower, True) if result.exact else (result.upper, False)


def _deg(g: Graph, v: int, s: VertexSet) -> int:
    return (g.adj[v] & s.bits).bit_count()


def _first_failure(vertices: VertexSet, holds: Any) -> int | None:
    for v in vertices:
        if not holds(v):
            return v
    return None


def _min_degree_fraction(g: Graph, side: VertexSet, other: VertexSet) -> Fraction:
    low = min(_deg(g, v, other) for v in side)
    return Fraction(low, len(other))


def _extraction_eps(delta: Fraction, nu: Fraction) -> Fraction:
    """Return eps = nu when nu <= delta/6, else delta/6."""
    return min(nu, delta / 6)


# Step 1


@dataclass
class FirstPair:
    """Output of step 1: the regular pair G[B1, A1] inside G[B0, A0]."""

    b0: VertexSet
    a0: VertexSet
    b1: VertexSet
    a1: VertexSet
    eps: Fraction
    delta: Fraction
    trace: ExtractionTrace


def step1_first_pair(
    g: Graph, cfg: PipelineConfig, claims: ClaimRecorder | None = None
) -> FirstPair:
    """Pick a random nu n subset B0 and extract a regular pair from G[B0, V - B0]."""
    claims = claims or ClaimRecorder(cfg.claim_mode)
    n = g.n
    if 4 * g.min_degree() < n:
        raise PreconditionError(
            f"Minimum degree {g.min_degree()} is below n/4; extract the core first",
            detail={"min_degree": g.min_degree(), "n": n},
        )
    alpha, _ = resolve_alpha(g, cfg)
    nu = cfg.nu
    size = -(-nu.numerator * n // nu.denominator)
    rng = make_rng(cfg.seed, B0_STREAM)
    b0 = VertexSet.from_iterable(n, rng.choice(n, size=size, replace=False).tolist())
    a0 = g.vertices - b0

    delta = _min_degree_fraction(g, b0, a0)
    if delta == 0:
        raise PreconditionError("Some vertex of B0 has no neighbour in V - B0")
    eps = _extraction_eps(delta, nu)
    refuter = dataclasses.replace(cfg.refuter, seed=cfg.refuter.seed + cfg.seed)
    pair, trace = extract_regular_pair(BipartitePair(g, b0, a0), eps, delta, refuter)
    b1, a1 = pair.a_side, pair.b_side
    _LOGGER.info("Step 1: |B1|=%d |A1|=%d (eps=%s, delta=%s)", len(b1), len(a1), eps, delta)

    k4_free = find_k4(g) is None
    floor = Fraction(n, 4) - 3 * nu * n
    bad = _first_failure(b1, lambda v: _deg(g, v, a1) >= floor)
    claims.record("b1_degree", bad is None, applicable=k4_free, vertex=bad, floor=floor)
    claims.record("b1_size", len(b1) > alpha, applicable=k4_free, size=len(b1), alpha=alpha)
    floor_a1 = Fraction(n, 2) - 6 * nu * n - alpha
    claims.record("a1_size", len(a1) >= floor_a1, applicable=k4_free, size=len(a1), floor=floor_a1)
    return FirstPair(b0, a0, b1, a1, eps, delta, trace)


# Step 2


def _degree_cap_claim(
    g: Graph,
    claims: ClaimRecorder,
    name: str,
    part: VertexSet,
    cap: Fraction,
    across: VertexSet,
    k4_free: bool,
) -> None:
    """Record deg(v, part) <= cap on part, searching for a K4 through a violator."""
    bad = _first_failure(part, lambda v: _deg(g, v, part) <= cap)
    detail: dict[str, Any] = {"vertex": bad, "cap": cap}
    if bad is not None:
        detail["degree"] = _deg(g, bad, part)
        detail["k4_witness"] = find_k4_through(g, bad, part, across)
    claims.record(name, bad is None, applicable=k4_free, **detail)


def step2_prune_A(
    g: Graph,
    b1: VertexSet,
    a1: VertexSet,
    cfg: PipelineConfig,
    claims: ClaimRecorder | None = None,
) -> tuple[VertexSet, ClaimResult]:
    """Drop A1 vertices with fewer than nu |B1| neighbours in B1."""
    claims = claims or ClaimRecorder(cfg.claim_mode)
    nu, n = cfg.nu, g.n
    k4_free = find_k4(g) is None
    floor = nu * len(b1)
    a2 = VertexSet.from_iterable(g.n, (v for v in a1 if _deg(g, v, b1) >= floor))
    _LOGGER.info("Step 2: discarded %d of %d A1 vertices", len(a1) - len(a2), len(a1))

    claims.record(
        "a2_size", len(a2) >= (1 - nu) * len(a1), applicable=k4_free, size=len(a2), a1=len(a1)
    )
    floor_b1 = Fraction(n, 4) - 4 * nu * n
    bad = _first_failure(b1, lambda v: _deg(g, v, a2) >= floor_b1)
    claims.record("a2_degree", bad is None, applicable=k4_free, vertex=bad, floor=floor_b1)
    _degree_cap_claim(g, claims, "a2_inner_degree", a2, nu * len(a1), b1, k4_free)
    return a2, claims.results["a2_inner_degree"]


# Step 3


@dataclass
class SecondPair:
    """Output of step 3: the regular pair G[A2', B2] and the pruned B3."""

    a2_prime: VertexSet
    b2: VertexSet
    b3: VertexSet
    eps: Fraction
    delta: Fraction
    trace: ExtractionTrace


def step3_second_pair(
    g: Graph, a2: VertexSet, cfg: PipelineConfig, claims: ClaimRecorder | None = None
) -> SecondPair:
    """Extract a regular pair from G[A2, V - A2] and prune B2 to B3."""
    claims = claims or ClaimRecorder(cfg.claim_mode)
    nu, n = cfg.nu, g.n
    if not a2:
        raise PreconditionError("Step 3 needs a non-empty A2")
    alpha, _ = resolve_alpha(g, cfg)
    k4_free = find_k4(g) is None
    outside = g.vertices - a2
    if not outside:
        raise PreconditionError("A2 covers every vertex")

    floor = Fraction(n, 4) - nu * n
    bad = _first_failure(a2, lambda v: _deg(g, v, outside) >= floor)
    if bad is not None and cfg.claim_mode == ClaimMode.ASSERT and k4_free:
        raise PreconditionError(
            f"Vertex {bad} of A2 has fewer than {floor} neighbours outside A2",
            detail={"vertex": bad, "floor": format_fraction(floor)},
        )
    claims.record("a2_outer_degree", bad is None, applicable=k4_free, vertex=bad, floor=floor)

    delta = _min_degree_fraction(g, a2, outside)
    if delta == 0:
        raise PreconditionError("Some vertex of A2 has no neighbour outside A2")
    eps = _extraction_eps(delta, nu)
    refuter = dataclasses.replace(
        cfg.refuter, seed=cfg.refuter.seed + cfg.seed + SECOND_PAIR_SEED_OFFSET
    )
    pair, trace = extract_regular_pair(BipartitePair(g, a2, outside), eps, delta, refuter)
    a2_prime, b2 = pair.a_side, pair.b_side
    b3 = VertexSet.from_iterable(
        g.n, (v for v in b2 if _deg(g, v, a2_prime) >= nu * len(a2_prime))
    )
    _LOGGER.info(
        "Step 3: |A2'|=%d |B2|=%d |B3|=%d (eps=%s, delta=%s)",
        len(a2_prime),
        len(b2),
        len(b3),
        eps,
        delta,
    )

    floor_b2 = Fraction(n, 2) - 6 * nu * n - alpha
    claims.record("b2_size", len(b2) >= floor_b2, applicable=k4_free, size=len(b2), floor=floor_b2)
    claims.record(
        "b3_size", len(b3) >= (1 - nu) * len(b2), applicable=k4_free, size=len(b3), b2=len(b2)
    )
    _degree_cap_claim(g, claims, "b3_inner_degree", b3, nu * len(b2), a2_prime, k4_free)
    return SecondPair(a2_prime, b2, b3, eps, delta, trace)


# Step 4


@dataclass
class PartitionCertificate:
    """Every named set of steps 1 to 4 with the claim results."""

    b0: VertexSet
    b1: VertexSet
    a0: VertexSet
    a1: VertexSet
    a2: VertexSet
    a2_prime: VertexSet
    b2: VertexSet
    b3: VertexSet
    a_prime: VertexSet
    b_prime: VertexSet
    a: VertexSet
    b: VertexSet
    k: Fraction
    ties: list[int]
    alpha_count: int
    claim_results: dict[str, ClaimResult] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Check that A and B partition V."""
        if not self.a.isdisjoint(self.b) or (self.a | self.b) != VertexSet.full(self.a.n):
            raise RtlabError("A and B do not partition the vertex set")

    def to_dict(self) -> dict[str, Any]:
        """Serialize with sorted vertex arrays."""
        sets = {
            name: getattr(self, name).to_list()
            for name in (
                "b0", "b1", "a0", "a1", "a2", "a2_prime", "b2", "b3", "a_prime", "b_prime", "a", "b"
            )
        }
        return {
            **sets,
            "k": format_fraction(self.k),
            "ties": list(self.ties),
            "alpha_count": self.alpha_count,
            "claim_results": {
                name: result.to_dict() for name, result in sorted(self.claim_results.items())
            },
        }


def _part_claims(
    g: Graph,
    claims: ClaimRecorder,
    suffix: str,
    part: VertexSet,
    core_part: VertexSet,
    extra: VertexSet,
    alpha: int,
    k4_free: bool,
) -> None:
    """Record the inner-degree claims for one side of the partition."""
    bad = _first_failure(part, lambda v: _deg(g, v, core_part) <= alpha)
    claims.record(f"core_part_degree_{suffix}", bad is None, applicable=k4_free, vertex=bad)
    cap = len(extra) + alpha
    bad = _first_failure(part, lambda v: _deg(g, v, part) <= cap)
    claims.record(
        f"inner_degree_cap_{suffix}", bad is None, applicable=k4_free, vertex=bad, cap=cap
    )
    bad = _first_failure(part, lambda v: _deg(g, v, part) <= alpha)
    claims.record(f"inner_degree_{suffix}", bad is None, applicable=k4_free, vertex=bad)
    cycles = has_short_odd_cycle(g, part)
    found = {str(length): cycle for length, cycle in cycles.items() if cycle is not None}
    claims.record(f"short_odd_cycles_{suffix}", not found, applicable=k4_free, cycles=found)


def step4_partition(
    g: Graph,
    first: FirstPair,
    a2: VertexSet,
    second: SecondPair,
    cfg: PipelineConfig,
    claims: ClaimRecorder | None = None,
) -> PartitionCertificate:
    """Split the leftover vertices into A' and B' and check the partition claims."""
    claims = claims or ClaimRecorder(cfg.claim_mode)
    nu, n = cfg.nu, g.n
    alpha, _ = resolve_alpha(g, cfg)
    k4_free = find_k4(g) is None
    b3 = second.b3
    rest = g.vertices - (a2 | b3)

    a_prime_bits = 0
    ties = []
    for v in rest:
        to_b3, to_a2 = _deg(g, v, b3), _deg(g, v, a2)
        if to_b3 >= to_a2:
            a_prime_bits |= 1 << v
            if to_b3 == to_a2:
                ties.append(v)
    a_prime = VertexSet(n, a_prime_bits)
    b_prime = rest - a_prime
    a, b = a2 | a_prime, b3 | b_prime
    k = max(len(a), len(b)) - Fraction(n, 2)
    _LOGGER.info(
        "Step 4: |A|=%d |B|=%d (|A'|=%d, |B'|=%d, %d ties), k=%s",
        len(a),
        len(b),
        len(a_prime),
        len(b_prime),
        len(ties),
        k,
    )

    outer = len(a_prime) + len(b_prime)
    bound = 14 * nu * n + 2 * alpha
    claims.record("outer_part_size", outer <= bound, applicable=k4_free, size=outer, bound=bound)
    floor = Fraction(n, 9)
    bad = _first_failure(a_prime, lambda v: _deg(g, v, b3) >= floor)
    if bad is None:
        bad = _first_failure(b_prime, lambda v: _deg(g, v, a2) >= floor)
    claims.record("crossing_degree", bad is None, applicable=k4_free, vertex=bad, floor=floor)
    low = (Fraction(1, 2) - 7 * nu) * n - alpha
    high = (Fraction(1, 2) + 7 * nu) * n + alpha
    claims.record(
        "part_sizes",
        all(low <= len(part) <= high for part in (a, b)),
        applicable=k4_free,
        a=len(a),
        b=len(b),
    )
    _part_claims(g, claims, "a", a, a2, a_prime, alpha, k4_free)
    _part_claims(g, claims, "b", b, b3, b_prime, alpha, k4_free)
    claims.record("balance", k <= 3 * alpha, applicable=k4_free, k=k, alpha=alpha)

    return PartitionCertificate(
        b0=first.b0,
        b1=first.b1,
        a0=first.a0,
        a1=first.a1,
        a2=a2,
        a2_prime=second.a2_prime,
        b2=second.b2,
        b3=b3,
        a_prime=a_prime,
        b_prime=b_prime,
        a=a,
        b=b,
        k=k,
        ties=ties,
        alpha_count=alpha,
        claim_results=claims.results,
    )


# Step 5


@dataclass
class IlmSplit:
    """High (I), light (L) and remaining (M) vertices of each side."""

    i_a: VertexSet
    l_a: VertexSet
    m_a: VertexSet
    i_b: VertexSet
    l_b: VertexSet
    m_b: VertexSet

    def to_dict(self) -> dict[str, Any]:
        """Serialize with sorted vertex arrays."""
        return {
            name: getattr(self, name).to_list()
            for name in ("i_a", "l_a", "m_a", "i_b", "l_b", "m_b")
        }


def classify_side(
    g: Graph, side: VertexSet, other: VertexSet, alpha: int
) -> tuple[VertexSet, VertexSet, VertexSet]:
    """Split a side by cross-degree d: I if 2d > |other| + 8 alpha, L if 2d > |other| + alpha."""
    high, light = 0, 0
    size = len(other)
    for v in side:
        twice = 2 * _deg(g, v, other)
        if twice > size + 8 * alpha:
            high |= 1 << v
        elif twice > size + alpha:
            light |= 1 << v
    i_set, l_set = VertexSet(g.n, high), VertexSet(g.n, light)
    return i_set, l_set, side - i_set - l_set


def ilm_split(g: Graph, a: VertexSet, b: VertexSet, alpha: int) -> IlmSplit:
    """Return the I/L/M split of both sides."""
    return IlmSplit(*classify_side(g, a, b, alpha), *classify_side(g, b, a, alpha))


def symmetrize(g: Graph, a: VertexSet, b: VertexSet, split: IlmSplit) -> Graph:
    """Return G': L vertices lose their inside edges; I and L vertices get every cross edge."""
    rows = list(g.adj)
    for light, part in ((split.l_a, a), (split.l_b, b)):
        for v in light:
            for u in iter_bits(rows[v] & part.bits):
                rows[u] &= ~(1 << v)
            rows[v] &= ~part.bits
    for movers, other in ((split.i_a | split.l_a, b), (split.i_b | split.l_b, a)):
        for v in movers:
            rows[v] |= other.bits
            for u in other:
                rows[u] |= 1 << v
    return Graph(g.n, tuple(rows))


@dataclass
class SymmetrizationResult:
    """Output of step 5."""

    split: IlmSplit
    gprime: Graph


def _side_checks(
    g: Graph,
    gprime: Graph,
    claims: ClaimRecorder,
    suffix: str,
    part: VertexSet,
    other: VertexSet,
    high: VertexSet,
    light: VertexSet,
    rest: VertexSet,
    alpha: int,
    k4_free: bool,
    oracle: OracleBudget,
) -> None:
    movers = high | light
    pair_edge = next(
        ((u, v) for u in movers for v in iter_bits(g.adj[u] & movers.bits) if u < v), None
    )
    claims.record(
        f"light_independent_{suffix}", pair_edge is None, applicable=k4_free, edge=pair_edge
    )
    bad = _first_failure(high, lambda v: _deg(g, v, part) == 0)
    claims.record(f"high_isolated_{suffix}", bad is None, applicable=k4_free, vertex=bad)

    inside = next((v for v in movers if gprime.adj[v] & part.bits), None)
    claims.record(f"light_cut_off_{suffix}", inside is None, applicable=k4_free, vertex=inside)

    gain_floor = Fraction(len(other), 2) - 5 * alpha
    bad_gain = _first_failure(light, lambda v: len(other) - _deg(g, v, other) >= gain_floor)
    bad_loss = _first_failure(light, lambda v: _deg(g, v, part) <= alpha)
    claims.record(f"light_gain_{suffix}", bad_gain is None, applicable=k4_free, vertex=bad_gain)
    claims.record(f"light_loss_{suffix}", bad_loss is None, applicable=k4_free, vertex=bad_loss)

    before = has_short_odd_cycle(g, part)
    after = has_short_odd_cycle(gprime, part)
    new = [length for length in after if after[length] is not None and before[length] is None]
    claims.record(f"cycles_preserved_{suffix}", not new, lengths=new)

    budget = alpha - len(movers)
    if rest:
        sub, _ = induced_subgraph(gprime, rest)
        inner = independence_number(sub, oracle)
        edges = sub.edge_total
        upper = inner.upper
    else:
        edges, upper, inner = 0, 0, None
    claims.record(
        f"rest_independence_{suffix}",
        upper <= budget,
        applicable=k4_free,
        alpha_upper=upper,
        exact=inner.exact if inner else True,
        budget=budget,
    )
    claims.record(
        f"rest_edges_{suffix}",
        budget >= 0 and edges <= budget * budget,
        applicable=k4_free,
        edges=edges,
        bound=budget * budget,
    )


def step5_symmetrize(
    g: Graph,
    cert: PartitionCertificate,
    cfg: PipelineConfig,
    claims: ClaimRecorder | None = None,
) -> SymmetrizationResult:
    """Compute the I/L/M split, build G' and check it."""
    claims = claims or ClaimRecorder(cfg.claim_mode)
    alpha = cert.alpha_count
    k4_free = find_k4(g) is None
    split = ilm_split(g, cert.a, cert.b, alpha)
    gprime = symmetrize(g, cert.a, cert.b, split)
    _LOGGER.info(
        "Step 5: I/L/M sizes A=%d/%d/%d B=%d/%d/%d, e(G)=%d e(G')=%d",
        len(split.i_a),
        len(split.l_a),
        len(split.m_a),
        len(split.i_b),
        len(split.l_b),
        len(split.m_b),
        g.edge_total,
        gprime.edge_total,
    )

    claims.record(
        "symmetrized_edges",
        gprime.edge_total >= g.edge_total,
        applicable=k4_free,
        e_g=g.edge_total,
        e_gprime=gprime.edge_total,
    )
    clique = find_k4(gprime)
    claims.record("symmetrized_k4_free", clique is None, applicable=k4_free, clique=clique)
    _side_checks(
        g, gprime, claims, "a", cert.a, cert.b, split.i_a, split.l_a, split.m_a,
        alpha, k4_free, cfg.oracle,
    )
    _side_checks(
        g, gprime, claims, "b", cert.b, cert.a, split.i_b, split.l_b, split.m_b,
        alpha, k4_free, cfg.oracle,
    )
    return SymmetrizationResult(split, gprime)


# Closing algebra


class BoundVerdict(Enum):
    """Whether e(G) respects the final bound."""

    BOUND_HOLDS = "bound_holds"
    BOUND_FAILS = "bound_fails"


def f_a(x: Fraction, a: Fraction, b: Fraction, alpha: int) -> Fraction:
    """Return x (b + alpha)/2 + (a - x) b + 2 (alpha - (a - x))^2."""
    return x * (b + alpha) / 2 + (a - x) * b + 2 * (alpha - (a - x)) ** 2


def f_b(x: Fraction, a: Fraction, b: Fraction, alpha: int) -> Fraction:
    """Return x (a + alpha)/2 + (b - x) a + 2 (alpha - (b - x))^2."""
    return f_a(x, b, a, alpha)


def closed_form_bound(n: int, k: Fraction, alpha: int) -> Fraction:
    """Return n^2/8 + (alpha n - alpha^2)/2 - k^2/2."""
    return Fraction(n * n, 8) + Fraction(alpha * n - alpha * alpha, 2) - k * k / 2


def theorem_threshold(n: int, alpha: int) -> Fraction:
    """Return (n^2 + n)/8 + (alpha n - alpha^2)/2."""
    return Fraction(n * n + n, 8) + Fraction(alpha * n - alpha * alpha, 2)


def f_a_non_increasing(a: Fraction, b: Fraction, alpha: int) -> bool:
    """Sweep integer x over [a - alpha, a] and check f_A never increases."""
    start = math.ceil(a - alpha)
    stop = math.floor(a)
    values = [f_a(Fraction(x), a, b, alpha) for x in range(max(start, 0), stop + 1)]
    return all(later <= earlier for earlier, later in zip(values, values[1:]))


@dataclass
class BoundReport:
    """Evaluations of f_A, f_B and the final edge bound."""

    n: int
    k: Fraction
    alpha_count: int
    a: Fraction
    b: Fraction
    fa_at_max: Fraction
    fb_at_max: Fraction
    closed_form: Fraction
    final_bound: Fraction
    threshold: Fraction
    m_a: int | None = None
    m_b: int | None = None
    fa_value: Fraction | None = None
    fb_value: Fraction | None = None
    part_bound_a: Fraction | None = None
    part_bound_b: Fraction | None = None
    e_g: int | None = None
    e_gprime: int | None = None
    double_edges_ok: bool | None = None
    verdict: BoundVerdict | None = None

    @property
    def identity_holds(self) -> bool:
        """Return True if f_A and f_B at their maxima equal the closed form."""
        return self.fa_at_max == self.closed_form == self.fb_at_max

    @property
    def exceeds_threshold(self) -> bool | None:
        """Return True if e(G) is above the theorem's edge threshold."""
        return None if self.e_g is None else self.e_g > self.threshold

    def to_dict(self) -> dict[str, Any]:
        """Serialize with rationals as "num/den" strings."""
        def opt(value: Fraction | None) -> str | None:
            return None if value is None else format_fraction(value)

        return {
            "n": self.n,
            "k": format_fraction(self.k),
            "alpha_count": self.alpha_count,
            "a": format_fraction(self.a),
            "b": format_fraction(self.b),
            "fa_at_max": format_fraction(self.fa_at_max),
            "fb_at_max": format_fraction(self.fb_at_max),
            "closed_form": format_fraction(self.closed_form),
            "identity_holds": self.identity_holds,
            "final_bound": format_fraction(self.final_bound),
            "threshold": format_fraction(self.threshold),
            "m_a": self.m_a,
            "m_b": self.m_b,
            "fa_value": opt(self.fa_value),
            "fb_value": opt(self.fb_value),
            "part_bound_a": opt(self.part_bound_a),
            "part_bound_b": opt(self.part_bound_b),
            "e_g": self.e_g,
            "e_gprime": self.e_gprime,
            "double_edges_ok": self.double_edges_ok,
            "exceeds_threshold": self.exceeds_threshold,
            "verdict": self.verdict.value if self.verdict else None,
        }


def edge_bound(
    n: int,
    k: Fraction | int | str,
    alpha_count: int,
    m_a: int | None = None,
    m_b: int | None = None,
    a: Fraction | int | None = None,
    b: Fraction | int | None = None,
    e_g: int | None = None,
    e_gprime: int | None = None,
) -> BoundReport:
    """Evaluate f_A, f_B and the final bound exactly.

    m_A must lie in [a - alpha, a] and m_B in [b - alpha, b], the range forced
    by |I| + |L| <= alpha.
    """
    k = as_fraction(k)
    if n < 0 or k < 0 or alpha_count < 0:
        raise InvalidParameterError(f"Need non-negative n, k, alpha; got {n}, {k}, {alpha_count}")
    half = Fraction(n, 2)
    a = half + k if a is None else as_fraction(a)
    b = half - k if b is None else as_fraction(b)
    if a + b != n or a != half + k or b < 0:
        raise InvalidParameterError(f"Need a = n/2 + k and a + b = n; got a={a} b={b} n={n} k={k}")
    for name, m, size in (("m_A", m_a, a), ("m_B", m_b, b)):
        if m is not None and not size - alpha_count <= m <= size:
            raise InvalidParameterError(
                f"{name}={m} outside [{size - alpha_count}, {size}]",
                detail={name: m, "low": format_fraction(size - alpha_count)},
            )

    fa_max = f_a(a - alpha_count, a, b, alpha_count)
    fb_max = f_b(b - alpha_count, a, b, alpha_count)
    closed = closed_form_bound(n, k, alpha_count)
    report = BoundReport(
        n=n,
        k=k,
        alpha_count=alpha_count,
        a=a,
        b=b,
        fa_at_max=fa_max,
        fb_at_max=fb_max,
        closed_form=closed,
        final_bound=closed,
        threshold=theorem_threshold(n, alpha_count),
        m_a=m_a,
        m_b=m_b,
        e_g=e_g,
        e_gprime=e_gprime,
    )
    if m_a is not None:
        report.fa_value = f_a(Fraction(m_a), a, b, alpha_count)
        report.part_bound_a = report.fa_value - (alpha_count - (a - m_a)) ** 2
    if m_b is not None:
        report.fb_value = f_b(Fraction(m_b), a, b, alpha_count)
        report.part_bound_b = report.fb_value - (alpha_count - (b - m_b)) ** 2
    if e_gprime is not None and report.fa_value is not None and report.fb_value is not None:
        report.double_edges_ok = 2 * e_gprime <= report.fa_value + report.fb_value
    if e_g is not None:
        holds = e_g <= report.final_bound
        report.verdict = BoundVerdict.BOUND_HOLDS if holds else BoundVerdict.BOUND_FAILS
    if not report.identity_holds:
        raise RtlabError("Closed form disagrees with f_A/f_B at their maxima", report.to_dict())
    return report


# Orchestration


@dataclass
class PipelineRun:
    """Everything a pipeline run produced."""

    config: PipelineConfig
    n: int
    alpha_count: int
    alpha_exact: bool
    k4_free: bool
    core: CoreResult | None
    core_vertices: list[int]
    first: FirstPair
    second: SecondPair
    certificate: PartitionCertificate
    symmetrization: SymmetrizationResult
    bound: BoundReport
    claims: ClaimRecorder

    @property
    def split(self) -> IlmSplit:
        """Return the I/L/M split."""
        return self.symmetrization.split

    @property
    def gprime(self) -> Graph:
        """Return the symmetrized graph G'."""
        return self.symmetrization.gprime

    def to_dict(self) -> dict[str, Any]:
        """Serialize for the experiment report."""
        return {
            "n": self.n,
            "alpha_count": self.alpha_count,
            "alpha_exact": self.alpha_exact,
            "k4_free": self.k4_free,
            "core": self.core.to_dict() if self.core else None,
            "core_vertices": list(self.core_vertices),
            "first_pair": {
                "eps": format_fraction(self.first.eps),
                "delta": format_fraction(self.first.delta),
                "trace": self.first.trace.to_dict(),
            },
            "second_pair": {
                "eps": format_fraction(self.second.eps),
                "delta": format_fraction(self.second.delta),
                "trace": self.second.trace.to_dict(),
            },
            "certificate": self.certificate.to_dict(),
            "split": self.split.to_dict(),
            "e_gprime": self.gprime.edge_total,
            "bound": self.bound.to_dict(),
            "claims_passed": self.claims.passed,
            "claims_failed": self.claims.failed,
        }


def _reduce_to_core(
    g: Graph, alpha: int, cfg: PipelineConfig, claims: ClaimRecorder
) -> tuple[Graph, CoreResult, list[int]]:
    """Run the core extraction and return G[V1] relabelled."""
    try:
        core = extract_min_degree_core(g, alpha)
    except NoCoreError as err:
        if cfg.claim_mode == ClaimMode.ASSERT:
            raise
        _LOGGER.warning("No core (%s); peeling without the edge inequality", err.reason)
        core = peel_min_degree(g, alpha)
    if not core.v1:
        raise PreconditionError("Peeling removed every vertex")
    claims.record(
        "core_size",
        2 * core.n1 * core.n1 > alpha * g.n,
        n1=core.n1,
        alpha=alpha,
        n=g.n,
    )
    claims.record("core_edges", core.inequality_margin > 0, margin=core.inequality_margin)
    claims.record("core_min_degree", 4 * core.min_degree >= core.n1, min_degree=core.min_degree)
    sub, index = induced_subgraph(g, core.v1)
    if induced_edge_count(g, core.v1) != sub.edge_total:
        raise RtlabError("Induced core graph lost edges")
    core_alpha = alpha if cfg.alpha_count is not None else resolve_alpha(sub, cfg)[0]
    self_bound = check_core_self_bound(core, core_alpha)
    claims.record(
        "core_self_bound", self_bound.holds, edges=self_bound.edges, bound=self_bound.bound
    )
    return sub, core, sorted(index, key=index.__getitem__)


def run_pipeline(g: Graph, cfg: PipelineConfig) -> PipelineRun:
    """Run steps 1 to 5 and the closing bound on g.

    If the minimum degree is below n/4 the run continues on the core; all
    sets are then indices of the relabelled core graph. In diagnose mode no
    claim failure stops the run.
    """
    claims = ClaimRecorder(cfg.claim_mode)
    alpha, alpha_exact = resolve_alpha(g, cfg)
    k4_free = find_k4(g) is None
    _LOGGER.info("Pipeline on n=%d e=%d alpha=%d (exact=%s)", g.n, g.edge_total, alpha, alpha_exact)
    claims.record(
        "small_alpha",
        alpha * cfg.nu.denominator**3 < g.n * cfg.nu.numerator**3,
        informational=True,
        alpha=alpha,
        n=g.n,
    )

    core = None
    core_vertices = list(range(g.n))
    work = g
    if 4 * g.min_degree() < g.n:
        work, core, core_vertices = _reduce_to_core(g, alpha, cfg, claims)
        if cfg.alpha_count is None:
            alpha, alpha_exact = resolve_alpha(work, cfg)
    work_cfg = dataclasses.replace(cfg, alpha_count=alpha)

    first = step1_first_pair(work, work_cfg, claims)
    a2, _ = step2_prune_A(work, first.b1, first.a1, work_cfg, claims)
    second = step3_second_pair(work, a2, work_cfg, claims)
    cert = step4_partition(work, first, a2, second, work_cfg, claims)
    sym = step5_symmetrize(work, cert, work_cfg, claims)

    a_side, b_side = cert.a, cert.b
    m_a, m_b = len(sym.split.m_a), len(sym.split.m_b)
    if len(a_side) < len(b_side):
        a_side, b_side, m_a, m_b = b_side, a_side, m_b, m_a
    a, b = len(a_side), len(b_side)
    in_domain = a - alpha <= m_a <= a and b - alpha <= m_b <= b
    claims.record("rest_domain", in_domain, applicable=k4_free, m_a=m_a, m_b=m_b, a=a, b=b)
    bound = edge_bound(
        work.n,
        cert.k,
        alpha,
        m_a=m_a if in_domain else None,
        m_b=m_b if in_domain else None,
        a=a,
        b=b,
        e_g=work.edge_total,
        e_gprime=sym.gprime.edge_total,
    )
    if bound.double_edges_ok is not None:
        claims.record("double_edge_bound", bound.double_edges_ok, applicable=k4_free)
    claims.record(
        "edge_bound",
        bound.verdict == BoundVerdict.BOUND_HOLDS,
        applicable=k4_free,
        e_g=work.edge_total,
        bound=bound.final_bound,
    )
    _LOGGER.info(
        "Pipeline done: %d claims held, %d failed; verdict %s",
        claims.passed,
        claims.failed,
        bound.verdict.value if bound.verdict else None,
    )
    return PipelineRun(
        config=work_cfg,
        n=g.n,
        alpha_count=alpha,
        alpha_exact=alpha_exact,
        k4_free=k4_free,
        core=core,
        core_vertices=core_vertices,
        first=first,
        second=second,
        certificate=cert,
        symmetrization=sym,
        bound=bound,
        claims=claims,
    )
