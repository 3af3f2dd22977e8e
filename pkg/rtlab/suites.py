"""Acceptance suites for rtlab, run concurrently on a worker pool."""
from __future__ import annotations

import asyncio
import json
import logging
import os
import time
from collections import Counter
from collections.abc import Callable, Sequence
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Any

import numpy as np

from .const import (
    BE_DEFAULT_FAR,
    BE_DEFAULT_NEAR,
    DEFAULT_ENUMERATION_LIMIT,
    ENV_THREADS,
    STOPPING_REFUTER_TRIALS,
    SUITE_ORACLE_NODES,
)
from .core.exceptions import InvalidParameterError, RtlabError
from .core.graph_io import atomic_write_text
from .core.models import BipartitePair, Graph, VertexSet, format_fraction, induced_subgraph
from .extraction import (
    RefuterBudget,
    StopReason,
    extract_min_degree_core,
    extract_regular_pair,
    iteration_bound,
)
from .generators import (
    GenKind,
    GenSpec,
    calibrate_bollobas_erdos,
    gen_bipartite_min_degree,
    gen_bollobas_erdos,
    gen_gnp,
    gen_k4_free,
    generate,
    make_rng,
)
from .oracles import (
    CheckStatus,
    OracleBudget,
    check_edges_vs_alpha,
    check_edge_degree_sum,
    find_k4,
    independence_number,
)
from .pipeline import (
    ClaimMode,
    PipelineConfig,
    PipelineRun,
    closed_form_bound,
    edge_bound,
    f_a,
    f_a_non_increasing,
    f_b,
    run_pipeline,
)
from .regularity import (
    convexity_identity_check,
    is_eps_plus_regular_exact,
    min_subset_size,
    pair_block,
    refute_eps_plus_sampled,
)
from .report import ExperimentReport, report_digest

_LOGGER = logging.getLogger(__name__)

MASK_CHUNK = 1 << 15
BE_NEAR_GRID = (0.8, BE_DEFAULT_NEAR, 1.0, 1.1, 1.3)
BE_FAR_GRID = (1.5, 1.6, BE_DEFAULT_FAR, 1.7, 1.8)


@dataclass(frozen=True)
class SuiteOptions:
    """Instance-size caps; None keeps the acceptance sizes."""

    max_side: int | None = None
    max_n: int | None = None
    refuter_trials: int = STOPPING_REFUTER_TRIALS
    oracle_nodes: int = SUITE_ORACLE_NODES
    be_n: int = 200

    def cap(self, value: int, limit: int | None) -> int:
        """Return value clipped to limit."""
        return value if limit is None else min(value, limit)

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "max_side": self.max_side,
            "max_n": self.max_n,
            "refuter_trials": self.refuter_trials,
            "oracle_nodes": self.oracle_nodes,
            "be_n": self.be_n,
        }


@dataclass
class InstanceOutcome:
    """Result of one suite instance."""

    suite: str
    index: int
    ok: bool
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {"suite": self.suite, "index": self.index, "ok": self.ok, "detail": self.detail}


@dataclass
class SuiteResult:
    """All outcomes of one suite."""

    name: str
    outcomes: list[InstanceOutcome]
    elapsed: float = 0.0
    target: int | None = None

    @property
    def failures(self) -> list[InstanceOutcome]:
        """Return the failed instances."""
        return [outcome for outcome in self.outcomes if not outcome.ok]

    @property
    def reached(self) -> int:
        """Return the number of instances whose run got far enough to be checked."""
        return sum(1 for outcome in self.outcomes if outcome.detail.get("reached"))

    @property
    def target_met(self) -> bool:
        """Return True unless the suite needed more checked instances than it got."""
        return self.target is None or self.reached >= self.target

    @property
    def ok(self) -> bool:
        """Return True if every instance passed and the target was met."""
        return not self.failures and self.target_met

    def claim_failures(self) -> dict[str, int]:
        """Count failed claims over all instances, keyed by claim name."""
        counts = Counter(
            name for outcome in self.outcomes for name in outcome.detail.get("failed_claims", ())
        )
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        data = {
            "name": self.name,
            "instances": len(self.outcomes),
            "failures": len(self.failures),
            "ok": self.ok,
            "failed_instances": [outcome.to_dict() for outcome in self.failures],
        }
        if self.target is not None:
            data["target"] = self.target
            data["reached"] = self.reached
            data["claim_failures"] = self.claim_failures()
        return data


# Extraction guarantees and stopping-rule soundness


def _extraction_case(seed: int, index: int, options: SuiteOptions) -> dict[str, Any]:
    rng = make_rng(seed, index)
    a = options.cap(int(rng.integers(100, 2001)), options.max_side)
    b = options.cap(int(rng.integers(100, 2001)), options.max_side)
    delta = Fraction(int(rng.integers(4, 13)), 20)
    eps = delta / 6 if index % 2 == 0 else delta / 10
    p = min(Fraction(1), delta + Fraction(1, 10))
    pair = gen_bipartite_min_degree(a, b, delta, p, seed + index)
    refuter = RefuterBudget(seed=seed + index)
    out, trace = extract_regular_pair(pair, eps, delta, refuter)
    return {"a": a, "b": b, "delta": delta, "eps": eps, "pair": out, "trace": trace}


def extraction_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Re-check the four output guarantees of the regular pair extraction."""
    case = _extraction_case(seed, index, options)
    pair, trace = case["pair"], case["trace"]
    a, b, delta, eps = case["a"], case["b"], case["delta"], case["eps"]
    floor = (delta - 2 * eps) * b
    y_ok = len(pair.b_side) >= floor
    degree_ok = all(
        (pair.graph.adj[v] & pair.b_side.bits).bit_count() >= floor for v in pair.a_side
    )
    steps_ok = trace.length < iteration_bound(eps, delta)
    x_ok = len(pair.a_side) >= (eps / 2) ** trace.length * a
    return InstanceOutcome(
        "extraction",
        index,
        y_ok and degree_ok and steps_ok and x_ok,
        {
            "a": a,
            "b": b,
            "delta": format_fraction(delta),
            "eps": format_fraction(eps),
            "steps": trace.length,
            "stop_reason": trace.stop_reason.value,
            "y_size": y_ok,
            "degree": degree_ok,
            "iterations": steps_ok,
            "x_size": x_ok,
        },
    )


def stopping_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Check that pairs accepted by the stopping rule are really regular."""
    case = _extraction_case(seed, index, options)
    pair, trace, eps = case["pair"], case["trace"], case["eps"]
    detail: dict[str, Any] = {"stop_reason": trace.stop_reason.value}
    if trace.stop_reason != StopReason.STOPPING_RULE_Y:
        return InstanceOutcome("stopping", index, True, {**detail, "skipped": True})
    k = min_subset_size(eps, pair.a)
    m = min_subset_size(eps, pair.b)
    if comb(pair.a, k) * comb(pair.b, m) <= DEFAULT_ENUMERATION_LIMIT:
        verdict = is_eps_plus_regular_exact(pair, eps)
    else:
        verdict = refute_eps_plus_sampled(pair, eps, options.refuter_trials, seed + index)
    detail["check"] = verdict.to_dict()
    return InstanceOutcome("stopping", index, not verdict.irregular, detail)


# Exhaustive small-graph checks


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(n), 2))


def graph_from_mask(n: int, mask: int, pairs: Sequence[tuple[int, int]]) -> Graph:
    """Return the labelled graph whose edge i is present when bit i of mask is set."""
    rows = [0] * n
    for i, (u, v) in enumerate(pairs):
        if mask >> i & 1:
            rows[u] |= 1 << v
            rows[v] |= 1 << u
    return Graph(n, tuple(rows))


def _labelled_tasks(max_n: int) -> list[tuple[int, int, int]]:
    """Split all labelled graphs on 1..max_n vertices into (n, start, stop) mask chunks."""
    tasks = []
    for n in range(1, max_n + 1):
        total = 1 << comb(n, 2)
        tasks.extend(
            (n, start, min(start + MASK_CHUNK, total)) for start in range(0, total, MASK_CHUNK)
        )
    return tasks


def observation_tasks(options: SuiteOptions) -> list[tuple[int, int, int]]:
    """Return the mask chunks of the exhaustive edge-inequality suite."""
    return _labelled_tasks(options.cap(7, options.max_n))


def observation_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Check deg(u) + deg(v) <= n + alpha on every edge of K4-free graphs in one chunk."""
    n, start, stop = observation_tasks(options)[index]
    pairs = _pairs(n)
    full = VertexSet.full(n)
    checked = 0
    edges = 0
    for mask in range(start, stop):
        g = graph_from_mask(n, mask, pairs)
        if find_k4(g) is not None:
            continue
        alpha = independence_number(g).value
        result = check_edge_degree_sum(g, full, alpha)
        checked += 1
        edges += result.edges_checked
        if result.status == CheckStatus.VIOLATION:
            return InstanceOutcome(
                "observation", index, False, {"n": n, "mask": mask, **result.to_dict()}
            )
    return InstanceOutcome(
        "observation", index, True, {"n": n, "graphs": checked, "edges": edges}
    )


def odd_cycle_free_tasks(options: SuiteOptions) -> list[tuple[Any, ...]]:
    """Return the tasks of the exhaustive e <= alpha^2 suite.

    On at most 8 vertices every odd cycle has length 3, 5 or 7, so the
    graphs on 8 vertices are enumerated as bipartite graphs, one task per
    two-colouring with vertex 0 on the first side.
    """
    max_n = options.cap(8, options.max_n)
    tasks: list[tuple[Any, ...]] = [("labelled", *task) for task in _labelled_tasks(min(max_n, 7))]
    if max_n >= 8:
        for size in range(1, 8):
            for rest in combinations(range(1, 8), size - 1):
                tasks.append(("split", (0, *rest)))
    tasks.append(("tight",))
    return tasks


def _edge_alpha_outcome(index: int, g: Graph, label: dict[str, Any]) -> InstanceOutcome | None:
    result = check_edges_vs_alpha(g)
    if result.status in (CheckStatus.VIOLATION, CheckStatus.UNDECIDED):
        return InstanceOutcome("odd-cycle-free", index, False, {**label, **result.to_dict()})
    return None


def odd_cycle_free_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Check e(F) <= alpha(F)^2 on every odd-cycle-restricted graph of one task."""
    task = odd_cycle_free_tasks(options)[index]
    if task[0] == "tight":
        g = Graph.from_edges(8, ((u, v) for u in range(4) for v in range(4, 8)))
        result = check_edges_vs_alpha(g)
        tight = result.status == CheckStatus.OK and result.edges == result.alpha_lower**2 == 16
        return InstanceOutcome("odd-cycle-free", index, tight, {"tight": result.to_dict()})

    checked = 0
    if task[0] == "labelled":
        _, n, start, stop = task
        pairs = _pairs(n)
        for mask in range(start, stop):
            g = graph_from_mask(n, mask, pairs)
            failed = _edge_alpha_outcome(index, g, {"n": n, "mask": mask})
            if failed:
                return failed
            checked += 1
        return InstanceOutcome("odd-cycle-free", index, True, {"n": n, "graphs": checked})

    side = task[1]
    other = [v for v in range(8) if v not in side]
    cross = [(u, v) for u in side for v in other]
    for mask in range(1 << len(cross)):
        g = Graph.from_edges(8, (cross[i] for i in range(len(cross)) if mask >> i & 1))
        failed = _edge_alpha_outcome(index, g, {"n": 8, "side": list(side), "mask": mask})
        if failed:
            return failed
        checked += 1
    return InstanceOutcome(
        "odd-cycle-free", index, True, {"n": 8, "side": list(side), "graphs": checked}
    )


# Regularity checks


def _random_pair(rng: np.random.Generator, max_side: int) -> BipartitePair:
    a = int(rng.integers(1, max_side + 1))
    b = int(rng.integers(1, max_side + 1))
    p = Fraction(int(rng.integers(0, 11)), 10)
    return gen_bipartite_min_degree(a, b, Fraction(0), p, int(rng.integers(0, 2**31)))


def convexity_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Compare d(A, B) with the subset-average density for every (k, m)."""
    pair = _random_pair(make_rng(seed, index), options.cap(8, options.max_side))
    for k in range(1, pair.a + 1):
        for m in range(1, pair.b + 1):
            check = convexity_identity_check(pair, k, m)
            if not check.equal:
                return InstanceOutcome(
                    "convexity", index, False, {"k": k, "m": m, **check.to_dict()}
                )
    return InstanceOutcome("convexity", index, True, {"a": pair.a, "b": pair.b})


def naive_eps_plus_irregular(pair: BipartitePair, eps: Fraction) -> bool:
    """Scan every subset pair of admissible size; True if one has density below eps."""
    _, _, block = pair_block(pair)
    k = min_subset_size(eps, pair.a)
    m = min_subset_size(eps, pair.b)
    b_masks = np.array(
        [[(mask >> j) & 1 for j in range(pair.b)] for mask in range(1 << pair.b)], dtype=np.int64
    )
    b_sizes = b_masks.sum(axis=1)
    for mask in range(1, 1 << pair.a):
        rows = [i for i in range(pair.a) if mask >> i & 1]
        if len(rows) < k:
            continue
        edges = b_masks @ block[rows].sum(axis=0)
        admissible = b_sizes >= m
        low = edges * eps.denominator < eps.numerator * len(rows) * b_sizes
        if np.any(admissible & low):
            return True
    return False


EQUIVALENCE_EPS = (Fraction(1, 4), Fraction(1, 3), Fraction(1, 2))


def exact_equivalence_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Compare the minimum-size exact checker with the all-subsets scan."""
    rng = make_rng(seed, index)
    pair = _random_pair(rng, options.cap(10, options.max_side))
    eps = EQUIVALENCE_EPS[index % len(EQUIVALENCE_EPS)]
    fast = is_eps_plus_regular_exact(pair, eps).irregular
    slow = naive_eps_plus_irregular(pair, eps)
    return InstanceOutcome(
        "exact-equivalence",
        index,
        fast == slow,
        {"a": pair.a, "b": pair.b, "eps": format_fraction(eps), "fast": fast, "naive": slow},
    )


# Pipeline checks


SYMMETRIZATION_CLAIMS = (
    "symmetrized_edges",
    "symmetrized_k4_free",
    "light_independent_a",
    "light_independent_b",
    "rest_independence_a",
    "rest_independence_b",
    "rest_edges_a",
    "rest_edges_b",
)
SYMMETRIZATION_TARGET = 200
SYMMETRIZATION_REACH_CAP = 4
EDGE_GAIN_PREMISES = tuple(
    f"{claim}_{side}"
    for claim in ("light_independent", "high_isolated", "light_loss", "light_gain")
    for side in ("a", "b")
)


def _triangle_free_parts(claims: dict[str, Any]) -> bool:
    return all(
        "3" not in claims[f"short_odd_cycles_{side}"].detail.get("cycles", {})
        for side in ("a", "b")
    )


def unsupported_failures(run: PipelineRun) -> list[str]:
    """Return the checks on G' that failed although the claims they rest on held.

    For K4-free G, G' is K4-free once both parts are triangle-free and no I or L
    vertex keeps an inside edge. e(G') >= e(G) once the I/L side claims hold and
    both parts have at least 14 alpha vertices.
    """
    claims = run.claims.results
    alpha = run.alpha_count
    unsupported = []
    k4_premises = run.k4_free and _triangle_free_parts(claims) and all(
        claims[f"light_cut_off_{side}"].holds for side in ("a", "b")
    )
    if k4_premises and not claims["symmetrized_k4_free"].holds:
        unsupported.append("symmetrized_k4_free")
    cert = run.certificate
    edge_premises = all(claims[name].holds for name in EDGE_GAIN_PREMISES) and min(
        len(cert.a), len(cert.b)
    ) >= 14 * alpha
    if edge_premises and not claims["symmetrized_edges"].holds:
        unsupported.append("symmetrized_edges")
    return unsupported


def symmetrization_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Run the pipeline on a K4-free instance and check the symmetrized graph."""
    rng = make_rng(seed, index)
    nu = Fraction(1, 20) if index % 2 == 0 else Fraction(1, 16)
    if index % 4 < 2:
        n = options.cap(int(rng.integers(20, 61)), options.max_n)
        g = gen_k4_free(n, Fraction(int(rng.integers(3, 7)), 10), seed + index)
        source = "k4_free_greedy"
    else:
        n = options.cap(2 * int(rng.integers(15, 41)), options.max_n)
        n -= n % 2
        g = gen_bollobas_erdos(n, seed=seed + index)
        source = "bollobas_erdos"
    detail: dict[str, Any] = {"source": source, "n": n, "nu": format_fraction(nu)}
    try:
        cfg = PipelineConfig(
            nu=nu,
            seed=seed + index,
            claim_mode=ClaimMode.DIAGNOSE,
            oracle=OracleBudget(node_limit=options.oracle_nodes),
        )
        run = run_pipeline(g, cfg)
    except RtlabError as err:
        _LOGGER.info("Instance %d did not reach step 5: %s", index, err.message)
        return InstanceOutcome(
            "symmetrization", index, True, {**detail, "reached": False, "reason": err.message}
        )
    claims = run.claims.results
    failed = [name for name in SYMMETRIZATION_CLAIMS if name in claims and not claims[name].holds]
    unsupported = unsupported_failures(run)
    return InstanceOutcome(
        "symmetrization",
        index,
        not unsupported,
        {
            **detail,
            "reached": True,
            "e_g": run.bound.e_g,
            "e_gprime": run.bound.e_gprime,
            "failed_claims": failed,
            "unsupported": unsupported,
        },
    )


def algebra_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Check the closed form of the final bound, and f_A monotonicity for small n."""
    rng = make_rng(seed, index)
    sweep = index < 20
    high = 2000 if sweep else 10**6
    n = 2 * int(rng.integers(50, high // 2 + 1)) if sweep else int(rng.integers(100, high + 1))
    alpha = int(rng.integers(1, n // 100 + 1))
    k = int(rng.integers(0, 3 * alpha + 1))
    report = edge_bound(n, k, alpha)
    a, b = report.a, report.b
    exact = (
        f_a(a - alpha, a, b, alpha) == closed_form_bound(n, Fraction(k), alpha)
        == f_b(b - alpha, a, b, alpha)
    )
    monotone = f_a_non_increasing(a, b, alpha) if sweep else True
    return InstanceOutcome(
        "algebra",
        index,
        exact and monotone,
        {"n": n, "k": k, "alpha": alpha, "identity": exact, "monotone": monotone},
    )


def core_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Extract the core of a dense core with a sparse fringe and re-verify it."""
    rng = make_rng(seed, index)
    c = options.cap(int(rng.integers(30, 61)), options.max_n)
    fringe = int(rng.integers(1, c // 4 + 1))
    dense = gen_gnp(c, Fraction(9, 10), seed + index)
    rows = list(dense.adj) + [0] * fringe
    for v in range(c, c + fringe):
        for u in rng.choice(c, size=int(rng.integers(1, 3)), replace=False).tolist():
            rows[v] |= 1 << u
            rows[u] |= 1 << v
    g = Graph(c + fringe, tuple(rows))
    alpha = independence_number(g).value
    core = extract_min_degree_core(g, alpha)
    sub, _ = induced_subgraph(g, core.v1)
    n1 = core.n1
    degree_ok = 4 * sub.min_degree() >= n1
    threshold = Fraction(n1 * n1 + n1, 8) + Fraction(alpha * g.n - alpha * alpha, 2)
    edges_ok = sub.edge_total > threshold
    size_ok = 2 * n1 * n1 > alpha * g.n
    return InstanceOutcome(
        "core",
        index,
        degree_ok and edges_ok and size_ok,
        {
            "n": g.n,
            "n1": n1,
            "alpha": alpha,
            "min_degree": degree_ok,
            "edges": edges_ok,
            "size": size_ok,
        },
    )


# Determinism


def _determinism_report(seed: int, index: int, options: SuiteOptions) -> ExperimentReport:
    kind = index % 5
    if kind == 0:
        spec = GenSpec(GenKind.GNP, {"n": 30, "p": Fraction(1, 3)}, seed + index)
        g = generate(spec)
        return ExperimentReport("gen", results={"graph": g.to_dict()}, gen_spec=spec)
    if kind == 1:
        spec = GenSpec(GenKind.K4_FREE_GREEDY, {"n": 24, "target_density": "2/5"}, seed + index)
        g = generate(spec)
        return ExperimentReport("gen", results={"graph": g.to_dict()}, gen_spec=spec)
    if kind == 2:
        pair = gen_bipartite_min_degree(40, 40, Fraction(2, 5), Fraction(1, 2), seed + index)
        _, trace = extract_regular_pair(
            pair, Fraction(1, 15), Fraction(2, 5), RefuterBudget(seed=seed)
        )
        return ExperimentReport(
            "extract pair", results={"trace": trace.to_dict()}, input_hash=pair.graph.digest()
        )
    if kind == 3:
        pair = gen_bipartite_min_degree(60, 60, Fraction(0), Fraction(1, 2), seed + index)
        verdict = refute_eps_plus_sampled(pair, Fraction(1, 10), 8, seed + index)
        return ExperimentReport(
            "regular refute", results={"verdict": verdict.to_dict()}, input_hash=pair.graph.digest()
        )
    g = gen_k4_free(options.cap(24, options.max_n), Fraction(1, 2), seed + index)
    cfg = PipelineConfig(
        nu=Fraction(1, 20), seed=seed + index, oracle=OracleBudget(node_limit=options.oracle_nodes)
    )
    try:
        results = run_pipeline(g, cfg).to_dict()
    except RtlabError as err:
        results = {"error": err.message}
    return ExperimentReport(
        "pipeline run", config=cfg.to_dict(), results=results, input_hash=g.digest()
    )


def determinism_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Run a seeded command twice and compare report digests."""
    first = report_digest(_determinism_report(seed, index, options))
    second = report_digest(_determinism_report(seed, index, options))
    return InstanceOutcome("determinism", index, first == second, {"digest": first})


def be_calibrate_instance(seed: int, index: int, options: SuiteOptions) -> InstanceOutcome:
    """Measure one geometry grid point of the two-class sphere construction."""
    near = BE_NEAR_GRID[index // len(BE_FAR_GRID)]
    far = BE_FAR_GRID[index % len(BE_FAR_GRID)]
    (point,) = calibrate_bollobas_erdos(
        options.be_n, 4, seed, (near,), (far,), OracleBudget(node_limit=options.oracle_nodes)
    )
    return InstanceOutcome("be-calibrate", index, True, point.to_dict())


@dataclass(frozen=True)
class Suite:
    """A named acceptance suite."""

    name: str
    run_instance: Callable[[int, int, SuiteOptions], InstanceOutcome]
    default_instances: Callable[[SuiteOptions], int]
    description: str
    reach_cap: int | None = None


def _fixed(count: int) -> Callable[[SuiteOptions], int]:
    return lambda options: count


SUITES: dict[str, Suite] = {
    suite.name: suite
    for suite in (
        Suite("extraction", extraction_instance, _fixed(100), "Regular pair extraction guarantees"),
        Suite("stopping", stopping_instance, _fixed(100), "Stopping-rule soundness"),
        Suite(
            "observation",
            observation_instance,
            lambda options: len(observation_tasks(options)),
            "Edge-degree inequality on all small K4-free graphs",
        ),
        Suite(
            "odd-cycle-free",
            odd_cycle_free_instance,
            lambda options: len(odd_cycle_free_tasks(options)),
            "e <= alpha^2 on all small graphs without C3, C5, C7",
        ),
        Suite("convexity", convexity_instance, _fixed(500), "Density averaging identity"),
        Suite(
            "exact-equivalence",
            exact_equivalence_instance,
            _fixed(200),
            "Exact checker against the all-subsets scan",
        ),
        Suite(
            "symmetrization",
            symmetrization_instance,
            _fixed(SYMMETRIZATION_TARGET),
            "Symmetrized graph checks on K4-free inputs reaching step 5",
            reach_cap=SYMMETRIZATION_REACH_CAP,
        ),
        Suite("algebra", algebra_instance, _fixed(1000), "Closing edge-bound algebra"),
        Suite("core", core_instance, _fixed(100), "Minimum-degree core extraction"),
        Suite("determinism", determinism_instance, _fixed(20), "Seeded re-runs are identical"),
        Suite(
            "be-calibrate",
            be_calibrate_instance,
            _fixed(len(BE_NEAR_GRID) * len(BE_FAR_GRID)),
            "Geometry sweep of the two-class sphere construction",
        ),
    )
}


def worker_count() -> int:
    """Return the worker cap from RTLAB_THREADS, or the CPU count."""
    raw = os.environ.get(ENV_THREADS)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        workers = int(raw)
    except ValueError as err:
        raise InvalidParameterError(
            f"{ENV_THREADS} must be a positive integer, got {raw!r}"
        ) from err
    if workers < 1:
        raise InvalidParameterError(f"{ENV_THREADS} must be a positive integer, got {raw!r}")
    return workers


def resolve_suites(names: Sequence[str]) -> list[Suite]:
    """Map suite names (or "all") to suites."""
    if "all" in names:
        return list(SUITES.values())
    unknown = [name for name in names if name not in SUITES]
    if unknown:
        raise InvalidParameterError(f"Unknown suites: {', '.join(unknown)}")
    return [SUITES[name] for name in names]


class SuiteRunner:
    """Runs suite instances concurrently on an executor pool."""

    def __init__(
        self,
        seed: int = 0,
        options: SuiteOptions | None = None,
        workers: int | None = None,
        out_dir: str | Path | None = None,
        processes: bool = True,
    ) -> None:
        """Initialize the runner."""
        self.seed = seed
        self.options = options or SuiteOptions()
        self.workers = workers or worker_count()
        self.out_dir = Path(out_dir) if out_dir else None
        self._processes = processes
        self._instances_run = 0
        self._instances_failed = 0
        self._errors = 0
        self._last_elapsed: float = 0.0

    def _executor(self) -> Executor:
        if self._processes:
            return ProcessPoolExecutor(max_workers=self.workers)
        return ThreadPoolExecutor(max_workers=self.workers)

    async def async_run(
        self, names: Sequence[str], instances: int | None = None
    ) -> list[SuiteResult]:
        """Run the named suites, each with `instances` instances or its default."""
        suites = resolve_suites(names)
        start = time.perf_counter()
        with self._executor() as executor:
            results = [
                await self._async_run_suite(suite, instances, executor) for suite in suites
            ]
        self._last_elapsed = time.perf_counter() - start
        return results

    async def _async_run_batch(
        self, suite: Suite, indices: range, executor: Executor
    ) -> list[InstanceOutcome]:
        loop = asyncio.get_running_loop()
        futures = [
            loop.run_in_executor(executor, suite.run_instance, self.seed, index, self.options)
            for index in indices
        ]
        raw = await asyncio.gather(*futures, return_exceptions=True)

        outcomes = []
        for index, item in zip(indices, raw, strict=True):
            if isinstance(item, BaseException):
                self._errors += 1
                _LOGGER.error("Suite %s instance %d raised: %s", suite.name, index, item)
                item = InstanceOutcome(
                    suite.name, index, False, {"error": f"{type(item).__name__}: {item}"}
                )
            outcomes.append(item)
            self._write_outcome(item)
        return outcomes

    async def _async_run_suite(
        self, suite: Suite, instances: int | None, executor: Executor
    ) -> SuiteResult:
        available = suite.default_instances(self.options)
        count = available if instances is None else min(instances, available)
        _LOGGER.info("Suite %s: %d instances on %d workers", suite.name, count, self.workers)
        start = time.perf_counter()
        outcomes = await self._async_run_batch(suite, range(count), executor)
        target = None
        if suite.reach_cap is not None:
            # Keep drawing instances until `count` of them reach the checked stage.
            target = count
            limit = count * suite.reach_cap
            reached = sum(1 for outcome in outcomes if outcome.detail.get("reached"))
            while reached < target and len(outcomes) < limit:
                batch = range(len(outcomes), min(limit, len(outcomes) + target - reached))
                more = await self._async_run_batch(suite, batch, executor)
                reached += sum(1 for outcome in more if outcome.detail.get("reached"))
                outcomes.extend(more)

        result = SuiteResult(suite.name, outcomes, time.perf_counter() - start, target)
        self._instances_run += len(outcomes)
        self._instances_failed += len(result.failures)
        if not result.target_met:
            _LOGGER.warning(
                "Suite %s: only %d of %d instances reached the checked stage in %d tries",
                suite.name,
                result.reached,
                target,
                len(outcomes),
            )
        if result.ok:
            _LOGGER.info(
                "Suite %s passed (%d instances, %.1fs)", suite.name, len(outcomes), result.elapsed
            )
        elif result.failures:
            _LOGGER.warning(
                "Suite %s: %d of %d instances failed",
                suite.name,
                len(result.failures),
                len(outcomes),
            )
        return result

    def _write_outcome(self, outcome: InstanceOutcome) -> None:
        if self.out_dir is None:
            return
        path = self.out_dir / outcome.suite / f"{outcome.index:05d}.json"
        atomic_write_text(path, json.dumps(outcome.to_dict(), sort_keys=True, indent=2) + "\n")

    def get_diagnostics(self) -> dict[str, Any]:
        """Return runner diagnostics."""
        return {
            "seed": self.seed,
            "workers": self.workers,
            "processes": self._processes,
            "options": self.options.to_dict(),
            "instances_run": self._instances_run,
            "instances_failed": self._instances_failed,
            "errors": self._errors,
            "last_elapsed": self._last_elapsed,
        }


def run_suites(
    names: Sequence[str],
    instances: int | None = None,
    seed: int = 0,
    options: SuiteOptions | None = None,
    out_dir: str | Path | None = None,
) -> tuple[list[SuiteResult], dict[str, Any]]:
    """Run suites to completion and return the results with runner diagnostics."""
    runner = SuiteRunner(seed=seed, options=options, out_dir=out_dir)
    results = asyncio.run(runner.async_run(names, instances))
    return results, runner.get_diagnostics()
