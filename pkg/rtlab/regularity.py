"""One-sided (eps-plus) regularity checks for rtlab."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations, islice
from math import comb
from typing import Any

import numpy as np

from .const import (
    CONVEXITY_SIDE_LIMIT,
    DEFAULT_ENUMERATION_LIMIT,
    ENUMERATION_CHUNK,
    MAX_DESCENT_ROUNDS,
)
from .core.exceptions import (
    EnumerationLimitError,
    InvalidParameterError,
    PreconditionError,
    RtlabError,
)
from .core.models import (
    BipartitePair,
    Graph,
    VertexSet,
    as_fraction,
    bipartite_density,
    count_edges_between,
    format_fraction,
    mask_from_bits,
)
from .generators import make_rng

_LOGGER = logging.getLogger(__name__)


class RegularityStatus(Enum):
    """Verdict of a regularity check."""

    REGULAR = "regular"
    IRREGULAR = "irregular"
    UNREFUTED = "unrefuted"


class CheckMethod(Enum):
    """How a verdict was reached."""

    EXACT = "exact"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class IrregularityWitness:
    """Subsets A' of A and B' of B whose density is below eps."""

    a_prime: VertexSet
    b_prime: VertexSet
    edges: int

    @property
    def density(self) -> Fraction:
        """Return d(A', B')."""
        return Fraction(self.edges, len(self.a_prime) * len(self.b_prime))

    def to_dict(self) -> dict[str, Any]:
        """Serialize for traces and reports."""
        return {
            "a_prime": self.a_prime.to_list(),
            "b_prime": self.b_prime.to_list(),
            "edges": self.edges,
            "density": format_fraction(self.density),
        }

    @classmethod
    def from_dict(cls, n: int, data: dict[str, Any]) -> IrregularityWitness:
        """Create from a serialized mapping."""
        return cls(
            a_prime=VertexSet.from_dict(n, data["a_prime"]),
            b_prime=VertexSet.from_dict(n, data["b_prime"]),
            edges=int(data["edges"]),
        )


@dataclass
class EpsPlusVerdict:
    """Outcome of an eps-plus regularity test."""

    status: RegularityStatus
    method: CheckMethod
    witness: IrregularityWitness | None = None
    samples_used: int = 0

    @property
    def irregular(self) -> bool:
        """Return True if a witness of irregularity was found."""
        return self.status == RegularityStatus.IRREGULAR

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "status": self.status.value,
            "method": self.method.value,
            "witness": self.witness.to_dict() if self.witness else None,
            "samples_used": self.samples_used,
        }


def min_subset_size(eps: Fraction, size: int) -> int:
    """Return ceil(eps * size), the smallest admissible subset size."""
    eps = as_fraction(eps)
    return -(-eps.numerator * size // eps.denominator)


def _check_eps(eps: Fraction) -> Fraction:
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")
    return eps


def _check_sides(p: BipartitePair) -> None:
    if not p.a_side or not p.b_side:
        raise PreconditionError("Regularity of a pair with an empty side")


def _below(edges: int, k: int, m: int, eps: Fraction) -> bool:
    """Return True if edges / (k m) < eps."""
    return edges * eps.denominator < eps.numerator * k * m


def verify_witness(p: BipartitePair, witness: IrregularityWitness, eps: Fraction) -> bool:
    """Re-score a witness from the graph and check all three conditions."""
    eps = as_fraction(eps)
    a_prime, b_prime = witness.a_prime, witness.b_prime
    if not (a_prime.issubset(p.a_side) and b_prime.issubset(p.b_side)):
        return False
    if len(a_prime) < min_subset_size(eps, p.a) or len(b_prime) < min_subset_size(eps, p.b):
        return False
    edges = count_edges_between(p.graph, a_prime, b_prime)
    if edges != witness.edges:
        return False
    return _below(edges, len(a_prime), len(b_prime), eps)


def pair_block(p: BipartitePair) -> tuple[list[int], list[int], np.ndarray]:
    """Return the side vertex lists and the |A| x |B| 0/1 adjacency block."""
    a_list = p.a_side.to_list()
    b_list = p.b_side.to_list()
    b_index = np.asarray(b_list, dtype=np.intp)
    block = np.zeros((len(a_list), len(b_list)), dtype=np.int64)
    for row, v in enumerate(a_list):
        block[row] = mask_from_bits(p.graph.adj[v], p.graph.n)[b_index]
    return a_list, b_list, block


def _smallest(values: np.ndarray, count: int) -> np.ndarray:
    """Indices of the `count` smallest values, ties to the lowest index."""
    return np.sort(np.argsort(values, kind="stable")[:count])


def _scan_minimum(
    block: np.ndarray, k: int, m: int, eps: Fraction
) -> tuple[tuple[int, ...], np.ndarray] | None:
    """Scan k-subsets of the block's rows in lexicographic order.

    For each row subset the sparsest m columns are the m smallest column sums.
    Returns the first (rows, columns) pair below eps, or None.
    """
    rows = block.shape[0]
    subsets = combinations(range(rows), k)
    while True:
        chunk = list(islice(subsets, ENUMERATION_CHUNK))
        if not chunk:
            return None
        index = np.asarray(chunk, dtype=np.intp)
        sums = block[index].sum(axis=1)
        least = np.sort(sums, axis=1)[:, :m].sum(axis=1)
        hits = np.flatnonzero(least * eps.denominator < eps.numerator * k * m)
        if hits.size:
            first = int(hits[0])
            return chunk[first], _smallest(sums[first], m)


def is_eps_plus_regular_exact(
    p: BipartitePair, eps: Fraction, limit: int = DEFAULT_ENUMERATION_LIMIT
) -> EpsPlusVerdict:
    """Decide eps-plus regularity by scanning all minimum-size subset pairs.

    Only subsets of size exactly ceil(eps|A|) and ceil(eps|B|) are examined:
    a larger subset's density is an average of minimum-size densities.
    """
    eps = _check_eps(eps)
    _check_sides(p)
    k = min_subset_size(eps, p.a)
    m = min_subset_size(eps, p.b)
    a_subsets = comb(p.a, k)
    b_subsets = comb(p.b, m)
    required = a_subsets * b_subsets
    if required > limit:
        raise EnumerationLimitError(required, limit)

    a_list, b_list, block = pair_block(p)
    flipped = b_subsets < a_subsets
    if flipped:
        found = _scan_minimum(block.T, m, k, eps)
    else:
        found = _scan_minimum(block, k, m, eps)

    if found is None:
        _LOGGER.debug("Pair %dx%d is eps-plus regular for eps=%s", p.a, p.b, eps)
        return EpsPlusVerdict(RegularityStatus.REGULAR, CheckMethod.EXACT, samples_used=required)

    rows, cols = found
    if flipped:
        a_pick = [a_list[i] for i in cols]
        b_pick = [b_list[j] for j in rows]
    else:
        a_pick = [a_list[i] for i in rows]
        b_pick = [b_list[j] for j in cols]
    witness = _make_witness(p, a_pick, b_pick)
    if not verify_witness(p, witness, eps):
        raise RtlabError("Exact checker produced an invalid witness", detail=witness.to_dict())
    return EpsPlusVerdict(
        RegularityStatus.IRREGULAR, CheckMethod.EXACT, witness, samples_used=required
    )


def _make_witness(p: BipartitePair, a_pick: list[int], b_pick: list[int]) -> IrregularityWitness:
    n = p.graph.n
    a_prime = VertexSet.from_iterable(n, a_pick)
    b_prime = VertexSet.from_iterable(n, b_pick)
    return IrregularityWitness(a_prime, b_prime, count_edges_between(p.graph, a_prime, b_prime))


def best_response_descent(
    block: np.ndarray,
    k: int,
    m: int,
    rows: np.ndarray | None = None,
    cols: np.ndarray | None = None,
    rounds: int = MAX_DESCENT_ROUNDS,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Alternate sparsest-column and sparsest-row choices until e(X, Y) stops falling.

    Starts from a row subset or a column subset; returns (rows, columns, edges).
    """
    if rows is None:
        if cols is None:
            raise InvalidParameterError("Descent needs a starting row or column subset")
        rows = _smallest(block[:, cols].sum(axis=1), k)
    cols = _smallest(block[rows].sum(axis=0), m)
    edges = int(block[np.ix_(rows, cols)].sum())
    for _ in range(rounds):
        new_rows = _smallest(block[:, cols].sum(axis=1), k)
        new_cols = _smallest(block[new_rows].sum(axis=0), m)
        new_edges = int(block[np.ix_(new_rows, new_cols)].sum())
        if new_edges >= edges:
            break
        rows, cols, edges = new_rows, new_cols, new_edges
    return rows, cols, edges


def refute_eps_plus_sampled(
    p: BipartitePair, eps: Fraction, trials: int, seed: int
) -> EpsPlusVerdict:
    """Search for an irregularity witness from `trials` seeded random starts.

    Each trial runs two descents: one from a random k-subset of A, one from
    the non-neighbourhood of a single A vertex (vertices drawn from a seeded
    permutation). Never certifies regularity: the answer is Irregular with a
    verified witness, or Unrefuted.
    """
    eps = _check_eps(eps)
    _check_sides(p)
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    k = min_subset_size(eps, p.a)
    m = min_subset_size(eps, p.b)
    a_list, b_list, block = pair_block(p)
    rng = make_rng(seed, 0)
    row_order = rng.permutation(p.a)

    for trial in range(trials):
        start = np.sort(rng.choice(p.a, size=k, replace=False))
        seed_row = int(row_order[trial % p.a])
        candidates = (
            best_response_descent(block, k, m, rows=start),
            best_response_descent(block, k, m, cols=_smallest(block[seed_row], m)),
        )
        rows, cols, edges = min(candidates, key=lambda found: found[2])
        if _below(edges, k, m, eps):
            witness = _make_witness(p, [a_list[i] for i in rows], [b_list[j] for j in cols])
            if not verify_witness(p, witness, eps):
                raise RtlabError(
                    "Sampled refuter produced an invalid witness", detail=witness.to_dict()
                )
            return EpsPlusVerdict(
                RegularityStatus.IRREGULAR, CheckMethod.SAMPLED, witness, samples_used=trial + 1
            )

    _LOGGER.debug("Pair %dx%d unrefuted after %d trials (eps=%s)", p.a, p.b, trials, eps)
    return EpsPlusVerdict(RegularityStatus.UNREFUTED, CheckMethod.SAMPLED, samples_used=trials)


@dataclass(frozen=True)
class ConvexityCheck:
    """Both sides of the density averaging identity."""

    lhs: Fraction
    rhs: Fraction

    @property
    def equal(self) -> bool:
        """Return True if both sides agree exactly."""
        return self.lhs == self.rhs

    def to_dict(self) -> dict[str, Any]:
        """Serialize for reports."""
        return {
            "lhs": format_fraction(self.lhs),
            "rhs": format_fraction(self.rhs),
            "equal": self.equal,
        }


def _subset_matrix(size: int, k: int) -> np.ndarray:
    """Return the C(size, k) x size 0/1 incidence matrix of all k-subsets."""
    subsets = list(combinations(range(size), k))
    matrix = np.zeros((len(subsets), size), dtype=np.int64)
    for row, subset in enumerate(subsets):
        matrix[row, list(subset)] = 1
    return matrix


def convexity_identity_check(
    p: BipartitePair, k: int, m: int, side_limit: int = CONVEXITY_SIDE_LIMIT
) -> ConvexityCheck:
    """Compare d(A, B) with the mean of d(X, Y) over all k-subsets X and m-subsets Y."""
    _check_sides(p)
    if not 1 <= k <= p.a or not 1 <= m <= p.b:
        raise InvalidParameterError(f"Need 1 <= k <= {p.a} and 1 <= m <= {p.b}, got k={k} m={m}")
    if max(p.a, p.b) > side_limit:
        raise PreconditionError(
            f"Convexity enumeration needs sides <= {side_limit}, got {p.a} and {p.b}"
        )
    _, _, block = pair_block(p)
    subset_a = _subset_matrix(p.a, k)
    subset_b = _subset_matrix(p.b, m)
    per_pair = subset_a @ block @ subset_b.T
    rhs = Fraction(int(per_pair.sum()), k * m * subset_a.shape[0] * subset_b.shape[0])
    return ConvexityCheck(bipartite_density(p), rhs)


def split_pair(g: Graph, split: int) -> BipartitePair:
    """Return the pair A = {0..split-1}, B = {split..n-1}."""
    if not 0 < split < g.n:
        raise InvalidParameterError(f"Split must lie in 1..{g.n - 1}, got {split}")
    return BipartitePair(
        g, VertexSet.from_range(g.n, 0, split), VertexSet.from_range(g.n, split, g.n)
    )
