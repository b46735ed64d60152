"""Isolating-weight synthesis and verification.

Provides skew-symmetric circulation weights (found by seeded random
search and verified exhaustively), prime-residue weight families for
newly inserted edges, field-concatenated weight combination, and
exhaustive isolation checks used by the engines and the test suite.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import networkx as nx

from .errors import (
    BudgetExhaustedError,
    FamilyFailureError,
    MagnitudeError,
    OracleScaleError,
    ParameterError,
    SearchFailureError,
)
from .fieldcore import PrimeTuple, primes_up_to
from .oracles import oracle_enumerate_pms

CYCLE_VERTEX_CAP = 12
WORD_BOUND = 1 << 63
DEFAULT_MAX_TUPLES = 256
DEFAULT_SEARCH_ATTEMPTS = 512


def _pow2_at_least(v: int) -> int:
    return 1 << max(0, (v - 1).bit_length())


@dataclass(frozen=True)
class WeightAssignment:
    """Nonnegative integer weights on a fixed edge set."""

    weights: dict
    max_weight: int

    def __post_init__(self):
        for e, w in self.weights.items():
            if not 0 <= w <= self.max_weight:
                raise ParameterError(f"weight {w} of {e} outside [0, {self.max_weight}]")

    def __call__(self, e) -> int:
        # deleted / unknown edges carry weight 0 by convention
        return self.weights.get(e, 0)

    @property
    def domain(self) -> frozenset:
        return frozenset(self.weights)


@dataclass(frozen=True)
class SkewWeights:
    """Skew-symmetric weights: w(u, v) = -w(v, u), stored on u < v pairs."""

    pair_weights: dict
    bound: int

    def __post_init__(self):
        for (u, v), w in self.pair_weights.items():
            if not u < v:
                raise ParameterError(f"pair {(u, v)} not in canonical u < v order")
            if abs(w) > self.bound:
                raise ParameterError(f"|{w}| exceeds bound {self.bound}")

    def __call__(self, u, v) -> int:
        if u < v:
            return self.pair_weights.get((u, v), 0)
        return -self.pair_weights.get((v, u), 0)

    def restrict(self, pairs) -> "SkewWeights":
        keep = {tuple(sorted(p)) for p in pairs}
        return SkewWeights(
            {p: w for p, w in self.pair_weights.items() if p in keep}, self.bound
        )


@dataclass(frozen=True)
class WeightFamily:
    """An indexed list of candidate assignments over one shared domain."""

    candidates: tuple
    provenance: tuple  # PrimeTuple per candidate, or None for ad-hoc families
    max_weight: int

    def __post_init__(self):
        if not self.candidates:
            raise ParameterError("a weight family must be non-empty")
        if len(self.provenance) != len(self.candidates):
            raise ParameterError("provenance length mismatch")
        dom = self.candidates[0].domain
        for c in self.candidates:
            if c.domain != dom:
                raise ParameterError("candidates must share one domain")
            if c.max_weight != self.max_weight:
                raise ParameterError("candidates must share the max_weight bound")

    def __len__(self) -> int:
        return len(self.candidates)

    def relabel(self, mapping) -> "WeightFamily":
        """Rekey every candidate's domain through the given edge mapping."""
        cands = tuple(
            WeightAssignment({mapping[e]: w for e, w in c.weights.items()}, c.max_weight)
            for c in self.candidates
        )
        return WeightFamily(cands, self.provenance, self.max_weight)


@dataclass(frozen=True)
class ConcatWeights:
    """Field-concatenated weights ⟨w₁, …, w_k⟩ with per-field bases.

    The realized weight folds high field first: ((w₁·b₂ + w₂)·b₃ + w₃)….
    Each base must exceed capacity times the field's maximum so that sums
    of up to `capacity` edge weights decode without carries between fields.
    """

    fields: tuple  # k dicts, edge -> field value, highest-order first
    bases: tuple  # k-1 bases, for fields 2..k
    capacity: int

    def __post_init__(self):
        if len(self.bases) != len(self.fields) - 1:
            raise ParameterError("need one base per field after the first")
        for f, b in zip(self.fields[1:], self.bases):
            top = max(f.values(), default=0)
            if b <= self.capacity * top:
                raise MagnitudeError(
                    f"base {b} cannot hold {self.capacity} summands of {top}"
                )

    def realize(self, e) -> int:
        acc = self.fields[0].get(e, 0)
        for f, b in zip(self.fields[1:], self.bases):
            acc = acc * b + f.get(e, 0)
        return acc

    def decode(self, value: int) -> tuple:
        """Split a sum of realized weights back into per-field sums."""
        out = []
        for b in reversed(self.bases):
            value, low = divmod(value, b)
            out.append(low)
        out.append(value)
        return tuple(reversed(out))

    @property
    def domain(self) -> frozenset:
        dom = set()
        for f in self.fields:
            dom |= set(f)
        return frozenset(dom)


def _simple_cycles_at_least_3(n: int, pairs) -> list:
    """Simple directed cycles on >= 3 vertices of the symmetric closure."""
    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    for u, v in pairs:
        g.add_edge(u, v)
        g.add_edge(v, u)
    return [c for c in nx.simple_cycles(g) if len(c) >= 3]


def verify_nonzero_circulation(n: int, pairs, w: SkewWeights) -> bool:
    """True iff every simple directed cycle (>= 3 vertices) sums non-zero.

    `pairs` are the undirected edges; both orientations are considered.
    Two-step traversals of one undirected edge always cancel under
    skew-symmetry and are not cycles.
    """
    if n > CYCLE_VERTEX_CAP:
        raise OracleScaleError(f"{n} vertices above the cycle-enumeration cap")
    for cycle in _simple_cycles_at_least_3(n, pairs):
        total = sum(
            w(cycle[i], cycle[(i + 1) % len(cycle)]) for i in range(len(cycle))
        )
        if total == 0:
            return False
    return True


def circulation_search(
    n: int,
    pairs,
    weight_bound: int,
    seed: int,
    attempts: int = DEFAULT_SEARCH_ATTEMPTS,
) -> SkewWeights:
    """Seeded random search for verified non-zero-circulation weights."""
    if weight_bound < 1:
        raise ParameterError("weight_bound must be >= 1")
    canon = sorted({tuple(sorted(p)) for p in pairs})
    rng = random.Random(seed)
    choices = [w for w in range(-weight_bound, weight_bound + 1) if w != 0]
    for _ in range(attempts):
        cand = SkewWeights({p: rng.choice(choices) for p in canon}, weight_bound)
        if verify_nonzero_circulation(n, canon, cand):
            return cand
    raise SearchFailureError(
        f"no non-zero circulation with bound {weight_bound} in {attempts} tries"
    )


def fgt_weight_family(
    num_new_edges: int,
    prime_bits: int,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> WeightFamily:
    """Prime-residue weight family for edges indexed 1..N.

    Candidate weights concatenate the fields (2^j mod p_i) over an
    ordered tuple of l = max(1, ceil(log2 N)) distinct primes below
    2**prime_bits, with per-field base B_f = largest_prime * N + 1.
    Tuples are enumerated lexicographically, capped at max_tuples.
    """
    N = num_new_edges
    if N < 1:
        raise ParameterError("need at least one new edge")
    ell = max(1, (N - 1).bit_length())
    primes = primes_up_to((1 << prime_bits) - 1)
    if len(primes) < ell:
        raise BudgetExhaustedError(
            f"need {ell} primes below 2**{prime_bits}, found {len(primes)}"
        )
    base = primes[-1] * N + 1
    max_w = base**ell - 1
    cands = []
    prov = []
    for tup in itertools.islice(itertools.permutations(primes, ell), max_tuples):
        weights = {}
        for j in range(1, N + 1):
            acc = 0
            for p in tup:
                acc = acc * base + pow(2, j, p)
            weights[j] = acc
        cands.append(WeightAssignment(weights, max_w))
        prov.append(PrimeTuple(tup, prime_bits))
    return WeightFamily(tuple(cands), tuple(prov), max_w)


def combine_with_old(
    old: WeightAssignment, fam: WeightFamily, base: int | None = None
) -> WeightFamily:
    """Shift every family candidate above the old weights: B*cand + old.

    Old-edge weights are identical across candidates; new edges carry
    B times their candidate weight.  The default base is the smallest
    power of two exceeding max-old-weight times the edge count.
    """
    if old.domain & fam.candidates[0].domain:
        raise ParameterError("old and new edge domains must be disjoint")
    max_old = max(old.weights.values(), default=0)
    if base is None:
        base = _pow2_at_least(max_old * max(1, len(old.weights)) + 1)
    elif base <= max_old * len(old.weights):
        raise ParameterError("base must exceed max old weight times edge count")
    max_w = base * fam.max_weight + max_old
    if max_w >= WORD_BOUND:
        raise MagnitudeError(f"combined bound {max_w} overflows 63 bits")
    cands = tuple(
        WeightAssignment(
            {**old.weights, **{e: base * w for e, w in c.weights.items()}}, max_w
        )
        for c in fam.candidates
    )
    return WeightFamily(cands, fam.provenance, max_w)


def verify_isolating_pm(left, right, edges, w: WeightAssignment) -> bool:
    """True iff the minimum-weight perfect matching is unique.

    Vacuously true when the graph has no perfect matching.  Exhaustive;
    subject to the enumeration oracle's vertex cap.
    """
    pms = oracle_enumerate_pms(left, right, edges, {e: w(e) for e in edges})
    if not pms:
        return True
    best = min(weight for _, weight in pms)
    return sum(1 for _, weight in pms if weight == best) == 1


def select_isolating(left, right, edges, fam: WeightFamily) -> int:
    """Index of the first family candidate isolating a min-weight PM."""
    for idx, cand in enumerate(fam.candidates):
        if verify_isolating_pm(left, right, edges, cand):
            return idx
    raise FamilyFailureError(f"no isolating candidate among {len(fam)}")


def distance_weights(
    w_len: WeightAssignment,
    fam: WeightFamily | None,
    u: SkewWeights,
    edges,
    capacity: int,
    offset: int | None = None,
    bases: tuple[int, int] | None = None,
) -> list[ConcatWeights]:
    """Per-candidate three-field distance weights ⟨w, w', u⟩.

    Top field: the original edge length.  Middle: the candidate's weight
    (zero on old edges; `fam` may be None when there are no new edges).
    Low: the circulation weight made nonnegative by a per-edge offset,
    which defaults to the circulation bound.  Bases default to the
    smallest powers of two holding `capacity` summands of each field;
    an explicit (mid_base, low_base) pair pins them across rebuilds.
    """
    if offset is None:
        offset = u.bound
    if offset < u.bound:
        raise ParameterError("offset must cover the circulation bound")
    edges = list(edges)
    low = {}
    for a, b in edges:
        val = offset + u(a, b)
        if val < 0:
            raise MagnitudeError("offset leaves a negative low field")
        low[(a, b)] = val
    low_base = (
        bases[1] if bases else _pow2_at_least(capacity * max(low.values(), default=0) + 1)
    )
    candidates = fam.candidates if fam is not None else (WeightAssignment({}, 0),)
    out = []
    for cand in candidates:
        mid = {e: cand(e) for e in edges}
        mid_base = (
            bases[0]
            if bases
            else _pow2_at_least(capacity * max(mid.values(), default=0) + 1)
        )
        top = {e: w_len(e) for e in edges}
        out.append(
            ConcatWeights(
                fields=(top, mid, low),
                bases=(mid_base, low_base),
                capacity=capacity,
            )
        )
    return out
