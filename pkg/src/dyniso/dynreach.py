"""Dynamic reachability and shortest distances under edge batches.

The adjacency matrix A_w carries the monomial x^{w*(u, v)} per edge,
where w* concatenates ⟨length, family weight, circulation⟩ fields.  Each
weight candidate keeps a truncated inverse C ≈ (I - A_w)^-1 = Σ A_w^i
over GF(2)[x]/x^{m+1}; a non-zero C[s, t] certifies reachability and the
min-degree term's top field decodes the distance.  Candidate answers are
one-sided (they can only overstate distance), so queries aggregate with
OR / min.  Insertions within an epoch draw isolating weights from a
prime-residue family; an epoch scheduler rebuilds from scratch when the
insertion budget or the batch budget is exhausted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import IsolationFailureError, ParameterError, SearchFailureError
from .fieldcore import primes_up_to
from .isoweights import (
    ConcatWeights,
    SkewWeights,
    WeightAssignment,
    circulation_search,
    distance_weights,
    fgt_weight_family,
)
from .polyseries import (
    PolyMatrix,
    TruncPoly,
    decompose_change,
    min_degree_term,
    polymat_inv_small,
    woodbury_update,
)

INF = math.inf

DEFAULT_LENGTH_CAP = 4
DEFAULT_NEW_EDGE_CAP = 2
DEFAULT_PRIME_BITS = 2
DEFAULT_U_BOUND = 1
DEFAULT_EPOCH_LIMIT = 8
DEFAULT_MAX_TUPLES = 8
SIZE_CAP = 12


def _pow2_at_least(v: int) -> int:
    return 1 << max(0, (v - 1).bit_length())


@dataclass
class _Candidate:
    cw: ConcatWeights
    C: PolyMatrix


@dataclass
class ReachDistState:
    """Dynamic distance structure; mutate only through apply_edge_batch."""

    n: int
    lengths: dict  # live edges, (u, v) -> length
    old_edges: set  # edges present at the epoch start
    new_edges: list  # epoch insertions, in insertion order
    base_u: SkewWeights
    base_cw: ConcatWeights
    C_base: PolyMatrix  # inverse for the old-edge graph under base_cw
    candidates: list  # _Candidate per family member (or the base alone)
    m: int
    epoch_age: int
    seed: int
    epoch: int
    length_cap: int
    new_edge_cap: int
    prime_bits: int
    u_bound: int
    epoch_limit: int
    max_tuples: int


def _low_offset(n: int, u_bound: int) -> int:
    """Per-edge low-field offset: dominates the total circulation range so
    paths of different edge counts never tie in the low field; equal-count
    ties are then broken by the non-zero circulation."""
    return 2 * n * u_bound + 1


def _epoch_params(n, length_cap, new_edge_cap, prime_bits, u_bound):
    """Fixed field bases and truncation degree for one epoch's caps."""
    low_max = _low_offset(n, u_bound) + u_bound
    low_base = _pow2_at_least(n * low_max + 1)
    # the family's per-edge weights stay below B_f^l with fields < p_max
    p_max = max(primes_up_to((1 << prime_bits) - 1))
    ell = max(1, (new_edge_cap - 1).bit_length())
    b_f = p_max * new_edge_cap + 1
    mid_max = sum((p_max - 1) * b_f**i for i in range(ell))
    mid_base = _pow2_at_least(n * mid_max + 1)
    realize_max = (length_cap * mid_base + mid_max) * low_base + low_max
    m = n * realize_max + 1
    return low_base, mid_base, m


def _edge_monomial(cw: ConcatWeights, e, m: int) -> int:
    w = cw.realize(e)
    if w < 1 or w > m:
        raise ParameterError(f"edge weight {w} outside [1, {m}]")
    return 1 << w


def _matrix_for(state: ReachDistState, cw: ConcatWeights, edges) -> PolyMatrix:
    """I - A_w over GF(2): identity plus edge monomials."""
    M = PolyMatrix.identity(state.n, state.m)
    for e in edges:
        u, v = e
        M.data[u][v] ^= _edge_monomial(cw, e, state.m)
    return M


def _rebuild_candidates(state: ReachDistState):
    """Re-derive the per-candidate inverses by replaying the epoch's
    insertions through one Woodbury update each, from the old-edge base."""
    if not state.new_edges:
        state.candidates = [_Candidate(state.base_cw, state.C_base)]
        return
    fam = fgt_weight_family(
        len(state.new_edges), state.prime_bits, state.max_tuples
    ).relabel({j + 1: e for j, e in enumerate(state.new_edges)})
    w_len = WeightAssignment(
        dict(state.lengths), max(state.lengths.values(), default=1)
    )
    cws = distance_weights(
        w_len,
        fam,
        state.base_u,
        list(state.lengths),
        capacity=state.n,
        offset=_low_offset(state.n, state.base_u.bound),
        bases=state.base_cw.bases,
    )
    state.candidates = []
    for cw in cws:
        delta = [
            (u, v, _edge_monomial(cw, (u, v), state.m))
            for (u, v) in state.new_edges
        ]
        chg = decompose_change(delta, state.n, state.m)
        state.candidates.append(_Candidate(cw, woodbury_update(state.C_base, chg)))


def init_reachdist(
    n: int,
    lengths: dict,
    seed: int,
    length_cap: int = DEFAULT_LENGTH_CAP,
    new_edge_cap: int = DEFAULT_NEW_EDGE_CAP,
    prime_bits: int = DEFAULT_PRIME_BITS,
    u_bound: int = DEFAULT_U_BOUND,
    epoch_limit: int = DEFAULT_EPOCH_LIMIT,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> ReachDistState:
    """Build the structure for a directed graph with positive lengths."""
    if n > SIZE_CAP:
        raise ParameterError(f"{n} vertices above the size cap {SIZE_CAP}")
    lengths = {(int(u), int(v)): int(w) for (u, v), w in lengths.items()}
    for (u, v), w in lengths.items():
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ParameterError(f"bad edge {(u, v)}")
        if not 1 <= w <= length_cap:
            raise ParameterError(f"length {w} outside [1, {length_cap}]")
    # dense graphs may need a wider circulation range; escalate the bound
    base_u = None
    bound = u_bound
    while base_u is None:
        try:
            base_u = (
                circulation_search(n, list(lengths), bound, seed)
                if lengths
                else SkewWeights({}, bound)
            )
        except SearchFailureError:
            if bound >= 16 * u_bound:
                raise
            bound *= 2
    low_base, mid_base, m = _epoch_params(
        n, length_cap, new_edge_cap, prime_bits, bound
    )
    u_bound = bound
    w_len = WeightAssignment(dict(lengths), length_cap)
    offset = _low_offset(n, bound)
    base_cw = ConcatWeights(
        fields=({e: w for e, w in lengths.items()}, {},
                {e: offset + base_u(*e) for e in lengths}),
        bases=(mid_base, low_base),
        capacity=n,
    )
    C_base = polymat_inv_small(_matrix_for_init(n, m, base_cw, lengths))
    state = ReachDistState(
        n=n, lengths=dict(lengths), old_edges=set(lengths), new_edges=[],
        base_u=base_u, base_cw=base_cw, C_base=C_base,
        candidates=[], m=m, epoch_age=0, seed=seed, epoch=0,
        length_cap=length_cap, new_edge_cap=new_edge_cap,
        prime_bits=prime_bits, u_bound=u_bound, epoch_limit=epoch_limit,
        max_tuples=max_tuples,
    )
    state.candidates = [_Candidate(base_cw, C_base)]
    return state


def _matrix_for_init(n, m, cw, edges) -> PolyMatrix:
    M = PolyMatrix.identity(n, m)
    for e in edges:
        u, v = e
        w = cw.realize(e)
        if not 1 <= w <= m:
            raise ParameterError(f"edge weight {w} outside [1, {m}]")
        M.data[u][v] ^= 1 << w
    return M


def apply_edge_batch(state: ReachDistState, ops) -> ReachDistState:
    """Apply a batch of ("ins", u, v, length) / ("del", u, v) operations.

    Old-edge deletions update the shared base inverse; insertions extend
    the epoch's new-edge set, and the candidate list is re-derived by
    replay.  The epoch is rebuilt from scratch when either the insertion
    budget or the batch budget would be exceeded.
    """
    parsed = []
    for op in ops:
        if op[0] == "ins":
            _, u, v, w = op
            parsed.append(("ins", (int(u), int(v)), int(w)))
        elif op[0] == "del":
            _, u, v = op
            parsed.append(("del", (int(u), int(v)), None))
        else:
            raise ParameterError(f"unknown op {op[0]!r}")

    base_deltas = []
    new_set = list(state.new_edges)
    for kind, e, w in parsed:
        if kind == "del" or e in state.lengths:
            if e in state.lengths:
                if e in state.old_edges:
                    base_deltas.append(
                        (e[0], e[1], _edge_monomial(state.base_cw, e, state.m))
                    )
                    state.old_edges.discard(e)
                else:
                    new_set.remove(e)
                del state.lengths[e]
            elif kind == "del":
                raise ParameterError(f"cannot delete absent edge {e}")
        if kind == "ins":
            if not 1 <= w <= state.length_cap:
                raise ParameterError(f"length {w} outside [1, {state.length_cap}]")
            state.lengths[e] = w
            new_set.append(e)

    state.new_edges = new_set
    state.epoch_age += 1
    if len(new_set) > state.new_edge_cap or state.epoch_age > state.epoch_limit:
        return _rebuild_epoch(state)

    if base_deltas:
        chg = decompose_change(base_deltas, state.n, state.m)
        state.C_base = woodbury_update(state.C_base, chg)
    _rebuild_candidates(state)
    return state


def _rebuild_epoch(state: ReachDistState) -> ReachDistState:
    fresh = init_reachdist(
        state.n, state.lengths, state.seed + state.epoch + 1,
        length_cap=state.length_cap, new_edge_cap=state.new_edge_cap,
        prime_bits=state.prime_bits, u_bound=state.u_bound,
        epoch_limit=state.epoch_limit, max_tuples=state.max_tuples,
    )
    fresh.epoch = state.epoch + 1
    state.__dict__.update(fresh.__dict__)
    return state


def _decode_min(cand: _Candidate, entry: TruncPoly):
    deg, present = min_degree_term(entry)
    if not present:
        return None
    top, _, _ = cand.cw.decode(deg)
    return top


def query_reach(state: ReachDistState, s: int, t: int) -> bool:
    """True iff any candidate's C[s, t] is non-zero (one-sided, OR)."""
    return any(c.C.data[s][t] != 0 for c in state.candidates)


def query_dist(state: ReachDistState, s: int, t: int):
    """Min over candidates of the decoded top field; INF if unreachable."""
    best = INF
    for cand in state.candidates:
        top = _decode_min(cand, cand.C.entry(s, t))
        if top is not None:
            best = min(best, top)
    return best


def extract_path(state: ReachDistState, s: int, t: int) -> list:
    """A shortest s-t path as an edge list, via per-edge deletion probes.

    On a candidate achieving the overall minimum, an edge lies on the
    isolated shortest path iff removing it (one Woodbury update on a
    probe copy) raises that candidate's decoded minimum.
    """
    target = query_dist(state, s, t)
    if target == INF:
        raise IsolationFailureError(f"{t} not reachable from {s}")
    for cand in state.candidates:
        if _decode_min(cand, cand.C.entry(s, t)) != target:
            continue
        # the isolated path is the unique walk at the entry's minimum
        # degree; an edge lies on it iff its removal moves that degree
        deg0, _ = min_degree_term(cand.C.entry(s, t))
        chosen = []
        for e in state.lengths:
            delta = [(e[0], e[1], _edge_monomial(cand.cw, e, state.m))]
            chg = decompose_change(delta, state.n, state.m)
            probe = woodbury_update(cand.C, chg)
            deg, present = min_degree_term(probe.entry(*_st(s, t)))
            if not present or deg != deg0:
                chosen.append(e)
        path = _order_as_path(chosen, s, t)
        if path is not None and sum(state.lengths[e] for e in path) == target:
            return path
    raise IsolationFailureError("no candidate yields a consistent path")


def _st(s, t):
    return s, t


def _order_as_path(edges, s, t):
    """Order an edge set into a simple s-t path, or None if it is not one."""
    if s == t:
        return [] if not edges else None
    nxt = {}
    for u, v in edges:
        if u in nxt:
            return None
        nxt[u] = v
    path = []
    cur = s
    seen = set()
    while cur != t:
        if cur not in nxt or cur in seen:
            return None
        seen.add(cur)
        path.append((cur, nxt[cur]))
        cur = nxt[cur]
    return path if len(path) == len(edges) else None
