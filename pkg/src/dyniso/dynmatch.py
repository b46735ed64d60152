"""Dynamic bipartite maximum matching: determinant and rank routes.

Route A (determinant).  Each vertex v of the bipartite graph G gets a
pendant vertex t_v; the generalized Tutte matrix T of the augmented
graph has unit pendant loops, so eliminating the pendant rows by a
Schur complement leaves an n x n matrix S over GF(2)[x] with

    S[v, v] = 1 + x^(2 s_v)          (real loop or the pendant 2-cycle)
    S[u, v] = S[v, u] = x^(eta(e))   for each edge e = {u, v}

and det(T) = det(S).  Modulo 2, long cycle covers cancel in orientation
pairs, so det(S) = sum over matchings M and subsets U' of unmatched
vertices of x^(2 (eta(M) + s(U'))).  Edge weights are complemented -
eta(e) = M1 + (Wc - w'''(e)) with M1 dominating every other field - so
the matching size reads off the maximum degree of det(S): r = (W/2) div
M1.  S(0) = I, so S is always invertible over truncated series and the
Woodbury/determinant-lemma updates never meet a singular core.  Any
surviving monomial belongs to a real matching, so per-candidate decodes
never exceed the true size and candidates aggregate by max.

Route B (rank).  The weighted Tutte matrix with x_{uv} replaced by
2^(w(u, v)) mod p is skew-symmetric of rank 2 * (matching size) under
isolating weights; an AGoodState per (weight candidate, prime) maintains
that rank, and evaluation rank never exceeds the symbolic rank, so
copies aggregate by max as well.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .dynrank import AGoodState, apply_entry_batch, init_agood, split_entries
from .errors import IsolationFailureError, ParameterError, SearchFailureError
from .fieldcore import is_prime, primes_up_to
from .isoweights import SkewWeights, circulation_search, fgt_weight_family
from .polyseries import (
    PolyMatrix,
    TruncPoly,
    decompose_change,
    det_update,
    max_degree_term,
    polymat_inv_small,
    woodbury_update,
    _det_small,
)

logger = logging.getLogger(__name__)

SIZE_CAP = 12
DEFAULT_NEW_EDGE_CAP = 1
DEFAULT_PRIME_BITS = 2
DEFAULT_U_BOUND = 1
DEFAULT_EPOCH_LIMIT = 64
DEFAULT_MAX_TUPLES = 8
DEFAULT_PRIME_POOL = (1000003, 999983, 65537)


def _pow2_at_least(v: int) -> int:
    return 1 << max(0, (v - 1).bit_length())


def check_bipartite(n: int, edges) -> dict:
    """Two-color the graph; raise if an odd cycle makes it non-bipartite.

    Returns the side map for vertices incident to at least one edge.
    The matching weights orient every edge from side 0 to side 1, which
    is what makes even-cycle matching differences equal circulations.
    """
    color: dict[int, int] = {}
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for start in range(n):
        if start in color or start not in adj:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if v not in color:
                    color[v] = 1 - color[u]
                    stack.append(v)
                elif color[v] == color[u]:
                    raise ParameterError("graph is not bipartite")
    return color


def _assign_sides(side: dict, e) -> bool:
    """Extend the side map for a fresh edge; False if it needs recoloring."""
    u, v = e
    if u in side and v in side:
        return side[u] != side[v]
    if u in side:
        side[v] = 1 - side[u]
    elif v in side:
        side[u] = 1 - side[v]
    else:
        side[u], side[v] = 0, 1
    return True


@dataclass(frozen=True)
class _Layout:
    """Fixed weight-field layout for one epoch."""

    low_base: int
    mid_max: int
    wc: int  # per-edge cap of w''' = mid * low_base + low
    sp: int  # pendant field base
    m1: int  # per-matched-edge dominating unit
    m: int  # truncation degree

    @classmethod
    def for_caps(cls, n: int, u_bound: int, new_cap: int, prime_bits: int):
        r_max = n // 2
        low_max = 2 * u_bound
        low_base = _pow2_at_least(max(2, r_max * low_max + 1))
        p_max = max(primes_up_to((1 << prime_bits) - 1))
        ell = max(1, (new_cap - 1).bit_length())
        b_f = p_max * new_cap + 1
        mid_max = sum((p_max - 1) * b_f**i for i in range(ell))
        wc = mid_max * low_base + low_max
        sp = _pow2_at_least(r_max * wc + 1)
        s_total = sp * n * (n + 1) // 2
        m1 = _pow2_at_least(s_total + r_max * wc + 1)
        w_max = r_max * (m1 + wc) + s_total
        return cls(low_base=low_base, mid_max=mid_max, wc=wc, sp=sp,
                   m1=m1, m=2 * w_max + 2)

    def loop_weight(self, v: int) -> int:
        return (v + 1) * self.sp

    def eta(self, w3: int) -> int:
        if not 0 <= w3 <= self.wc:
            raise ParameterError(f"w''' value {w3} outside [0, {self.wc}]")
        return self.m1 + (self.wc - w3)


@dataclass
class _DetCandidate:
    mids: dict  # new edge -> mid-field value under this candidate
    C: PolyMatrix
    d: TruncPoly


@dataclass
class GenTutteState:
    """Route A state; mutate only through apply_edge_batch_det."""

    n: int
    edges: set
    old_edges: set
    new_edges: dict  # edge -> insertion index j (1-based within epoch)
    next_j: int
    side: dict  # vertex -> 0/1 bipartition side, fixed for the epoch
    base_u: SkewWeights
    layout: _Layout
    fam_mids: list  # per candidate: {j: mid value}
    C_base: PolyMatrix
    d_base: TruncPoly
    candidates: list  # _DetCandidate, re-derived per batch
    seed: int
    epoch: int
    epoch_age: int
    new_edge_cap: int
    prime_bits: int
    u_bound: int
    epoch_limit: int
    max_tuples: int


def _canon(u, v):
    return (u, v) if u < v else (v, u)


def _search_circulation(n, pairs, u_bound, seed):
    bound = u_bound
    while True:
        try:
            if not pairs:
                return SkewWeights({}, bound)
            return circulation_search(n, pairs, bound, seed)
        except SearchFailureError:
            if bound >= 16 * u_bound:
                raise
            bound *= 2


def _w3(state, e, mids) -> int:
    """Combined isolating weight: mid field over the circulation field.

    The circulation value is read along the side-0 -> side-1 orientation
    so that the two matchings of an even cycle differ by the cycle's
    circulation.
    """
    lay = state.layout
    u, v = e if state.side[e[0]] == 0 else (e[1], e[0])
    low = state.base_u.bound + state.base_u(u, v)
    return mids.get(e, 0) * lay.low_base + low


def _entry_delta(state: GenTutteState, e, mids) -> list:
    """Symmetric monomial delta toggling edge e's two entries."""
    u, v = e
    mono = 1 << state.layout.eta(_w3(state, e, mids))
    return [(u, v, mono), (v, u, mono)]


def _base_matrix(state: GenTutteState) -> PolyMatrix:
    lay = state.layout
    S = PolyMatrix.identity(state.n, lay.m)
    for v in range(state.n):
        S.data[v][v] ^= 1 << (2 * lay.loop_weight(v))
    for e in state.old_edges:
        for i, j, mono in _entry_delta(state, e, {}):
            S.data[i][j] ^= mono
    return S


def _rebuild_det_candidates(state: GenTutteState):
    if not state.new_edges:
        state.candidates = [_DetCandidate({}, state.C_base, state.d_base)]
        return
    state.candidates = []
    for mids_by_j in state.fam_mids:
        mids = {e: mids_by_j[j] for e, j in state.new_edges.items()}
        delta = []
        for e in state.new_edges:
            delta.extend(_entry_delta(state, e, mids))
        chg = decompose_change(delta, state.n, state.layout.m)
        d = det_update(state.d_base, state.C_base, chg)
        C = woodbury_update(state.C_base, chg)
        state.candidates.append(_DetCandidate(mids, C, d))


def build_gen_tutte(
    n: int,
    edges,
    seed: int = 0,
    new_edge_cap: int = DEFAULT_NEW_EDGE_CAP,
    prime_bits: int = DEFAULT_PRIME_BITS,
    u_bound: int = DEFAULT_U_BOUND,
    epoch_limit: int = DEFAULT_EPOCH_LIMIT,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> GenTutteState:
    """Build the determinant-route state for a bipartite graph."""
    if n > SIZE_CAP:
        raise ParameterError(f"{n} vertices above the size cap {SIZE_CAP}")
    edges = {_canon(int(u), int(v)) for u, v in edges}
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n) or u == v:
            raise ParameterError(f"bad edge {(u, v)}")
    side = check_bipartite(n, edges)
    base_u = _search_circulation(n, list(edges), u_bound, seed)
    layout = _Layout.for_caps(n, base_u.bound, new_edge_cap, prime_bits)
    fam = fgt_weight_family(new_edge_cap, prime_bits, max_tuples)
    fam_mids = [dict(c.weights) for c in fam.candidates]
    state = GenTutteState(
        n=n, edges=set(edges), old_edges=set(edges), new_edges={}, next_j=1,
        side=side, base_u=base_u, layout=layout, fam_mids=fam_mids,
        C_base=None, d_base=None, candidates=[], seed=seed, epoch=0,
        epoch_age=0, new_edge_cap=new_edge_cap, prime_bits=prime_bits,
        u_bound=u_bound, epoch_limit=epoch_limit, max_tuples=max_tuples,
    )
    S = _base_matrix(state)
    state.C_base = polymat_inv_small(S)
    state.d_base = _det_small(S)
    _rebuild_det_candidates(state)
    return state



def apply_edge_batch_det(state: GenTutteState, ops) -> GenTutteState:
    """Apply ("ins", u, v) / ("del", u, v) operations to route A."""
    base_delta = []
    for op in ops:
        kind, u, v = op[0], int(op[1]), int(op[2])
        e = _canon(u, v)
        if kind == "del":
            if e not in state.edges:
                raise ParameterError(f"cannot delete absent edge {e}")
            state.edges.discard(e)
            if e in state.old_edges:
                state.old_edges.discard(e)
                base_delta.extend(_entry_delta(state, e, {}))
            else:
                del state.new_edges[e]
        elif kind == "ins":
            if e in state.edges:
                raise ParameterError(f"edge {e} already present")
            check_bipartite(state.n, state.edges | {e})
            state.edges.add(e)
            if _assign_sides(state.side, e):
                state.new_edges[e] = state.next_j
                state.next_j += 1
            else:
                # insertion merges components with clashing colors; the
                # epoch's edge orientations are stale, force a rebuild
                state.next_j = state.new_edge_cap + 2
        else:
            raise ParameterError(f"unknown op {kind!r}")

    state.epoch_age += 1
    if state.next_j > state.new_edge_cap + 1 or state.epoch_age > state.epoch_limit:
        return _rebuild_det_epoch(state)
    if base_delta:
        chg = decompose_change(base_delta, state.n, state.layout.m)
        state.d_base = det_update(state.d_base, state.C_base, chg)
        state.C_base = woodbury_update(state.C_base, chg)
    _rebuild_det_candidates(state)
    return state


def _rebuild_det_epoch(state: GenTutteState) -> GenTutteState:
    fresh = build_gen_tutte(
        state.n, state.edges, seed=state.seed + state.epoch + 1,
        new_edge_cap=state.new_edge_cap, prime_bits=state.prime_bits,
        u_bound=state.u_bound, epoch_limit=state.epoch_limit,
        max_tuples=state.max_tuples,
    )
    fresh.epoch = state.epoch + 1
    state.__dict__.update(fresh.__dict__)
    return state


def _decode_det(state: GenTutteState, d: TruncPoly):
    """(size, min_weight, top_degree) from one candidate's determinant."""
    lay = state.layout
    deg, present = max_degree_term(d)
    if not present:
        raise IsolationFailureError("determinant vanished; T is invertible")
    if deg % 2:
        raise IsolationFailureError("odd top degree in det decode")
    half = deg // 2
    r = half // lay.m1
    rem = half - r * lay.m1
    pend = rem // lay.sp
    resid = rem % lay.sp
    min_weight = r * lay.wc - resid
    return r, min_weight, pend, deg


def query_mcm(state: GenTutteState):
    """(matching size, isolated min weight) via max over candidates."""
    best = None
    for cand in state.candidates:
        if cand.d.coeffs & 1 != 1:
            raise IsolationFailureError("determinant lost its unit term")
        r, w, pend, deg = _decode_det(state, cand.d)
        key = (r, deg)
        if best is None or key > best[0]:
            best = (key, (r, w, pend))
    r, w, pend = best[1]
    # the pendant field must be a plausible sum of the unmatched ids
    k = state.n - 2 * r
    ids = sorted(range(1, state.n + 1))
    if not (sum(ids[:k]) <= pend <= sum(ids[-k:] if k else [])):
        if k or pend:
            raise IsolationFailureError("pendant decode inconsistent with size")
    return r, w


def extract_matching(state: GenTutteState) -> list:
    """Witness matching via per-edge removal probes on a top candidate."""
    target_r, _ = query_mcm(state)
    ranked = []
    for idx, cand in enumerate(state.candidates):
        r, w, pend, deg = _decode_det(state, cand.d)
        if r == target_r:
            ranked.append((idx, cand, deg))
    for idx, cand, deg in ranked:
        chosen = []
        mids = cand.mids
        for e in sorted(state.edges):
            chg = decompose_change(
                _entry_delta(state, e, mids), state.n, state.layout.m
            )
            d_probe = det_update(cand.d, cand.C, chg)
            new_deg, present = max_degree_term(d_probe)
            if not present or new_deg != deg:
                chosen.append(e)
        used = [v for e in chosen for v in e]
        if len(chosen) == target_r and len(set(used)) == len(used):
            return chosen
        logger.debug("candidate %d probe produced a non-matching", idx)
    raise IsolationFailureError(
        f"no candidate among {len(ranked)} yields a consistent matching"
    )


# --------------------------------------------------------------------------
# Route B: weighted Tutte rank over Z_p


@dataclass
class _RankCopy:
    prime: int
    mids_by_j: dict
    state: AGoodState


@dataclass
class TutteRankState:
    """Route B state; mutate only through apply_edge_batch_rank."""

    n: int
    edges: set
    new_edges: dict  # edge -> epoch insertion index
    next_j: int
    side: dict  # vertex -> 0/1 bipartition side, fixed for the epoch
    base_u: SkewWeights
    low_base: int
    copies: list  # _RankCopy per (candidate, prime)
    prime_pool: tuple
    seed: int
    epoch: int
    new_edge_cap: int
    prime_bits: int
    u_bound: int
    max_tuples: int


def _rank_weight(st: TutteRankState, e, mids_by_j) -> int:
    u, v = e if st.side[e[0]] == 0 else (e[1], e[0])
    low = st.base_u.bound + st.base_u(u, v)
    mid = mids_by_j.get(st.new_edges.get(e, 0), 0) if e in st.new_edges else 0
    return mid * st.low_base + low


def _rank_entries(st: TutteRankState, e, mids_by_j, p, present: bool):
    u, v = e
    val = pow(2, _rank_weight(st, e, mids_by_j), p) if present else 0
    return [(u, v, val), (v, u, (-val) % p)]


def _seeded_prime(seed: int) -> int:
    rng = random.Random(seed)
    while True:
        q = rng.randrange(1 << 19, 1 << 20) | 1
        if is_prime(q):
            return q


def build_tutte_rank(
    n: int,
    edges,
    seed: int = 0,
    prime_pool=None,
    new_edge_cap: int = DEFAULT_NEW_EDGE_CAP,
    prime_bits: int = DEFAULT_PRIME_BITS,
    u_bound: int = DEFAULT_U_BOUND,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> TutteRankState:
    """Build the rank-route state for a bipartite graph."""
    if n > SIZE_CAP:
        raise ParameterError(f"{n} vertices above the size cap {SIZE_CAP}")
    edges = {_canon(int(u), int(v)) for u, v in edges}
    side = check_bipartite(n, edges)
    if prime_pool is None:
        prime_pool = DEFAULT_PRIME_POOL + (_seeded_prime(seed),)
    base_u = _search_circulation(n, list(edges), u_bound, seed)
    r_max = n // 2
    low_base = _pow2_at_least(max(2, r_max * 2 * base_u.bound + 1))
    fam = fgt_weight_family(new_edge_cap, prime_bits, max_tuples)
    st = TutteRankState(
        n=n, edges=set(edges), new_edges={}, next_j=1, side=side, base_u=base_u,
        low_base=low_base, copies=[], prime_pool=tuple(prime_pool),
        seed=seed, epoch=0, new_edge_cap=new_edge_cap,
        prime_bits=prime_bits, u_bound=u_bound, max_tuples=max_tuples,
    )
    for cand in fam.candidates:
        for p in st.prime_pool:
            B = [[0] * n for _ in range(n)]
            for e in edges:
                for i, j, val in _rank_entries(st, e, dict(cand.weights), p, True):
                    B[i][j] = val
            st.copies.append(
                _RankCopy(prime=p, mids_by_j=dict(cand.weights),
                          state=init_agood(B, p))
            )
    return st


def apply_edge_batch_rank(st: TutteRankState, ops) -> TutteRankState:
    """Apply ("ins", u, v) / ("del", u, v) operations to route B."""
    work = set(st.edges)
    for op in ops:
        kind, u, v = op[0], int(op[1]), int(op[2])
        e = _canon(u, v)
        if kind == "del":
            if e not in work:
                raise ParameterError(f"cannot delete absent edge {e}")
            work.discard(e)
        elif kind == "ins":
            if e in work:
                raise ParameterError(f"edge {e} already present")
            check_bipartite(st.n, work | {e})
            work.add(e)
        else:
            raise ParameterError(f"unknown op {kind!r}")
    # canceling ins/del pairs inside one batch net out to nothing
    parsed = [(e, e in work) for e in sorted(work ^ st.edges)]

    pending_ins = [e for e, present in parsed if present]
    needs_rebuild = st.next_j + len(pending_ins) - 1 > st.new_edge_cap
    side_probe = dict(st.side)
    for e in pending_ins:
        if not _assign_sides(side_probe, e):
            needs_rebuild = True
    if needs_rebuild:
        # budget exhausted or stale coloring: fold the ops in and restart
        for e, present in parsed:
            st.edges.discard(e) if not present else st.edges.add(e)
        return _rebuild_rank_epoch(st)

    st.side = side_probe
    for e, present in parsed:
        if present:
            st.edges.add(e)
            st.new_edges[e] = st.next_j
            st.next_j += 1
        else:
            st.edges.discard(e)
    for copy in st.copies:
        entries = []
        for e, present in parsed:
            entries.extend(_rank_entries(st, e, copy.mids_by_j, copy.prime, present))
        for batch in split_entries(entries, cap=max(4, 2 * len(parsed))):
            apply_entry_batch(copy.state, batch)
    for e, present in parsed:
        if not present:
            st.new_edges.pop(e, None)
    return st


def _rebuild_rank_epoch(st: TutteRankState) -> TutteRankState:
    fresh = build_tutte_rank(
        st.n, st.edges, seed=st.seed + st.epoch + 1,
        prime_pool=st.prime_pool, new_edge_cap=st.new_edge_cap,
        prime_bits=st.prime_bits, u_bound=st.u_bound,
        max_tuples=st.max_tuples,
    )
    fresh.epoch = st.epoch + 1
    st.__dict__.update(fresh.__dict__)
    return st


def query_mcm_rank(st: TutteRankState) -> int:
    """Max over (candidate, prime) copies of rank/2."""
    best = max(copy.state.rank() for copy in st.copies) if st.copies else 0
    if best % 2:
        logger.warning("odd Tutte rank %d; prime/candidate pool may be thin", best)
    return best // 2
