"""Dynamic matrix rank over Z_p via A-good basis maintenance.

An A-good basis B of Z_p^n has every column either in the kernel of A
or i-unique: the column of A*B has a non-zero entry in a row i where
every other column is zero.  Such rows are the column's principal
component (pc), and rank(A) equals the number of pc's.  Batched entry
changes touch few rows of A*B, and two phases of sparse column
operations restore A-goodness in O(n^2 k) work per batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BatchTooLargeError, ParameterError
from .fieldcore import FieldPrime
from .oracles import oracle_rank

DEFAULT_BATCH_CAP = 4
SMALL_PRIME_POOL = (2, 3, 5, 7, 11, 13)
EXHAUSTIVE_ROW_CAP = 4
EXHAUSTIVE_PRIME_CAP = 7

# module-level switch for the expensive per-batch invariant recheck
VERIFY_INVARIANTS = False


@dataclass(frozen=True)
class EntryBatch:
    """A batch of (row, col, new_value) entry overwrites."""

    entries: tuple
    cap: int = DEFAULT_BATCH_CAP

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        rows = {r for r, _, _ in self.entries}
        cols = {c for _, c, _ in self.entries}
        if len(rows) > self.cap or len(cols) > self.cap:
            raise BatchTooLargeError(
                f"batch touches {len(rows)} rows / {len(cols)} cols, cap {self.cap}"
            )


def split_entries(entries, cap: int = DEFAULT_BATCH_CAP) -> list[EntryBatch]:
    """Chunk an arbitrary update list into cap-respecting batches.

    Later duplicates win, matching sequential application order.
    """
    out = []
    current: list = []
    rows: set = set()
    cols: set = set()
    for r, c, v in entries:
        if len(rows | {r}) > cap or len(cols | {c}) > cap:
            out.append(EntryBatch(tuple(current), cap))
            current, rows, cols = [], set(), set()
        current.append((r, c, v))
        rows.add(r)
        cols.add(c)
    if current:
        out.append(EntryBatch(tuple(current), cap))
    return out


@dataclass
class AGoodState:
    """Mutable state of the dynamic rank structure for one prime."""

    p: int
    n: int
    A: np.ndarray  # n x n residues
    B: np.ndarray  # n x n basis columns, always invertible mod p
    M: np.ndarray  # cached A @ B mod p
    pc: np.ndarray  # per-column pc row, -1 for kernel columns
    pc_count: int

    def rank(self) -> int:
        """rank(A) = number of pc's = n - |kernel columns|."""
        return self.pc_count

    def check_invariants(self):
        """Full recheck of A-goodness; test / debug use."""
        p, n = self.p, self.n
        assert oracle_rank(self.B.tolist(), p) == n, "basis is singular"
        M = self.A @ self.B % p
        assert (M == self.M).all(), "cached product is stale"
        count = 0
        claimed = {}
        for j in range(n):
            i = int(self.pc[j])
            if i < 0:
                assert not M[:, j].any(), f"kernel column {j} is non-zero"
            else:
                count += 1
                assert M[i, j] % p != 0, f"column {j} zero at its pc row {i}"
                assert i not in claimed, f"rows {i} claimed twice"
                claimed[i] = j
        for i, j in claimed.items():
            others = [c for c in range(n) if c != j]
            assert not M[np.ix_([i], others)].any(), f"row {i} not unique to {j}"
        assert count == self.pc_count, "pc_count out of sync"
        assert self.pc_count == oracle_rank(self.A.tolist(), p), "rank mismatch"


def _inv_small(mat: np.ndarray, p: int) -> np.ndarray:
    """Inverse of a small square matrix mod p by elimination."""
    k = mat.shape[0]
    work = np.concatenate([mat % p, np.eye(k, dtype=np.int64)], axis=1)
    for col in range(k):
        piv = next(r for r in range(col, k) if work[r, col] % p)
        work[[col, piv]] = work[[piv, col]]
        work[col] = work[col] * pow(int(work[col, col]), -1, p) % p
        for r in range(k):
            if r != col and work[r, col]:
                work[r] = (work[r] - work[r, col] * work[col]) % p
    return work[:, k:]


def init_agood(A, p: FieldPrime | int) -> AGoodState:
    """Build an A-good state by full column reduction of A."""
    p = int(p)
    A = np.asarray(A, dtype=np.int64) % p
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParameterError("A must be square")
    n = A.shape[0]
    B = np.eye(n, dtype=np.int64)
    M = A.copy()
    pc = np.full(n, -1, dtype=np.int64)
    used_rows: set = set()
    col_rank = 0
    for j in range(n):
        piv = next(
            (i for i in range(n) if i not in used_rows and M[i, j] % p), None
        )
        if piv is None:
            continue
        # normalize the pivot, then clear row piv in every other column
        inv = pow(int(M[piv, j]), -1, p)
        M[:, j] = M[:, j] * inv % p
        B[:, j] = B[:, j] * inv % p
        others = [c for c in range(n) if c != j and M[piv, c] % p]
        if others:
            f = M[piv, others] % p
            M[:, others] = (M[:, others] - np.outer(M[:, j], f)) % p
            B[:, others] = (B[:, others] - np.outer(B[:, j], f)) % p
        pc[j] = piv
        used_rows.add(piv)
        col_rank += 1
    # clean any kernel columns that still hold multiples of zero rows
    state = AGoodState(p=p, n=n, A=A, B=B, M=M, pc=pc, pc_count=col_rank)
    if VERIFY_INVARIANTS:
        state.check_invariants()
    return state


class _Eliminator:
    """Incremental independence tester mod q over reduced pivot vectors."""

    def __init__(self, q: int):
        self.q = q
        self.rows: list[np.ndarray] = []
        self.pivots: list[int] = []

    def try_add(self, vec: np.ndarray) -> bool:
        """Reduce vec against the stored basis; keep and report if new."""
        q = self.q
        v = vec % q
        for piv, row in zip(self.pivots, self.rows):
            f = v[piv]
            if f:
                v = (v - f * row) % q
        nz = np.flatnonzero(v)
        if nz.size == 0:
            return False
        piv = int(nz[0])
        v = v * pow(int(v[piv]), -1, q) % q
        self.pivots.append(piv)
        self.rows.append(v)
        return True


def row_basis_small(M_sub: np.ndarray, q: int, exhaustive: bool = False):
    """Indices of a maximal independent row set of M_sub mod q.

    The default is greedy elimination (lexicographically first basis).
    The exhaustive mode checks every non-zero coefficient combination of
    every row subset and picks the lex-first maximum independent subset;
    it is capped at 4 rows and q <= 7 and must agree with elimination.
    """
    M_sub = np.asarray(M_sub, dtype=np.int64) % q
    k = M_sub.shape[0]
    if exhaustive:
        if k > EXHAUSTIVE_ROW_CAP or q > EXHAUSTIVE_PRIME_CAP:
            raise ParameterError("exhaustive row-basis mode above its caps")
        return _row_basis_exhaustive(M_sub, q)
    elim = _Eliminator(q)
    return [i for i in range(k) if elim.try_add(M_sub[i])]


def _row_basis_exhaustive(M_sub: np.ndarray, q: int):
    import itertools

    k = M_sub.shape[0]
    best: list[int] = []
    for size in range(k, 0, -1):
        found = None
        for subset in itertools.combinations(range(k), size):
            ok = True
            for coeffs in itertools.product(range(q), repeat=size):
                if not any(coeffs):
                    continue
                combo = sum(c * M_sub[i] for c, i in zip(coeffs, subset)) % q
                if not combo.any():
                    ok = False
                    break
            if ok:
                found = list(subset)
                break
        if found is not None:
            best = found
            break
    return best


def col_basis_small(M_rows: np.ndarray, q: int):
    """Greedy prefix-rank column basis: column i joins iff rank grows."""
    M_rows = np.asarray(M_rows, dtype=np.int64) % q
    elim = _Eliminator(q)
    return [j for j in range(M_rows.shape[1]) if elim.try_add(M_rows[:, j])]


def select_small_prime(M_sub: np.ndarray, p: FieldPrime | int) -> int:
    """Smallest pool prime preserving the strip's rank mod p; p if none."""
    p = int(p)
    M_sub = np.asarray(M_sub, dtype=np.int64)
    target = oracle_rank(M_sub.tolist(), p)
    for q in SMALL_PRIME_POOL:
        if q != p and oracle_rank(M_sub.tolist(), q) == target:
            return q
    return p


def combine_blocks(X11, X12, X21, X22, R, C, n: int) -> np.ndarray:
    """Assemble Y with Y[R,C]=X11, Y[R,~C]=X12, Y[~R,C]=X21, Y[~R,~C]=X22."""
    R = sorted(R)
    C = sorted(C)
    Rbar = [i for i in range(n) if i not in set(R)]
    Cbar = [j for j in range(n) if j not in set(C)]
    blocks = [
        (R, C, np.asarray(X11)),
        (R, Cbar, np.asarray(X12)),
        (Rbar, C, np.asarray(X21)),
        (Rbar, Cbar, np.asarray(X22)),
    ]
    Y = np.zeros((n, n), dtype=np.int64)
    for rows, cols, X in blocks:
        if X.shape != (len(rows), len(cols)):
            raise ParameterError(
                f"block shape {X.shape} does not fit {(len(rows), len(cols))}"
            )
        if rows and cols:
            Y[np.ix_(rows, cols)] = X
    return Y


def pc_count_delta(p_old: int, v_r0_old: int, v_r1_new: int, v_r2_new: int,
                   v_1: int) -> int:
    """New pc count from the four touched-column cardinalities."""
    return p_old - v_r0_old + v_r1_new + v_r2_new - v_1


def apply_entry_batch(state: AGoodState, batch: EntryBatch) -> AGoodState:
    """Apply a capped entry batch, restoring A-goodness in two phases."""
    p, n = state.p, state.n
    entries = [(r, c, v % p) for r, c, v in batch.entries]
    # collapse duplicates: the last write to an entry wins
    final = {}
    for r, c, v in entries:
        final[(r, c)] = v
    delta = {
        (r, c): (v - state.A[r, c]) % p for (r, c), v in final.items()
        if (v - state.A[r, c]) % p
    }
    if not delta:
        return state

    # sparse product of the entry delta with B gives the changed rows of M
    touched_rows = sorted({r for r, _ in delta})
    dM = np.zeros((len(touched_rows), n), dtype=np.int64)
    rpos = {r: a for a, r in enumerate(touched_rows)}
    for (r, c), d in delta.items():
        dM[rpos[r]] = (dM[rpos[r]] + d * state.B[c]) % p
        state.A[r, c] = (state.A[r, c] + d) % p
    R0 = [r for r in touched_rows if dM[rpos[r]].any()]
    if not R0:
        return state
    state.M[R0] = (state.M[R0] + dM[[rpos[r] for r in R0]]) % p
    R0set = set(R0)

    old_pc = state.pc.copy()
    p_old = state.pc_count

    # columns whose status may change: pcs hosted in R0 rows, plus kernel
    # columns the delta pushed out of the kernel
    suspects = {j for j in range(n) if old_pc[j] >= 0 and old_pc[j] in R0set}
    kernel_cols = np.flatnonzero(old_pc < 0)
    if kernel_cols.size:
        escaped = kernel_cols[state.M[np.ix_(R0, kernel_cols)].any(axis=0)]
        suspects.update(int(j) for j in escaped)

    # Phase 1: give the strip's column basis fresh pcs in rows R1
    R1 = [R0[i] for i in row_basis_small(state.M[R0], p)]
    C1 = col_basis_small(state.M[R1], p) if R1 else []
    if C1:
        inv1 = _inv_small(state.M[np.ix_(R1, C1)], p)
        for mat in (state.M, state.B):
            mat[:, C1] = mat[:, C1] @ inv1 % p
        W = state.M[R1].copy()
        for mat in (state.M, state.B):
            keep = mat[:, C1].copy()
            mat[:] = (keep @ W - mat) % p
            mat[:, C1] = keep

    # Phase 2: re-place or kernel-ize the remaining suspect columns
    Ct2 = [j for j in sorted(suspects) if j not in set(C1)]
    Ct2 = [j for j in Ct2 if state.M[:, j].any()]
    C2: list[int] = []
    R2: list[int] = []
    if Ct2:
        local = col_basis_small(state.M[:, Ct2], p)
        C2 = [Ct2[a] for a in local]
        R2 = [
            int(i)
            for i in np.flatnonzero(
                _prefix_row_mask(state.M[:, C2], p)
            )
        ]
        assert not (set(R1) & set(R2)), "phase rows must be disjoint"
        inv2 = _inv_small(state.M[np.ix_(R2, C2)], p)
        for mat in (state.M, state.B):
            mat[:, C2] = mat[:, C2] @ inv2 % p
        W2 = state.M[R2].copy()
        for mat in (state.M, state.B):
            keep = mat[:, C2].copy()
            mat[:] = (mat - keep @ W2) % p
            mat[:, C2] = keep

    # new statuses on touched columns only; everything else is retained
    for a, j in enumerate(C1):
        state.pc[j] = R1[a]
    for a, j in enumerate(C2):
        state.pc[j] = R2[a]
    for j in Ct2:
        if j not in set(C2):
            state.pc[j] = -1
    for j in sorted(suspects):
        if j not in set(C1) | set(Ct2):
            state.pc[j] = -1  # suspect column became identically zero

    v_r0_old = sum(1 for j in range(n) if old_pc[j] >= 0 and old_pc[j] in R0set)
    v_r1_new = len(C1)
    v_r2_new = len(C2)
    v_1 = sum(
        1 for j in C1 if old_pc[j] >= 0 and old_pc[j] not in R0set
    )
    state.pc_count = pc_count_delta(p_old, v_r0_old, v_r1_new, v_r2_new, v_1)
    if VERIFY_INVARIANTS:
        recount = int((state.pc >= 0).sum())
        assert state.pc_count == recount, "Claim 5.9 delta disagrees with recount"
        state.check_invariants()
    return state


def _prefix_row_mask(strip: np.ndarray, p: int) -> np.ndarray:
    """Boolean mask of the greedy prefix row basis of the given strip."""
    mask = np.zeros(strip.shape[0], dtype=bool)
    rows = col_basis_small(strip.T, p)
    mask[rows] = True
    return mask


@dataclass(frozen=True)
class QRank:
    """Rank over Q estimated through a pool of primes."""

    value: int
    exact: bool


def rank_over_Q(A, prime_pool) -> QRank:
    """Max rank of an integer matrix across the prime pool.

    The answer is exact when the pool is larger than the bit length of
    the largest possible minor (n! * N^n for max entry magnitude N):
    fewer primes than that can conspire to kill a witness minor.
    """
    A = np.asarray(A, dtype=np.int64)
    if not prime_pool:
        raise ParameterError("prime pool must be non-empty")
    n = max(A.shape)
    N = int(abs(A).max()) if A.size else 0
    import math

    bad_bound = math.log2(float(math.factorial(n)) * float(max(N, 2)) ** n)
    best = max(oracle_rank(A.tolist(), int(q)) for q in prime_pool)
    return QRank(value=best, exact=len(set(int(q) for q in prime_pool)) > bad_bound)
