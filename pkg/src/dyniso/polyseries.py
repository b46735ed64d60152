"""Truncated power-series arithmetic over GF(2) and low-rank update kernels.

Polynomials are bit vectors packed into Python ints (bit i holds the x^i
coefficient), truncated at a fixed degree m.  Multiplication runs through
Kronecker substitution: coefficients are spread into 16- or 32-bit slots,
the carrying integer product is taken with GMP, and the slots are read
back mod 2.  Short or sparse operands fall back to plain shift-xor.
"""

from __future__ import annotations

from dataclasses import dataclass

import gmpy2
import numpy as np

from .errors import (
    BatchTooLargeError,
    NonInvertibleError,
    ParameterError,
    SingularUpdateError,
)

# below this popcount the shift-xor loop beats the pack/unpack round trip
_SPARSE_CUTOFF = 24


def _mul_sparse(f: int, g: int, mask: int) -> int:
    if f.bit_count() > g.bit_count():
        f, g = g, f
    r = 0
    while f:
        low = f & -f
        r ^= g << (low.bit_length() - 1)
        f ^= low
    return r & mask


def _slot_width(m: int) -> int:
    # slots must hold coefficient collision counts, at most m + 1
    return 16 if m + 1 < (1 << 16) else 32


def _expand(f: int, m: int) -> gmpy2.mpz:
    """Spread the low m+1 coefficient bits of f into integer slots."""
    slot = _slot_width(m)
    nbytes = m // 8 + 1
    bits = np.unpackbits(
        np.frombuffer(f.to_bytes(nbytes, "little"), dtype=np.uint8),
        bitorder="little",
    )
    widened = bits.astype("<u2" if slot == 16 else "<u4")
    return gmpy2.mpz(int.from_bytes(widened.tobytes(), "little"))


def _contract(product: gmpy2.mpz, m: int) -> int:
    """Read slots of a Kronecker product back as coefficients mod 2."""
    slot = _slot_width(m)
    nbytes = (2 * m + 2) * slot // 8 + 8
    raw = np.frombuffer(
        int(product).to_bytes(nbytes, "little"),
        dtype="<u2" if slot == 16 else "<u4",
    )
    bits = (raw[: m + 1] & 1).astype(np.uint8)
    return int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little")


def _mul_int(f: int, g: int, m: int) -> int:
    mask = (1 << (m + 1)) - 1
    f &= mask
    g &= mask
    if f == 0 or g == 0:
        return 0
    if min(f.bit_count(), g.bit_count()) <= _SPARSE_CUTOFF or m < 512:
        return _mul_sparse(f, g, mask)
    return _contract(_expand(f, m) * _expand(g, m), m)


def _square_int(f: int, m: int) -> int:
    """GF(2) squaring just interleaves zero bits between coefficients."""
    f &= (1 << (m + 1)) - 1
    if f == 0:
        return 0
    nbytes = m // 8 + 1
    bits = np.unpackbits(
        np.frombuffer(f.to_bytes(nbytes, "little"), dtype=np.uint8),
        bitorder="little",
    )
    spread = np.zeros(2 * bits.size, dtype=np.uint8)
    spread[0::2] = bits
    out = int.from_bytes(np.packbits(spread, bitorder="little").tobytes(), "little")
    return out & ((1 << (m + 1)) - 1)


def _inv_int(h: int, m: int) -> int:
    """Truncated series inverse by Newton iteration, h(0) must be 1."""
    if not h & 1:
        raise NonInvertibleError("constant term is zero")
    g = 1  # exact inverse mod x^1
    prec = 1
    while prec <= m:
        prec = min(2 * prec, m + 1)
        # g <- h * g^2 agrees with h^-1 mod x^prec in characteristic 2
        g = _mul_int(h, _square_int(g, prec - 1), prec - 1)
    return g


@dataclass(frozen=True)
class TruncPoly:
    """GF(2)[x] polynomial truncated at degree m, coefficients bit-packed."""

    coeffs: int
    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ParameterError("truncation degree must be >= 0")
        object.__setattr__(self, "coeffs", self.coeffs & (1 << (self.m + 1)) - 1)

    @classmethod
    def zero(cls, m: int) -> "TruncPoly":
        return cls(0, m)

    @classmethod
    def one(cls, m: int) -> "TruncPoly":
        return cls(1, m)

    @classmethod
    def monomial(cls, degree: int, m: int) -> "TruncPoly":
        if degree > m:
            return cls(0, m)
        return cls(1 << degree, m)

    @classmethod
    def from_coeff_list(cls, coeffs, m: int) -> "TruncPoly":
        acc = 0
        for i, c in enumerate(coeffs):
            if c % 2:
                acc |= 1 << i
        return cls(acc, m)

    def is_zero(self) -> bool:
        return self.coeffs == 0

    def __add__(self, other: "TruncPoly") -> "TruncPoly":
        self._check(other)
        return TruncPoly(self.coeffs ^ other.coeffs, self.m)

    __sub__ = __add__  # characteristic 2

    def __mul__(self, other: "TruncPoly") -> "TruncPoly":
        self._check(other)
        return TruncPoly(_mul_int(self.coeffs, other.coeffs, self.m), self.m)

    def _check(self, other: "TruncPoly"):
        if self.m != other.m:
            raise ParameterError(
                f"mismatched truncation degrees {self.m} != {other.m}"
            )


def poly_mul_trunc(f: TruncPoly, g: TruncPoly) -> TruncPoly:
    """Product of f and g, coefficients mod 2, truncated at m."""
    return f * g


def poly_inv_trunc(h: TruncPoly) -> TruncPoly:
    """Truncated inverse of h; requires constant term h(0) = 1."""
    return TruncPoly(_inv_int(h.coeffs, h.m), h.m)


def min_degree_term(f: TruncPoly) -> tuple[int, bool]:
    """(smallest degree with coefficient 1, True), or (0, False) if f = 0."""
    if f.coeffs == 0:
        return 0, False
    low = f.coeffs & -f.coeffs
    return low.bit_length() - 1, True


def max_degree_term(f: TruncPoly) -> tuple[int, bool]:
    """(largest degree with coefficient 1, True), or (0, False) if f = 0."""
    if f.coeffs == 0:
        return 0, False
    return f.coeffs.bit_length() - 1, True


class PolyMatrix:
    """Matrix of truncated GF(2)[x] polynomials sharing one degree m.

    Entries are stored as raw bitmask ints for speed; TruncPoly objects
    appear only at the API boundary.
    """

    __slots__ = ("rows", "cols", "m", "data")

    def __init__(self, rows: int, cols: int, m: int, data=None):
        if rows <= 0 or cols <= 0:
            raise ParameterError("matrix dimensions must be positive")
        self.rows = rows
        self.cols = cols
        self.m = m
        mask = (1 << (m + 1)) - 1
        if data is None:
            self.data = [[0] * cols for _ in range(rows)]
        else:
            if len(data) != rows or any(len(r) != cols for r in data):
                raise ParameterError("data shape mismatch")
            self.data = [[int(x) & mask for x in r] for r in data]

    @classmethod
    def identity(cls, n: int, m: int) -> "PolyMatrix":
        out = cls(n, n, m)
        for i in range(n):
            out.data[i][i] = 1
        return out

    def entry(self, i: int, j: int) -> TruncPoly:
        return TruncPoly(self.data[i][j], self.m)

    def set_entry(self, i: int, j: int, value: TruncPoly | int):
        v = value.coeffs if isinstance(value, TruncPoly) else int(value)
        self.data[i][j] = v & ((1 << (self.m + 1)) - 1)

    def copy(self) -> "PolyMatrix":
        out = PolyMatrix(self.rows, self.cols, self.m)
        out.data = [r[:] for r in self.data]
        return out

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        if (self.rows, self.cols, self.m) != (other.rows, other.cols, other.m):
            raise ParameterError("shape or truncation mismatch")
        out = PolyMatrix(self.rows, self.cols, self.m)
        out.data = [
            [a ^ b for a, b in zip(ra, rb)] for ra, rb in zip(self.data, other.data)
        ]
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolyMatrix)
            and (self.rows, self.cols, self.m) == (other.rows, other.cols, other.m)
            and self.data == other.data
        )

    def is_identity(self) -> bool:
        return self.rows == self.cols and all(
            self.data[i][j] == (1 if i == j else 0)
            for i in range(self.rows)
            for j in range(self.cols)
        )


def polymat_mul(Xa: PolyMatrix, Xb: PolyMatrix) -> PolyMatrix:
    """Matrix product, entrywise truncated at the shared m."""
    if Xa.m != Xb.m:
        raise ParameterError("mismatched truncation degrees")
    if Xa.cols != Xb.rows:
        raise ParameterError("inner dimensions disagree")
    m = Xa.m
    out = PolyMatrix(Xa.rows, Xb.cols, m)
    if m + 1 < 512:
        mask = (1 << (m + 1)) - 1
        for i in range(Xa.rows):
            arow = Xa.data[i]
            orow = out.data[i]
            for j in range(Xb.cols):
                acc = 0
                for k in range(Xa.cols):
                    a = arow[k]
                    b = Xb.data[k][j]
                    if a and b:
                        acc ^= _mul_sparse(a, b, mask)
                orow[j] = acc
        return out
    # cache Kronecker expansions; accumulate collision counts, reduce once
    ea = [[None] * Xa.cols for _ in range(Xa.rows)]
    eb = [[None] * Xb.cols for _ in range(Xb.rows)]
    mask = (1 << (m + 1)) - 1
    for i in range(Xa.rows):
        for j in range(Xb.cols):
            acc = gmpy2.mpz(0)
            sparse_acc = 0
            for k in range(Xa.cols):
                a = Xa.data[i][k]
                b = Xb.data[k][j]
                if not a or not b:
                    continue
                if min(a.bit_count(), b.bit_count()) <= _SPARSE_CUTOFF:
                    sparse_acc ^= _mul_sparse(a, b, mask)
                    continue
                if ea[i][k] is None:
                    ea[i][k] = _expand(a, m)
                if eb[k][j] is None:
                    eb[k][j] = _expand(b, m)
                acc += ea[i][k] * eb[k][j]
            out.data[i][j] = (_contract(acc, m) if acc else 0) ^ sparse_acc
    return out


def polymat_inv_small(M: PolyMatrix) -> PolyMatrix:
    """Inverse of a small square matrix over truncated series.

    Gaussian elimination with unit-constant-term pivots; M(0) must be
    invertible over GF(2), otherwise SingularUpdateError is raised.
    """
    if M.rows != M.cols:
        raise ParameterError("matrix must be square")
    n, m = M.rows, M.m
    work = [row[:] for row in M.data]
    inv = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r][col] & 1), None)
        if piv is None:
            raise SingularUpdateError("constant-term matrix is singular over GF(2)")
        work[col], work[piv] = work[piv], work[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        pinv = _inv_int(work[col][col], m)
        work[col] = [_mul_int(x, pinv, m) for x in work[col]]
        inv[col] = [_mul_int(x, pinv, m) for x in inv[col]]
        for r in range(n):
            if r != col and work[r][col]:
                f = work[r][col]
                work[r] = [x ^ _mul_int(f, y, m) for x, y in zip(work[r], work[col])]
                inv[r] = [x ^ _mul_int(f, y, m) for x, y in zip(inv[r], inv[col])]
    return PolyMatrix(n, n, m, inv)


def polymat_inv_series(M: PolyMatrix) -> PolyMatrix:
    """Truncated inverse of an n x n matrix with M(0) invertible.

    Same elimination as polymat_inv_small without the small-width framing;
    used to build engine states from scratch.
    """
    return polymat_inv_small(M)


@dataclass
class LowRankChange:
    """A sparse entry update factored as U * B * V.

    U is an n x l selection matrix (0/1 columns picking affected rows),
    V an l x n selection matrix picking affected columns, and B the l x l
    block of entry deltas, so that U B V reproduces the delta exactly.
    """

    U: PolyMatrix
    B: PolyMatrix
    V: PolyMatrix
    width: int
    row_index: tuple[int, ...]
    col_index: tuple[int, ...]

    @property
    def is_empty(self) -> bool:
        return self.width == 0

    def col_index_of_U(self) -> tuple[int, ...]:
        """Row indices selected by U, i.e. which columns of C enter CU."""
        return self.row_index

    def row_index_of_V(self) -> tuple[int, ...]:
        """Column indices selected by V, i.e. which rows of C enter VC."""
        return self.col_index


def decompose_change(delta, n: int, m: int, batch_cap: int = 16) -> LowRankChange:
    """Factor a sparse entry-delta list [(i, j, poly_int)] into U B V.

    The width l is max(#affected rows, #affected cols); selection
    matrices are padded with unused unit rows/columns so U and V stay
    0/1-valued.
    """
    entries = [(i, j, int(d)) for (i, j, d) in delta if int(d) != 0]
    rows = sorted({i for i, _, _ in entries})
    cols = sorted({j for _, j, _ in entries})
    if len(rows) > batch_cap or len(cols) > batch_cap:
        raise BatchTooLargeError(
            f"batch touches {len(rows)} rows / {len(cols)} cols, cap {batch_cap}"
        )
    if not entries:
        dummy = PolyMatrix(1, 1, m)
        return LowRankChange(
            U=PolyMatrix(n, 1, m), B=dummy, V=PolyMatrix(1, n, m),
            width=0, row_index=(), col_index=(),
        )
    width = max(len(rows), len(cols))
    # pad index sets to equal width with arbitrary unused indices
    rows_p = list(rows)
    cols_p = list(cols)
    spare_r = (i for i in range(n) if i not in set(rows))
    spare_c = (j for j in range(n) if j not in set(cols))
    while len(rows_p) < width:
        rows_p.append(next(spare_r))
    while len(cols_p) < width:
        cols_p.append(next(spare_c))
    U = PolyMatrix(n, width, m)
    V = PolyMatrix(width, n, m)
    B = PolyMatrix(width, width, m)
    rpos = {r: a for a, r in enumerate(rows_p)}
    cpos = {c: a for a, c in enumerate(cols_p)}
    for a, r in enumerate(rows_p):
        U.data[r][a] = 1
    for a, c in enumerate(cols_p):
        V.data[a][c] = 1
    for i, j, d in entries:
        B.data[rpos[i]][cpos[j]] ^= d & ((1 << (m + 1)) - 1)
    return LowRankChange(
        U=U, B=B, V=V, width=width,
        row_index=tuple(rows_p), col_index=tuple(cols_p),
    )


def _gather_rows(C: PolyMatrix, rows) -> PolyMatrix:
    out = PolyMatrix(len(rows), C.cols, C.m)
    out.data = [C.data[r][:] for r in rows]
    return out


def _gather_cols(C: PolyMatrix, cols) -> PolyMatrix:
    out = PolyMatrix(C.rows, len(cols), C.m)
    out.data = [[row[c] for c in cols] for row in C.data]
    return out


def _capacitor(chg: LowRankChange, C: PolyMatrix) -> tuple[PolyMatrix, PolyMatrix, PolyMatrix]:
    """Shared pieces of the update formulas: CU, BVC and I + BVCU."""
    CU = _gather_cols(C, chg.col_index_of_U())
    BVC = polymat_mul(chg.B, _gather_rows(C, chg.row_index_of_V()))
    # BVCU is just BVC with its columns gathered through the 0/1 matrix U
    core = _gather_cols(BVC, chg.col_index_of_U())
    for i in range(core.rows):
        core.data[i][i] ^= 1
    return CU, BVC, core


def woodbury_update(C: PolyMatrix, chg: LowRankChange) -> PolyMatrix:
    """Sherman-Morrison-Woodbury step on a truncated inverse.

    Given C approximating A^-1 at degree m, returns the approximation of
    (A + UBV)^-1 at the same degree: C - CU (I + BVCU)^-1 BVC.
    """
    if chg.is_empty:
        return C.copy()
    CU, BVC, core = _capacitor(chg, C)
    K = polymat_inv_small(core)
    corr = polymat_mul(polymat_mul(CU, K), BVC)
    return C + corr  # subtraction is addition in characteristic 2


def det_update(d: TruncPoly, C: PolyMatrix, chg: LowRankChange) -> TruncPoly:
    """Matrix-determinant-lemma step: d' = d * det(I + BVCU) truncated."""
    if chg.is_empty:
        return d
    _, _, core = _capacitor(chg, C)
    return poly_mul_trunc(d, _det_small(core))


def _det_small(M: PolyMatrix) -> TruncPoly:
    """Determinant of a small matrix over truncated series by elimination."""
    n, m = M.rows, M.m
    work = [row[:] for row in M.data]
    det = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if work[r][col] & 1), None)
        if piv is None:
            # no unit pivot: fall back to cofactor expansion on this column
            return TruncPoly(_det_cofactor(work, m), m)
        work[col], work[piv] = work[piv], work[col]
        pivot = work[col][col]
        det = _mul_int(det, pivot, m)
        pinv = _inv_int(pivot, m)
        for r in range(col + 1, n):
            if work[r][col]:
                f = _mul_int(work[r][col], pinv, m)
                work[r] = [x ^ _mul_int(f, y, m) for x, y in zip(work[r], work[col])]
    return TruncPoly(det, m)


def _det_cofactor(rows, m: int) -> int:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    acc = 0
    for j in range(n):
        if rows[0][j]:
            minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
            acc ^= _mul_int(rows[0][j], _det_cofactor(minor, m), m)
    return acc
