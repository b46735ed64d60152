"""Brute-force reference implementations used for differential testing.

Everything here is deliberately naive and independent of the dynamic
engines it checks; the only shared code is scalar arithmetic from
fieldcore.
"""

from __future__ import annotations

import heapq
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import OracleScaleError, ParameterError

RANK_CAP = 64
ENUM_VERTEX_CAP = 12

INF = float("inf")


def oracle_rank(A, modulus=None) -> int:
    """Gaussian-elimination rank; modulus None means exact rank over Q."""
    rows = [list(r) for r in A]
    if not rows:
        return 0
    if len(rows) > RANK_CAP or len(rows[0]) > RANK_CAP:
        raise OracleScaleError("matrix above oracle cap")
    if modulus is None:
        rows = [[Fraction(x) for x in r] for r in rows]
    else:
        rows = [[x % modulus for x in r] for r in rows]
    m, n = len(rows), len(rows[0])
    rank = 0
    for col in range(n):
        piv = next((i for i in range(rank, m) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        pr = rows[rank]
        for i in range(m):
            if i != rank and rows[i][col] != 0:
                if modulus is None:
                    f = rows[i][col] / pr[col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
                else:
                    f = rows[i][col] * pow(pr[col], -1, modulus) % modulus
                    rows[i] = [(a - f * b) % modulus for a, b in zip(rows[i], pr)]
        rank += 1
        if rank == m:
            break
    return rank


def oracle_dist(n: int, edges: Mapping[tuple[int, int], int], s: int, t: int):
    """Dijkstra over the given directed length map; INF if unreachable."""
    for length in edges.values():
        if length < 0:
            raise ParameterError("negative lengths not supported")
    dist = {s: 0}
    heap = [(0, s)]
    adj: dict[int, list[tuple[int, int]]] = {}
    for (u, v), w in edges.items():
        adj.setdefault(u, []).append((v, w))
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist.get(u, INF):
            continue
        if u == t:
            return d
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist.get(t, INF)


def oracle_reach(n: int, edges: Iterable[tuple[int, int]], s: int, t: int) -> bool:
    """DFS reachability."""
    adj: dict[int, list[int]] = {}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
    seen = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        if u == t:
            return True
        for v in adj.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return t in seen


def oracle_mcm(left: Iterable[int], right: Iterable[int],
               edges: Iterable[tuple[int, int]]) -> int:
    """Maximum-matching size in a bipartite graph by augmenting paths."""
    left = list(left)
    right_set = set(right)
    adj: dict[int, list[int]] = {u: [] for u in left}
    for u, v in edges:
        if u not in adj or v not in right_set:
            raise ParameterError("edge endpoints must respect the bipartition")
        adj[u].append(v)
    match_r: dict[int, int] = {}

    def try_augment(u, seen):
        for v in adj[u]:
            if v in seen:
                continue
            seen.add(v)
            if v not in match_r or try_augment(match_r[v], seen):
                match_r[v] = u
                return True
        return False

    size = 0
    for u in left:
        if try_augment(u, set()):
            size += 1
    return size


def oracle_enumerate_pms(left, right, edges, w=None):
    """All perfect matchings of a bipartite graph, with weights under w.

    Returns a list of (matching, weight) where a matching is a frozenset
    of (u, v) edges.  w maps edges to weights; missing w means weight 0.
    """
    left = sorted(left)
    right = sorted(right)
    if len(left) + len(right) > ENUM_VERTEX_CAP:
        raise OracleScaleError("graph above enumeration cap")
    if len(left) != len(right):
        return []
    adj = {u: sorted(v for (a, v) in edges if a == u) for u in left}
    weight_of = (lambda e: 0) if w is None else (lambda e: w[e])
    out = []

    def rec(i, used, acc):
        if i == len(left):
            m = frozenset(acc)
            out.append((m, sum(weight_of(e) for e in m)))
            return
        u = left[i]
        for v in adj[u]:
            if v not in used:
                used.add(v)
                acc.append((u, v))
                rec(i + 1, used, acc)
                acc.pop()
                used.remove(v)

    rec(0, set(), [])
    return out


def oracle_series_inverse(A_rows: list[list[int]], m: int) -> list[list[int]]:
    """Truncated Neumann series sum_{i<=m} A^i for a bitmask poly matrix.

    Entries are GF(2)[x] polynomials encoded as int bitmasks (bit i is the
    x^i coefficient).  A must have zero constant term everywhere so the
    series converges under truncation.
    """
    n = len(A_rows)
    mask = (1 << (m + 1)) - 1
    for row in A_rows:
        for e in row:
            if e & 1:
                raise ParameterError("series oracle needs zero constant terms")

    def mul(f, g):
        r = 0
        while f:
            low = f & -f
            r ^= g << (low.bit_length() - 1)
            f ^= low
        return r & mask

    def matmul(X, Y):
        return [
            [
                _xor_all(mul(X[i][k], Y[k][j]) for k in range(n))
                for j in range(n)
            ]
            for i in range(n)
        ]

    ident = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    # S_k = sum_{i<k} A^i; doubling: S_2k = S_k + A^k S_k
    S = ident
    P = [row[:] for row in A_rows]  # A^k
    k = 1
    while k <= m:
        S = [
            [S[i][j] ^ t[j] for j in range(n)]
            for i, t in enumerate(matmul(P, S))
        ]
        P = matmul(P, P)
        k *= 2
    return S


def _xor_all(items):
    acc = 0
    for x in items:
        acc ^= x
    return acc
