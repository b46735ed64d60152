"""Scenario harness: parse, generate, replay, and time change scenarios.

A scenario is a line-oriented text file (grammar below) describing an
initial object, a sequence of atomic change batches, and interleaved
queries.  run_scenario drives one of the dynamic engines over it,
optionally cross-checking every answer against the brute-force oracles,
and returns one structured record per query.  run_timing replays the
change sequence twice — dynamic updates vs. recompute-from-scratch —
and reports the per-batch speedup.

Grammar (one directive per line, '#' starts a comment):

    header:   graph <n> directed|undirected [weighted]
              matrix <n> <p>
    batch                       start a new atomic batch
    ins <u> <v> [len]           insert edge (len defaults to 1)
    del <u> <v>                 delete edge
    set <i> <j> <val>           overwrite a matrix entry
    q reach <s> <t> | q dist <s> <t> | q path <s> <t>
    q match | q witness | q rank

Vertices and indices are 1-based in scenario text.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dynmatch import (
    SIZE_CAP as MATCH_SIZE_CAP,
    apply_edge_batch_det,
    apply_edge_batch_rank,
    build_gen_tutte,
    build_tutte_rank,
    check_bipartite,
    extract_matching,
    query_mcm,
    query_mcm_rank,
)
from .dynrank import apply_entry_batch, init_agood, split_entries
from .dynreach import (
    SIZE_CAP as REACH_SIZE_CAP,
    apply_edge_batch,
    extract_path,
    init_reachdist,
    query_dist,
    query_reach,
)
from .errors import IsolationFailureError, ParameterError, ScenarioError
from .fieldcore import is_prime
from .oracles import oracle_dist, oracle_mcm, oracle_rank, oracle_reach
from .polyseries import min_degree_term

INF = math.inf
MODES = ("rank", "reach", "dist", "match-det", "match-rank")
GRAPH_QUERIES = ("reach", "dist", "path", "match", "witness")
GEN_PRIMES = (5, 97, 1009)
GEN_LENGTH_CAP = 4


@dataclass(frozen=True)
class Query:
    """One interleaved query; s/t are 0-based or None for global queries."""

    kind: str
    s: int | None
    t: int | None
    line: int


@dataclass(frozen=True)
class ChangeBatch:
    """One atomic batch of operations plus the queries that follow it."""

    ops: tuple
    queries: tuple


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: header facts plus the ordered batch list."""

    kind: str  # "graph" | "matrix"
    n: int
    directed: bool
    weighted: bool
    modulus: int | None
    prelude: tuple  # queries before the first batch
    batches: tuple


def _fail(lineno: int, message: str):
    raise ScenarioError(lineno, message)


def _int_field(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        _fail(lineno, f"{what} {tok!r} is not an integer")


def _vertex(tok: str, lineno: int, n: int, what: str) -> int:
    v = _int_field(tok, lineno, what)
    if not 1 <= v <= n:
        _fail(lineno, f"{what} {v} outside [1, {n}]")
    return v - 1


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raise ScenarioError naming the first bad line."""
    header = None
    prelude: list = []
    batches: list = []
    ops: list | None = None
    queries: list | None = None

    def close_batch():
        nonlocal ops, queries
        if ops is not None:
            batches.append(ChangeBatch(tuple(ops), tuple(queries)))
            ops, queries = None, None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if header is None:
            if tok[0] == "graph":
                if len(tok) not in (3, 4):
                    _fail(lineno, "expected: graph <n> directed|undirected [weighted]")
                n = _int_field(tok[1], lineno, "vertex count")
                if n < 1:
                    _fail(lineno, f"vertex count {n} must be positive")
                if tok[2] not in ("directed", "undirected"):
                    _fail(lineno, f"unknown direction {tok[2]!r}")
                if len(tok) == 4 and tok[3] != "weighted":
                    _fail(lineno, f"unknown header flag {tok[3]!r}")
                header = Scenario(
                    kind="graph", n=n, directed=tok[2] == "directed",
                    weighted=len(tok) == 4, modulus=None,
                    prelude=(), batches=(),
                )
            elif tok[0] == "matrix":
                if len(tok) != 3:
                    _fail(lineno, "expected: matrix <n> <p>")
                n = _int_field(tok[1], lineno, "matrix size")
                p = _int_field(tok[2], lineno, "modulus")
                if n < 1:
                    _fail(lineno, f"matrix size {n} must be positive")
                if not is_prime(p):
                    _fail(lineno, f"modulus {p} is not prime")
                header = Scenario(
                    kind="matrix", n=n, directed=False, weighted=False,
                    modulus=p, prelude=(), batches=(),
                )
            else:
                _fail(lineno, f"first directive must be a header, got {tok[0]!r}")
            continue

        n = header.n
        if tok[0] == "batch":
            if len(tok) != 1:
                _fail(lineno, "batch takes no arguments")
            close_batch()
            ops, queries = [], []
        elif tok[0] == "ins":
            if ops is None:
                _fail(lineno, "ins outside a batch")
            if header.kind != "graph":
                _fail(lineno, "ins requires a graph header")
            if len(tok) not in (3, 4):
                _fail(lineno, "expected: ins <u> <v> [len] (missing endpoint)")
            u = _vertex(tok[1], lineno, n, "vertex")
            v = _vertex(tok[2], lineno, n, "vertex")
            if u == v:
                _fail(lineno, "self-loops are not supported")
            w = _int_field(tok[3], lineno, "length") if len(tok) == 4 else 1
            if w < 1:
                _fail(lineno, f"length {w} must be positive")
            ops.append(("ins", u, v, w))
        elif tok[0] == "del":
            if ops is None:
                _fail(lineno, "del outside a batch")
            if header.kind != "graph":
                _fail(lineno, "del requires a graph header")
            if len(tok) != 3:
                _fail(lineno, "expected: del <u> <v> (missing endpoint)")
            u = _vertex(tok[1], lineno, n, "vertex")
            v = _vertex(tok[2], lineno, n, "vertex")
            ops.append(("del", u, v))
        elif tok[0] == "set":
            if ops is None:
                _fail(lineno, "set outside a batch")
            if header.kind != "matrix":
                _fail(lineno, "set requires a matrix header")
            if len(tok) != 4:
                _fail(lineno, "expected: set <i> <j> <val> (missing field)")
            i = _vertex(tok[1], lineno, n, "row")
            j = _vertex(tok[2], lineno, n, "column")
            val = _int_field(tok[3], lineno, "value")
            if not 0 <= val < header.modulus:
                _fail(lineno, f"value {val} outside [0, {header.modulus})")
            ops.append(("set", i, j, val))
        elif tok[0] == "q":
            if len(tok) < 2:
                _fail(lineno, "expected a query kind after q")
            kind = tok[1]
            if kind in ("reach", "dist", "path"):
                if header.kind != "graph":
                    _fail(lineno, f"q {kind} requires a graph header")
                if len(tok) != 4:
                    _fail(lineno, f"expected: q {kind} <s> <t> (missing endpoint)")
                q = Query(kind, _vertex(tok[2], lineno, n, "vertex"),
                          _vertex(tok[3], lineno, n, "vertex"), lineno)
            elif kind in ("match", "witness"):
                if header.kind != "graph":
                    _fail(lineno, f"q {kind} requires a graph header")
                if len(tok) != 2:
                    _fail(lineno, f"q {kind} takes no arguments")
                q = Query(kind, None, None, lineno)
            elif kind == "rank":
                if header.kind != "matrix":
                    _fail(lineno, "q rank requires a matrix header")
                if len(tok) != 2:
                    _fail(lineno, "q rank takes no arguments")
                q = Query(kind, None, None, lineno)
            else:
                _fail(lineno, f"unknown query kind {kind!r}")
            if queries is None:
                prelude.append(q)
            else:
                queries.append(q)
        else:
            _fail(lineno, f"unknown directive {tok[0]!r}")

    if header is None:
        raise ScenarioError(1, "empty scenario (missing header)")
    close_batch()
    return replace(header, prelude=tuple(prelude), batches=tuple(batches))


@dataclass(frozen=True)
class RunOptions:
    """Knobs shared by run_scenario and run_timing."""

    seed: int = 0
    verify: bool = False
    epoch: int | None = None  # epoch batch budget override
    max_candidates: int | None = None  # family tuple cap override
    collect_state: bool = False  # attach final engine state to the report


def _canon(u: int, v: int) -> tuple:
    return (u, v) if u < v else (v, u)


class _Replay:
    """Engine adapter: holds engine state plus an oracle-side mirror."""

    def __init__(self, sc: Scenario, opt: RunOptions):
        self.sc = sc
        self.opt = opt

    def apply(self, ops):  # pragma: no cover - abstract
        raise NotImplementedError

    def answer(self, q: Query) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


class _RankReplay(_Replay):
    def __init__(self, sc, opt):
        super().__init__(sc, opt)
        n, p = sc.n, sc.modulus
        self.mirror = [[0] * n for _ in range(n)]
        self.state = init_agood(self.mirror, p)

    def apply(self, ops):
        entries = [(i, j, v) for _, i, j, v in ops]
        for batch in split_entries(entries):
            apply_entry_batch(self.state, batch)
        for _, i, j, v in ops:
            self.mirror[i][j] = v

    def answer(self, q):
        rec = {"answer": self.state.rank(), "prime": self.sc.modulus}
        if self.opt.verify:
            rec["oracle"] = oracle_rank(self.mirror, self.sc.modulus)
        return rec


class _ReachReplay(_Replay):
    def __init__(self, sc, opt):
        super().__init__(sc, opt)
        if not sc.directed:
            raise ParameterError("reach/dist modes require a directed graph")
        kwargs = {}
        if opt.epoch is not None:
            kwargs["epoch_limit"] = opt.epoch
        if opt.max_candidates is not None:
            kwargs["max_tuples"] = opt.max_candidates
        self.lengths: dict = {}
        self.state = init_reachdist(sc.n, {}, seed=opt.seed, **kwargs)

    def apply(self, ops):
        self.state = apply_edge_batch(self.state, ops)
        for op in ops:
            if op[0] == "ins":
                self.lengths[(op[1], op[2])] = op[3]
            else:
                self.lengths.pop((op[1], op[2]), None)

    def _provenance(self, s, t):
        """Index of the first candidate realizing the reported answer."""
        best, arg = INF, None
        for idx, cand in enumerate(self.state.candidates):
            entry = cand.C.entry(s, t)
            deg, present = min_degree_term(entry)
            if not present:
                continue
            top = cand.cw.decode(deg)[0]
            if top < best:
                best, arg = top, idx
        return arg

    def answer(self, q):
        s, t = q.s, q.t
        if q.kind == "reach":
            rec = {"answer": query_reach(self.state, s, t)}
            arg = next(
                (i for i, c in enumerate(self.state.candidates)
                 if c.C.data[s][t] != 0), None,
            )
            rec["candidate"] = arg
            if self.opt.verify:
                rec["oracle"] = oracle_reach(self.sc.n, list(self.lengths), s, t)
        elif q.kind == "dist":
            d = query_dist(self.state, s, t)
            rec = {"answer": d, "candidate": self._provenance(s, t)}
            if self.opt.verify:
                rec["oracle"] = oracle_dist(self.sc.n, self.lengths, s, t)
        else:  # path
            try:
                path = extract_path(self.state, s, t)
            except IsolationFailureError:
                path = None
            rec = {
                "answer": None if path is None
                else [(u + 1, v + 1) for u, v in path],
                "candidate": self._provenance(s, t),
            }
            if self.opt.verify:
                want = oracle_dist(self.sc.n, self.lengths, s, t)
                if path is None:
                    rec["oracle"] = None if want == INF else want
                    # unreachable iff the oracle distance is infinite
                    rec["match"] = want == INF
                else:
                    got = sum(self.lengths[e] for e in path)
                    rec["oracle"] = want
                    rec["match"] = got == want and _is_path(path, s, t)
        return rec


def _is_path(path, s, t) -> bool:
    cur = s
    seen = {s}
    for u, v in path:
        if u != cur or v in seen:
            return False
        seen.add(v)
        cur = v
    return cur == t


class _MatchReplay(_Replay):
    def __init__(self, sc, opt, mode):
        super().__init__(sc, opt)
        if sc.directed or sc.weighted:
            raise ParameterError(
                "match modes require an undirected unweighted graph"
            )
        kwargs = {}
        if opt.max_candidates is not None:
            kwargs["max_tuples"] = opt.max_candidates
        self.det = mode == "match-det"
        self.edges: set = set()
        if self.det:
            if opt.epoch is not None:
                kwargs["epoch_limit"] = opt.epoch
            self.state = build_gen_tutte(sc.n, [], seed=opt.seed, **kwargs)
        else:
            self.state = build_tutte_rank(sc.n, [], seed=opt.seed, **kwargs)

    def apply(self, ops):
        stripped = [op[:3] for op in ops]
        if self.det:
            self.state = apply_edge_batch_det(self.state, stripped)
        else:
            self.state = apply_edge_batch_rank(self.state, stripped)
        for op in stripped:
            e = _canon(op[1], op[2])
            self.edges.discard(e) if op[0] == "del" else self.edges.add(e)

    def _oracle(self):
        side = check_bipartite(self.sc.n, self.edges)
        left = [v for v in range(self.sc.n) if side.get(v, 0) == 0]
        right = [v for v in range(self.sc.n) if side.get(v) == 1]
        oriented = [
            (u, v) if side[u] == 0 else (v, u) for u, v in self.edges
        ]
        return oracle_mcm(left, right, oriented)

    def _best_copy(self):
        if not self.state.copies:
            return None, None
        idx = max(
            range(len(self.state.copies)),
            key=lambda i: self.state.copies[i].state.rank(),
        )
        n_primes = len(self.state.prime_pool)
        return idx // n_primes, self.state.copies[idx].prime

    def answer(self, q):
        if q.kind == "match":
            if self.det:
                size, _ = query_mcm(self.state)
                rec = {"answer": size}
            else:
                cand, prime = self._best_copy()
                rec = {
                    "answer": query_mcm_rank(self.state),
                    "candidate": cand, "prime": prime,
                }
            if self.opt.verify:
                rec["oracle"] = self._oracle()
        else:  # witness
            if not self.det:
                raise ParameterError("q witness requires mode match-det")
            size, _ = query_mcm(self.state)
            matching = extract_matching(self.state) if size else []
            rec = {"answer": [(u + 1, v + 1) for u, v in matching]}
            if self.opt.verify:
                want = self._oracle()
                used = [v for e in matching for v in e]
                ok = (
                    len(matching) == want
                    and len(set(used)) == len(used)
                    and all(_canon(*e) in self.edges for e in matching)
                )
                rec["oracle"] = want
                rec["match"] = ok
        return rec


def _make_replay(sc: Scenario, mode: str, opt: RunOptions) -> _Replay:
    if mode == "rank":
        if sc.kind != "matrix":
            raise ParameterError("rank mode requires a matrix scenario")
        return _RankReplay(sc, opt)
    if mode in ("reach", "dist"):
        if sc.kind != "graph":
            raise ParameterError(f"{mode} mode requires a graph scenario")
        return _ReachReplay(sc, opt)
    if mode in ("match-det", "match-rank"):
        if sc.kind != "graph":
            raise ParameterError(f"{mode} mode requires a graph scenario")
        return _MatchReplay(sc, opt, mode)
    raise ParameterError(f"unknown mode {mode!r}; choose from {MODES}")


def _normalize(value):
    """JSON-safe rendering: infinities as the string 'inf'."""
    if value == INF:
        return "inf"
    if isinstance(value, list):
        return [list(e) for e in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    return value


def run_scenario(sc: Scenario, mode: str, options: RunOptions | None = None) -> dict:
    """Replay a scenario; one record per query, plus the mismatch count.

    Each record carries {query_id, mode, answer, oracle, match, micros,
    candidate, prime}; oracle and match are None without --verify.
    Engine errors become failure records with an "error" field and count
    as mismatches.
    """
    opt = options or RunOptions()
    replay = _make_replay(sc, mode, opt)
    records = []
    mismatches = 0
    query_id = 0

    def run_queries(queries):
        nonlocal query_id, mismatches
        for q in queries:
            t0 = time.perf_counter()
            try:
                partial = replay.answer(q)
            except (ParameterError, ScenarioError):
                raise
            except Exception as exc:  # engine errors become records
                partial = {"answer": None, "error": f"{type(exc).__name__}: {exc}"}
            micros = int((time.perf_counter() - t0) * 1e6)
            rec = {
                "query_id": query_id,
                "mode": mode,
                "query": q.kind,
                "answer": _normalize(partial.get("answer")),
                "oracle": _normalize(partial.get("oracle")),
                "match": None,
                "micros": micros,
                "candidate": _normalize(partial.get("candidate")),
                "prime": _normalize(partial.get("prime")),
            }
            if "error" in partial:
                rec["error"] = partial["error"]
                rec["match"] = False if opt.verify else None
            elif opt.verify:
                rec["match"] = partial.get("match", rec["answer"] == rec["oracle"])
            if rec["match"] is False:
                mismatches += 1
            records.append(rec)
            query_id += 1

    run_queries(sc.prelude)
    for batch in sc.batches:
        replay.apply(list(batch.ops))
        run_queries(batch.queries)

    report = {"mode": mode, "records": records, "mismatches": mismatches}
    if opt.collect_state:
        report["state"] = replay
    return report


def _static_rank(mat: np.ndarray, p: int) -> int:
    """From-scratch Gaussian elimination rank mod p (timing baseline)."""
    A = mat % p
    n_rows, n_cols = A.shape
    rank = 0
    for col in range(n_cols):
        piv = None
        for r in range(rank, n_rows):
            if A[r, col] % p:
                piv = r
                break
        if piv is None:
            continue
        A[[rank, piv]] = A[[piv, rank]]
        inv = pow(int(A[rank, col]), p - 2, p)
        A[rank] = A[rank] * inv % p
        rest = np.r_[0:rank, rank + 1:n_rows]
        A[rest] = (A[rest] - np.outer(A[rest, col], A[rank])) % p
        rank += 1
        if rank == n_rows:
            break
    return rank


def run_timing(sc: Scenario, mode: str, options: RunOptions | None = None) -> dict:
    """Per-batch dynamic update time vs. recompute-from-scratch.

    For rank mode the static baseline is full Gaussian elimination on the
    mirrored matrix after each batch; for the graph modes it is an engine
    rebuild from the mirrored edge set.
    """
    opt = options or RunOptions()
    replay = _make_replay(sc, mode, opt)

    dynamic = 0.0
    static = 0.0
    for batch in sc.batches:
        ops = list(batch.ops)
        t0 = time.perf_counter()
        replay.apply(ops)
        dynamic += time.perf_counter() - t0

        t0 = time.perf_counter()
        if mode == "rank":
            _static_rank(np.array(replay.mirror, dtype=np.int64), sc.modulus)
        elif mode in ("reach", "dist"):
            init_reachdist(sc.n, dict(replay.lengths), seed=opt.seed)
        elif mode == "match-det":
            build_gen_tutte(sc.n, replay.edges, seed=opt.seed)
        else:
            build_tutte_rank(sc.n, replay.edges, seed=opt.seed)
        static += time.perf_counter() - t0

    batches = max(1, len(sc.batches))
    dyn_us = dynamic * 1e6 / batches
    sta_us = static * 1e6 / batches
    return {
        "mode": mode,
        "batches": len(sc.batches),
        "dynamic_micros_per_batch": round(dyn_us, 2),
        "static_micros_per_batch": round(sta_us, 2),
        "speedup": round(sta_us / dyn_us, 2) if dyn_us else INF,
    }


def gen_scenario(kind: str, n: int, batches: int, batch_size: int, seed: int) -> str:
    """Deterministic pseudo-random scenario text for the given mode."""
    if kind not in MODES:
        raise ParameterError(f"unknown scenario kind {kind!r}; choose from {MODES}")
    if n < 2 or batches < 0 or batch_size < 1:
        raise ParameterError("need n >= 2, batches >= 0, batch_size >= 1")
    rng = random.Random(seed)
    lines = []
    if kind == "rank":
        p = GEN_PRIMES[seed % len(GEN_PRIMES)]
        lines.append(f"matrix {n} {p}")
        for _ in range(batches):
            lines.append("batch")
            for _ in range(batch_size):
                i, j = rng.randrange(n), rng.randrange(n)
                lines.append(f"set {i + 1} {j + 1} {rng.randrange(p)}")
            lines.append("q rank")
    elif kind in ("reach", "dist"):
        if n > REACH_SIZE_CAP:
            raise ParameterError(f"{kind} scenarios cap at n = {REACH_SIZE_CAP}")
        lines.append(f"graph {n} directed weighted")
        arcs: set = set()
        all_arcs = [(u, v) for u in range(n) for v in range(n) if u != v]
        for b in range(batches):
            lines.append("batch")
            for _ in range(batch_size):
                if arcs and (len(arcs) == len(all_arcs) or rng.random() < 0.45):
                    u, v = rng.choice(sorted(arcs))
                    arcs.discard((u, v))
                    lines.append(f"del {u + 1} {v + 1}")
                else:
                    u, v = rng.choice([a for a in all_arcs if a not in arcs])
                    arcs.add((u, v))
                    lines.append(
                        f"ins {u + 1} {v + 1} {rng.randint(1, GEN_LENGTH_CAP)}"
                    )
            s, t = rng.sample(range(n), 2)
            lines.append(f"q {'reach' if kind == 'reach' else 'dist'} {s + 1} {t + 1}")
            if kind == "dist" and b % 5 == 4:
                s, t = rng.sample(range(n), 2)
                lines.append(f"q path {s + 1} {t + 1}")
    else:  # match-det / match-rank
        if n > MATCH_SIZE_CAP:
            raise ParameterError(f"{kind} scenarios cap at n = {MATCH_SIZE_CAP}")
        lines.append(f"graph {n} undirected")
        left = list(range(n // 2))
        right = list(range(n // 2, n))
        pairs = [(u, v) for u in left for v in right]
        present: set = set()
        for b in range(batches):
            lines.append("batch")
            for _ in range(batch_size):
                if present and (len(present) == len(pairs) or rng.random() < 0.5):
                    u, v = rng.choice(sorted(present))
                    present.discard((u, v))
                    lines.append(f"del {u + 1} {v + 1}")
                else:
                    u, v = rng.choice([p_ for p_ in pairs if p_ not in present])
                    present.add((u, v))
                    lines.append(f"ins {u + 1} {v + 1}")
            lines.append("q match")
            if kind == "match-det" and b % 5 == 4:
                lines.append("q witness")
    return "\n".join(lines) + "\n"
