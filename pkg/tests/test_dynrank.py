"""Tests for A-good basis rank maintenance."""

import random

import numpy as np
import pytest

import dyniso.dynrank as dynrank
from dyniso.dynrank import (
    EntryBatch,
    apply_entry_batch,
    col_basis_small,
    combine_blocks,
    init_agood,
    pc_count_delta,
    rank_over_Q,
    row_basis_small,
    select_small_prime,
    split_entries,
)
from dyniso.errors import BatchTooLargeError, ParameterError
from dyniso.oracles import oracle_rank


class TestInitAgood:
    def test_zero_matrix(self):
        st = init_agood([[0] * 3 for _ in range(3)], 5)
        assert st.rank() == 0
        assert (st.B == np.eye(3, dtype=np.int64)).all()
        st.check_invariants()

    def test_identity(self):
        st = init_agood(np.eye(4, dtype=np.int64), 7)
        assert st.rank() == 4
        st.check_invariants()

    def test_rank_one(self):
        st = init_agood([[1, 2], [2, 4]], 5)
        assert st.rank() == 1
        st.check_invariants()

    def test_non_square_rejected(self):
        with pytest.raises(ParameterError):
            init_agood([[1, 2, 3]], 5)


class TestEntryBatch:
    def test_cap_enforced(self):
        with pytest.raises(BatchTooLargeError):
            EntryBatch(tuple((i, 0, 1) for i in range(5)), cap=4)

    def test_split_entries_respects_cap(self):
        entries = [(i, i, 1) for i in range(10)]
        batches = split_entries(entries, cap=4)
        assert [len(b.entries) for b in batches] == [4, 4, 2]
        assert [e for b in batches for e in b.entries] == entries


class TestApplyEntryBatch:
    def test_single_entry_on_zero(self):
        st = init_agood([[0] * 3 for _ in range(3)], 5)
        apply_entry_batch(st, EntryBatch(((1, 1, 1),)))
        assert st.rank() == 1
        st.check_invariants()

    def test_revert_restores_rank(self):
        rng = random.Random(0)
        A = [[rng.randrange(5) for _ in range(4)] for _ in range(4)]
        st = init_agood(A, 5)
        before = st.rank()
        old = A[2][3]
        apply_entry_batch(st, EntryBatch(((2, 3, (old + 1) % 5),)))
        apply_entry_batch(st, EntryBatch(((2, 3, old),)))
        assert st.rank() == before
        st.check_invariants()

    def test_random_batches_vs_oracle(self):
        rng = random.Random(1)
        n, p = 6, 7
        A = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
        st = init_agood(A, p)
        for _ in range(200):
            entries = []
            for _ in range(rng.randint(1, 2)):
                i, j, v = rng.randrange(n), rng.randrange(n), rng.randrange(p)
                entries.append((i, j, v))
                A[i][j] = v
            apply_entry_batch(st, EntryBatch(tuple(entries)))
            assert st.rank() == oracle_rank(A, p)
        st.check_invariants()

    def test_invariants_every_batch_when_enabled(self):
        rng = random.Random(2)
        n, p = 5, 5
        A = [[0] * n for _ in range(n)]
        st = init_agood(A, p)
        old_flag = dynrank.VERIFY_INVARIANTS
        dynrank.VERIFY_INVARIANTS = True
        try:
            for _ in range(40):
                i, j, v = rng.randrange(n), rng.randrange(n), rng.randrange(p)
                A[i][j] = v
                apply_entry_batch(st, EntryBatch(((i, j, v),)))
        finally:
            dynrank.VERIFY_INVARIANTS = old_flag
        assert st.rank() == oracle_rank(A, p)


class TestRowColBases:
    def test_row_basis_frozen(self):
        assert row_basis_small(np.array([[1, 2], [2, 4]]), 5) == [0]
        assert row_basis_small(np.zeros((2, 3), dtype=np.int64), 5) == []
        assert row_basis_small(np.eye(3, dtype=np.int64), 5) == [0, 1, 2]

    def test_exhaustive_agrees_with_elimination(self):
        rng = random.Random(3)
        for _ in range(40):
            k, n, q = rng.randint(1, 4), rng.randint(1, 5), rng.choice((2, 3, 5, 7))
            M = np.array(
                [[rng.randrange(q) for _ in range(n)] for _ in range(k)]
            )
            fast = row_basis_small(M, q)
            slow = row_basis_small(M, q, exhaustive=True)
            assert len(fast) == len(slow) == oracle_rank(M.tolist(), q)

    def test_exhaustive_caps(self):
        with pytest.raises(ParameterError):
            row_basis_small(np.zeros((5, 2), dtype=np.int64), 3, exhaustive=True)
        with pytest.raises(ParameterError):
            row_basis_small(np.zeros((2, 2), dtype=np.int64), 11, exhaustive=True)

    def test_col_basis_frozen(self):
        assert col_basis_small(np.array([[1, 2]]), 5) == [0]
        assert col_basis_small(np.array([[0, 1]]), 5) == [1]
        assert col_basis_small(np.array([[1, 2, 3], [0, 1, 1]]), 5) == [0, 1]

    def test_col_basis_is_prefix_rank(self):
        rng = random.Random(4)
        for _ in range(20):
            M = np.array([[rng.randrange(5) for _ in range(6)] for _ in range(3)])
            cols = col_basis_small(M, 5)
            for j in range(6):
                grew = oracle_rank(M[:, : j + 1].tolist(), 5) > (
                    oracle_rank(M[:, :j].tolist(), 5) if j else 0
                )
                assert (j in cols) == grew


class TestSelectSmallPrime:
    def test_zero_strip(self):
        assert select_small_prime(np.zeros((2, 3), dtype=np.int64), 5) == 2

    def test_rank_preserved_at_two(self):
        assert select_small_prime(np.array([[1, 2], [2, 4]]), 5) == 2

    def test_skips_collapsing_prime(self):
        # rank 2 mod 5 but the strip collapses to rank 1 mod 2
        M = np.array([[1, 1], [1, 3]])
        q = select_small_prime(M, 5)
        assert q == 3
        assert oracle_rank(M.tolist(), q) == oracle_rank(M.tolist(), 5)


class TestCombineBlocks:
    def test_scalar_blocks(self):
        Y = combine_blocks([[1]], [[2]], [[3]], [[4]], [0], [0], 2)
        assert (Y == np.array([[1, 2], [3, 4]])).all()

    def test_empty_sets(self):
        X22 = np.arange(4).reshape(2, 2)
        Y = combine_blocks(
            np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)), X22, [], [], 2
        )
        assert (Y == X22).all()

    def test_roundtrip(self):
        rng = random.Random(5)
        n, R, C = 4, [1, 3], [0, 2]
        Rbar = [0, 2]
        Cbar = [1, 3]
        X = {
            key: np.array([[rng.randrange(7) for _ in cols] for _ in rows])
            for key, rows, cols in (
                ("11", R, C), ("12", R, Cbar), ("21", Rbar, C), ("22", Rbar, Cbar)
            )
        }
        Y = combine_blocks(X["11"], X["12"], X["21"], X["22"], R, C, n)
        assert (Y[np.ix_(R, C)] == X["11"]).all()
        assert (Y[np.ix_(R, Cbar)] == X["12"]).all()
        assert (Y[np.ix_(Rbar, C)] == X["21"]).all()
        assert (Y[np.ix_(Rbar, Cbar)] == X["22"]).all()

    def test_shape_mismatch(self):
        with pytest.raises(ParameterError):
            combine_blocks([[1, 2]], [[2]], [[3]], [[4]], [0], [0], 2)


class TestPcCountDelta:
    def test_frozen(self):
        assert pc_count_delta(5, 0, 0, 0, 0) == 5
        assert pc_count_delta(5, 1, 0, 0, 0) == 4

    def test_formula_matches_recount(self):
        # the maintained pc_count always matches check_invariants' recount,
        # which recomputes rank from scratch
        rng = random.Random(6)
        n, p = 5, 97
        A = [[rng.randrange(p) for _ in range(n)] for _ in range(n)]
        st = init_agood(A, p)
        for _ in range(60):
            i, j, v = rng.randrange(n), rng.randrange(n), rng.randrange(p)
            A[i][j] = v
            apply_entry_batch(st, EntryBatch(((i, j, v),)))
            assert st.pc_count == sum(1 for x in st.pc if x >= 0)
            assert st.pc_count == oracle_rank(A, p)


class TestRankOverQ:
    def test_identity(self):
        assert rank_over_Q(np.eye(3, dtype=np.int64), [2, 3, 5]).value == 3

    def test_rank_one(self):
        assert rank_over_Q(np.array([[2, 4], [1, 2]]), [2, 3, 5]).value == 1

    def test_bad_prime_recovered_by_pool(self):
        # det = 6: ranks 1 mod 2 and mod 3, full rank via 5
        M = np.array([[6, 0], [0, 1]])
        res = rank_over_Q(M, [2, 3, 5])
        assert res.value == 2

    def test_exactness_flag(self):
        M = np.eye(2, dtype=np.int64)
        small = rank_over_Q(M, [2, 3])
        assert not small.exact
        big = rank_over_Q(M, [q for q in range(2, 200) if all(q % d for d in range(2, q))])
        assert big.exact

    def test_empty_pool_rejected(self):
        with pytest.raises(ParameterError):
            rank_over_Q(np.eye(2, dtype=np.int64), [])
