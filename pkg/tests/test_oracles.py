"""Tests for the brute-force reference oracles."""

import math
from fractions import Fraction

import pytest

from dyniso.errors import OracleScaleError, ParameterError
from dyniso.oracles import (
    oracle_dist,
    oracle_enumerate_pms,
    oracle_mcm,
    oracle_rank,
    oracle_reach,
    oracle_series_inverse,
)

INF = math.inf


class TestOracleRank:
    def test_identity(self):
        assert oracle_rank([[1, 0], [0, 1]], 5) == 2

    def test_rank_one_mod_p(self):
        assert oracle_rank([[1, 2], [2, 4]], 5) == 1

    def test_modulus_changes_rank(self):
        assert oracle_rank([[5, 0], [0, 1]], 5) == 1
        assert oracle_rank([[5, 0], [0, 1]], 7) == 2

    def test_rational_rank(self):
        assert oracle_rank([[1, 2], [2, 4]]) == 1
        assert oracle_rank([[Fraction(1, 2), 0], [0, 3]]) == 2

    def test_cap(self):
        with pytest.raises(OracleScaleError):
            oracle_rank([[0] * 65 for _ in range(65)], 5)


class TestOracleDist:
    def test_triangle(self):
        edges = {(0, 1): 5, (1, 2): 1, (0, 2): 7}
        assert oracle_dist(3, edges, 0, 2) == 6
        assert oracle_dist(3, edges, 2, 0) == INF
        assert oracle_dist(3, edges, 1, 1) == 0

    def test_negative_rejected(self):
        with pytest.raises(ParameterError):
            oracle_dist(2, {(0, 1): -1}, 0, 1)


class TestOracleReach:
    def test_chain(self):
        edges = [(0, 1), (1, 2)]
        assert oracle_reach(3, edges, 0, 2)
        assert not oracle_reach(3, edges, 2, 0)
        assert oracle_reach(3, edges, 1, 1)


class TestOracleMcm:
    def test_k22(self):
        edges = [(0, 2), (0, 3), (1, 2), (1, 3)]
        assert oracle_mcm([0, 1], [2, 3], edges) == 2

    def test_star(self):
        assert oracle_mcm([0], [1, 2, 3], [(0, 1), (0, 2), (0, 3)]) == 1

    def test_empty(self):
        assert oracle_mcm([0, 1], [2], []) == 0

    def test_bad_orientation_rejected(self):
        with pytest.raises(ParameterError):
            oracle_mcm([0], [1], [(1, 0)])


class TestEnumeratePms:
    def test_k22_has_two(self):
        edges = [(0, 2), (0, 3), (1, 2), (1, 3)]
        w = {e: i for i, e in enumerate(edges)}
        pms = oracle_enumerate_pms([0, 1], [2, 3], edges, w)
        assert len(pms) == 2
        weights = sorted(weight for _, weight in pms)
        assert weights == [0 + 3, 1 + 2]

    def test_no_pm(self):
        assert oracle_enumerate_pms([0, 1], [2], [(0, 2)]) == []

    def test_cap(self):
        with pytest.raises(OracleScaleError):
            oracle_enumerate_pms(list(range(7)), list(range(7, 14)), [])


class TestSeriesInverse:
    def test_identity_on_zero(self):
        rows = oracle_series_inverse([[0, 0], [0, 0]], 4)
        assert rows == [[1, 0], [0, 1]]

    def test_nilpotent_chain(self):
        # N = x*E01; sum N^i = I + x*E01
        rows = oracle_series_inverse([[0, 0b10], [0, 0]], 4)
        assert rows == [[1, 0b10], [0, 1]]

    def test_matches_naive_power_sum(self):
        import random

        from dyniso.polyseries import PolyMatrix, polymat_mul

        rng = random.Random(0)
        n, m = 3, 8
        N = [[rng.getrandbits(m + 1) & ~1 for _ in range(n)] for _ in range(n)]
        want = PolyMatrix.identity(n, m)
        Np = PolyMatrix(n, n, m, N)
        acc = PolyMatrix.identity(n, m)
        for _ in range(m):
            acc = polymat_mul(acc, Np)
            want = want + acc
        assert oracle_series_inverse(N, m) == want.data

    def test_nonzero_constant_rejected(self):
        with pytest.raises(ParameterError):
            oracle_series_inverse([[1]], 3)
