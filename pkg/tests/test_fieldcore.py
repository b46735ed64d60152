"""Tests for modular arithmetic, prime enumeration, and FKS selection."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dyniso.errors import (
    BudgetExhaustedError,
    NonInvertibleError,
    ParameterError,
)
from dyniso.fieldcore import (
    FieldPrime,
    PrimeTuple,
    distinct_mod,
    fks_prime_for_set,
    is_prime,
    mod_inverse,
    mod_pow,
    primes_up_to,
)

SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 97, 1009, 1000003)


class TestPrimesUpTo:
    def test_ten(self):
        assert primes_up_to(10) == [2, 3, 5, 7]

    def test_two(self):
        assert primes_up_to(2) == [2]

    def test_hundred(self):
        primes = primes_up_to(100)
        assert len(primes) == 25
        assert primes[-1] == 97

    def test_matches_trial_division_to_1e4(self):
        assert primes_up_to(10**4) == [n for n in range(2, 10**4 + 1) if is_prime(n)]

    def test_bound_below_two_rejected(self):
        with pytest.raises(ParameterError):
            primes_up_to(1)

    def test_bound_over_cap_rejected(self):
        with pytest.raises(ParameterError):
            primes_up_to((1 << 20) + 1)


class TestModPow:
    def test_frozen(self):
        assert mod_pow(2, 10, 1000003) == 1024
        assert mod_pow(2, 0, 7) == 1
        assert mod_pow(3, 100, 101) == 1  # Fermat

    def test_against_naive(self):
        for p in (5, 7, 97):
            for b in range(p):
                acc = 1 % p
                for e in range(13):
                    assert mod_pow(b, e, p) == acc
                    acc = acc * b % p

    def test_accepts_fieldprime(self):
        assert mod_pow(2, 5, FieldPrime(7)) == 32 % 7


class TestModInverse:
    def test_frozen(self):
        assert mod_inverse(1, 7) == 1
        assert mod_inverse(3, 7) == 5
        v = mod_inverse(10, 1000003)
        assert 10 * v % 1000003 == 1

    def test_zero_rejected(self):
        with pytest.raises(NonInvertibleError):
            mod_inverse(0, 7)
        with pytest.raises(NonInvertibleError):
            mod_inverse(14, 7)

    @given(st.sampled_from(SMALL_PRIMES), st.integers(min_value=1, max_value=10**9))
    def test_inverse_contract(self, p, a):
        if a % p == 0:
            a += 1
        assert mod_inverse(a, p) * a % p == 1


class TestFksPrimeForSet:
    def test_frozen(self):
        assert fks_prime_for_set({0, 1, 3}, 4).p == 5
        assert fks_prime_for_set({0, 1}, 2).p == 2
        assert fks_prime_for_set({6, 20, 34}, 5).p == 3

    def test_budget_exhausted(self):
        # 0 and 210 = 2*3*5*7 collide mod every prime below 8
        with pytest.raises(BudgetExhaustedError):
            fks_prime_for_set({0, 210}, 3)

    def test_singleton_rejected(self):
        with pytest.raises(ParameterError):
            fks_prime_for_set({5}, 4)

    @given(st.sets(st.integers(min_value=0, max_value=5000), min_size=2, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_output_separates(self, values):
        try:
            q = fks_prime_for_set(values, 14).p
        except BudgetExhaustedError:
            return
        assert distinct_mod(sorted(values), q)
        # smallest qualifying prime: every smaller prime fails
        for smaller in primes_up_to(max(2, q - 1)):
            if smaller < q:
                assert not distinct_mod(sorted(values), smaller)


class TestTypes:
    def test_fieldprime_rejects_composite(self):
        with pytest.raises(ParameterError):
            FieldPrime(6)

    def test_primetuple_invariants(self):
        PrimeTuple((2, 3, 5), 3)
        with pytest.raises(ParameterError):
            PrimeTuple((2, 2), 3)
        with pytest.raises(ParameterError):
            PrimeTuple((2, 9), 4)
        with pytest.raises(ParameterError):
            PrimeTuple((2, 17), 4)
