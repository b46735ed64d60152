"""Modular arithmetic over Z_p, prime enumeration, and small-prime selection.

All primes are machine-word sized; every other module funnels its scalar
field arithmetic through here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import BudgetExhaustedError, NonInvertibleError, ParameterError

PRIME_BOUND_CAP = 1 << 20


@dataclass(frozen=True)
class FieldPrime:
    """A prime modulus p; residues are always kept in [0, p)."""

    p: int

    def __post_init__(self):
        if self.p < 2 or not is_prime(self.p):
            raise ParameterError(f"{self.p} is not a prime modulus")

    def __int__(self) -> int:
        return self.p


@dataclass(frozen=True)
class PrimeTuple:
    """An ordered tuple of distinct primes, each below 2**bit_budget."""

    primes: tuple[int, ...]
    bit_budget: int

    def __post_init__(self):
        if len(set(self.primes)) != len(self.primes):
            raise ParameterError("primes must be distinct")
        for q in self.primes:
            if not is_prime(q):
                raise ParameterError(f"{q} is not prime")
            if q >= 1 << self.bit_budget:
                raise ParameterError(f"{q} exceeds the {self.bit_budget}-bit budget")


def is_prime(n: int) -> bool:
    """Deterministic primality for word-sized n (trial division)."""
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def primes_up_to(bound: int) -> list[int]:
    """All primes <= bound, ascending, by sieve of Eratosthenes."""
    if bound < 2:
        raise ParameterError("bound must be >= 2")
    if bound > PRIME_BOUND_CAP:
        raise ParameterError(f"bound {bound} exceeds cap {PRIME_BOUND_CAP}")
    sieve = bytearray([1]) * (bound + 1)
    sieve[0] = sieve[1] = 0
    for i in range(2, int(bound**0.5) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return [i for i in range(2, bound + 1) if sieve[i]]


def mod_pow(base: int, exp: int, p: FieldPrime | int) -> int:
    """base**exp mod p by repeated squaring."""
    return pow(base % int(p), exp, int(p))


def mod_inverse(a: int, p: FieldPrime | int) -> int:
    """Multiplicative inverse of a mod p; a must be non-zero mod p."""
    m = int(p)
    a %= m
    if a == 0:
        raise NonInvertibleError(f"0 has no inverse mod {m}")
    return pow(a, -1, m)


def fks_prime_for_set(values: Iterable[int], bit_budget: int) -> FieldPrime:
    """Smallest prime p < 2**bit_budget separating all the given values.

    Separating means: distinct inputs stay distinct mod p.  Raises
    BudgetExhaustedError when no prime under the budget works; the caller
    is expected to widen the budget.
    """
    vals = sorted(set(values))
    if len(vals) < 2:
        raise ParameterError("need at least two distinct values to separate")
    limit = 1 << bit_budget
    if limit - 1 > PRIME_BOUND_CAP:
        raise ParameterError("bit_budget exceeds the prime-enumeration cap")
    for q in primes_up_to(max(2, limit - 1)):
        residues = {v % q for v in vals}
        if len(residues) == len(vals):
            return FieldPrime(q)
    raise BudgetExhaustedError(
        f"no prime below 2**{bit_budget} separates {len(vals)} values"
    )


def distinct_mod(values: Sequence[int], q: int) -> bool:
    """True iff the values are pairwise distinct mod q."""
    return len({v % q for v in values}) == len(set(values))
