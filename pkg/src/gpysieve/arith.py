"""Smallest-prime-factor tables and the arithmetic functions built on them.

Every other module consumes a :class:`FactorTable`: factorizations of
``n + h`` for the weights, primality for the theta weight, and plain prime
lists for the singular series.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit

from gpysieve.errors import DomainError, ResourceError

TABLE_CAP_ENV = "GPYSIEVE_TABLE_CAP"
DEFAULT_TABLE_CAP = 200_000_000


def table_cap() -> int:
    """Largest table limit allowed, read from ``GPYSIEVE_TABLE_CAP``."""
    raw = os.environ.get(TABLE_CAP_ENV)
    if raw is None:
        return DEFAULT_TABLE_CAP
    return int(float(raw))


@dataclass(frozen=True)
class FactorTable:
    """Smallest prime factor of every integer up to ``limit``.

    ``spf[0] = 0`` and ``spf[1] = 1`` by convention. The array is marked
    read-only so a table can be shared between threads.
    """

    limit: int
    spf: np.ndarray

    def is_prime(self, n: int) -> bool:
        _check_range(n, 2, self.limit)
        return int(self.spf[n]) == n


@dataclass(frozen=True)
class Factorization:
    """``(prime, exponent)`` pairs with strictly increasing primes."""

    factors: tuple[tuple[int, int], ...]

    def value(self) -> int:
        return math.prod(p**e for p, e in self.factors)

    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)


@njit(cache=True)
def _spf_sieve(limit):
    spf = np.zeros(limit + 1, dtype=np.int32)
    if limit >= 1:
        spf[1] = 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            if i * i <= limit:
                for j in range(i * i, limit + 1, i):
                    if spf[j] == 0:
                        spf[j] = i
    return spf


def build_factor_table(limit: int, cap: int | None = None) -> FactorTable:
    """Sieve smallest prime factors up to ``limit`` (inclusive).

    Raises:
        DomainError: if ``limit < 2``.
        ResourceError: if ``limit`` exceeds the cap (argument, else the
            ``GPYSIEVE_TABLE_CAP`` environment variable).
    """
    limit = int(limit)
    if limit < 2:
        raise DomainError(f"factor table limit must be >= 2, got {limit}")
    cap = table_cap() if cap is None else cap
    if limit > cap:
        raise ResourceError(
            f"factor table limit {limit} exceeds the cap {cap} "
            f"(raise it with {TABLE_CAP_ENV})"
        )
    spf = _spf_sieve(limit)
    spf.flags.writeable = False
    return FactorTable(limit=limit, spf=spf)


def _check_range(n: int, lo: int, hi: int) -> None:
    if not lo <= n <= hi:
        raise DomainError(f"n={n} outside the supported range [{lo}, {hi}]")


def factorize(n: int, table: FactorTable) -> Factorization:
    _check_range(n, 2, table.limit)
    spf = table.spf
    factors = []
    while n > 1:
        p = int(spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        factors.append((p, e))
    return Factorization(tuple(factors))


def mobius(n: int, table: FactorTable) -> int:
    _check_range(n, 1, table.limit)
    if n == 1:
        return 1
    f = factorize(n, table)
    if any(e > 1 for _, e in f.factors):
        return 0
    return -1 if len(f.factors) % 2 else 1


def theta(n: int, table: FactorTable) -> float:
    """Chebyshev weight: ``log n`` if ``n`` is prime, else exactly 0."""
    _check_range(n, 2, table.limit)
    return math.log(n) if int(table.spf[n]) == n else 0.0


def mobius_trial(n: int) -> int:
    """Moebius function by trial division, for values off any table."""
    if n < 1:
        raise DomainError(f"mobius needs n >= 1, got {n}")
    sign = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1 if p == 2 else 2
    if n > 1:
        sign = -sign
    return sign


@lru_cache(maxsize=8)
def primes_up_to(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as a read-only int64 array (Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    primes = np.flatnonzero(is_prime).astype(np.int64)
    primes.flags.writeable = False
    return primes
