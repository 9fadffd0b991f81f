"""Truncated divisor-sum weights.

``lambda_small(d, a, R) = mu(d) log(R/d)^a / a!`` for ``d <= R`` and 0
otherwise, and

    big_lambda(n, H, a) = sum over squarefree d | P(n, H), d <= R of
                          lambda_small(d, a, R),   P(n, H) = prod (n + h).

``P(n, H)`` itself is never formed. The distinct primes ``<= R`` dividing
some ``n + h`` are collected from the factor table, and their subsets are
walked depth-first with the product pruned at ``R``. Every squarefree
divisor ``<= R`` fits in an int64 even when ``P(n, H)`` does not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from gpysieve.arith import FactorTable, factorize, mobius_trial
from gpysieve.errors import DomainError

MAX_OFFSET = 10**7
EXACT_FACTORIAL_MAX = 20


@dataclass(frozen=True)
class OffsetTuple:
    """Strictly increasing non-negative offsets ``h_1 < ... < h_k``."""

    offsets: tuple[int, ...]

    def __post_init__(self):
        offs = tuple(int(h) for h in self.offsets)
        object.__setattr__(self, "offsets", offs)
        if any(h < 0 for h in offs):
            raise DomainError(f"offsets must be non-negative: {offs}")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise DomainError(f"offsets must be strictly increasing: {offs}")
        if offs and offs[-1] > MAX_OFFSET:
            raise DomainError(f"offset {offs[-1]} exceeds the bound {MAX_OFFSET}")

    @classmethod
    def of(cls, values: Iterable[int]) -> "OffsetTuple":
        """Build from any iterable; duplicates merge and order is ignored."""
        return cls(tuple(sorted({int(v) for v in values})))

    @property
    def k(self) -> int:
        return len(self.offsets)

    @property
    def span(self) -> int:
        return self.offsets[-1] - self.offsets[0] if self.offsets else 0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.offsets, dtype=np.int64)

    def without(self, *values: int) -> "OffsetTuple":
        drop = set(values)
        return OffsetTuple(tuple(h for h in self.offsets if h not in drop))

    def shifted(self, c: int) -> "OffsetTuple":
        return OffsetTuple(tuple(h + c for h in self.offsets))

    def __iter__(self):
        return iter(self.offsets)

    def __len__(self):
        return len(self.offsets)

    def __contains__(self, h):
        return h in self.offsets

    def __str__(self):
        return ",".join(map(str, self.offsets))


@dataclass(frozen=True)
class WeightSpec:
    """One weight factor: offset tuple, log exponent ``a`` (= k + l), level ``R``."""

    tuple: OffsetTuple
    a: int
    R: int

    def __post_init__(self):
        if self.a < 0:
            raise DomainError(f"exponent a must be >= 0, got {self.a}")
        if self.R < 1:
            raise DomainError(f"truncation level R must be >= 1, got {self.R}")

    @property
    def l(self) -> int:
        return self.a - self.tuple.k


def inv_factorial(a: int) -> float:
    """``1/a!``: exact integer factorial up to 20, log-gamma beyond."""
    if a <= EXACT_FACTORIAL_MAX:
        return 1.0 / math.factorial(a)
    return math.exp(-math.lgamma(a + 1))


def lambda_small(d: int, a: int, R: int) -> float:
    if d < 1:
        raise DomainError(f"d must be >= 1, got {d}")
    if d > R:
        return 0.0
    mu = mobius_trial(d)
    if mu == 0:
        return 0.0
    return mu * math.log(R / d) ** a * inv_factorial(a)


def _check_cover(n: int, offsets: np.ndarray, table: FactorTable) -> None:
    top = n + (int(offsets[-1]) if offsets.size else 0)
    if n < 1 or top > table.limit:
        raise DomainError(
            f"n={n} with max offset needs the table to cover {top}, "
            f"limit is {table.limit}"
        )


def polynomial_prime_support(
    n: int, tuple: OffsetTuple, table: FactorTable
) -> list[int]:
    """Sorted distinct primes dividing ``P(n, H)``."""
    offs = tuple.as_array()
    _check_cover(n, offs, table)
    primes: set[int] = set()
    for h in tuple:
        if n + h >= 2:
            primes.update(factorize(n + h, table).primes())
    return sorted(primes)


@njit(cache=True, nogil=True)
def _support_le(n, offsets, R, spf, out):
    # distinct primes <= R dividing some n + h, sorted into out[:m]
    m = 0
    for i in range(offsets.shape[0]):
        v = n + offsets[i]
        while v > 1:
            p = spf[v]
            while v % p == 0:
                v //= p
            if p > R:
                continue
            seen = False
            for j in range(m):
                if out[j] == p:
                    seen = True
                    break
            if not seen:
                j = m
                while j > 0 and out[j - 1] > p:
                    out[j] = out[j - 1]
                    j -= 1
                out[j] = p
                m += 1
    return m


@njit(cache=True, nogil=True)
def _divisor_dfs(primes, m, a, R, st_d, st_i, st_s):
    # sum of mu(d) log(R/d)^a over squarefree d <= R built from primes[:m];
    # each push is a distinct divisor <= R, so stacks of length R + 1 suffice
    total = 0.0
    sp = 1
    st_d[0] = 1
    st_i[0] = 0
    st_s[0] = 1
    while sp > 0:
        sp -= 1
        d = st_d[sp]
        start = st_i[sp]
        sign = st_s[sp]
        total += sign * math.log(R / d) ** a
        for i in range(start, m):
            nd = d * primes[i]
            if nd > R:
                break
            st_d[sp] = nd
            st_i[sp] = i + 1
            st_s[sp] = -sign
            sp += 1
    return total


@njit(cache=True, nogil=True)
def _lambda_range(lo, hi, offsets, a, R, inv_fact, spf, out):
    nbuf = offsets.shape[0] * 64 + 1
    pbuf = np.empty(nbuf, dtype=np.int64)
    size = R + 2
    st_d = np.empty(size, dtype=np.int64)
    st_i = np.empty(size, dtype=np.int64)
    st_s = np.empty(size, dtype=np.int64)
    for n in range(lo, hi):
        m = _support_le(n, offsets, R, spf, pbuf)
        out[n - lo] = _divisor_dfs(pbuf, m, a, R, st_d, st_i, st_s) * inv_fact


@njit(cache=True, nogil=True)
def _theta_range(lo, hi, h0, spf, out):
    for n in range(lo, hi):
        v = n + h0
        out[n - lo] = math.log(v) if v >= 2 and spf[v] == v else 0.0


def big_lambda_range(
    lo: int, hi: int, spec: WeightSpec, table: FactorTable
) -> np.ndarray:
    """``big_lambda(n, spec)`` for every ``n`` in ``[lo, hi)``."""
    offs = spec.tuple.as_array()
    if hi <= lo:
        return np.zeros(0)
    _check_cover(lo, offs, table)
    _check_cover(hi - 1, offs, table)
    out = np.empty(hi - lo)
    _lambda_range(lo, hi, offs, spec.a, spec.R, inv_factorial(spec.a), table.spf, out)
    return out


def theta_range(lo: int, hi: int, h0: int, table: FactorTable) -> np.ndarray:
    """``theta(n + h0)`` for every ``n`` in ``[lo, hi)``."""
    if hi <= lo:
        return np.zeros(0)
    if lo + h0 < 0 or hi - 1 + h0 > table.limit:
        raise DomainError(f"theta(n + {h0}) for n in [{lo}, {hi}) leaves the table")
    out = np.empty(hi - lo)
    _theta_range(lo, hi, h0, table.spf, out)
    return out


def big_lambda(n: int, spec: WeightSpec, table: FactorTable) -> float:
    return float(big_lambda_range(n, n + 1, spec, table)[0])


def prime_shift_identity_check(
    n: int, tuple: OffsetTuple, h0: int, a: int, R: int, table: FactorTable
) -> bool:
    """Check ``big_lambda(n, H, a) == big_lambda(n, H - {h0}, a)`` when ``n + h0`` is a prime ``> R``.

    The exponent is unchanged: ``(k - 1) + (l + 1) = k + l``.
    """
    if h0 not in tuple:
        raise DomainError(f"h0={h0} is not in the tuple {tuple}")
    p = n + h0
    if p > table.limit:
        raise DomainError(f"n + h0 = {p} exceeds the table limit {table.limit}")
    if p < 2 or not table.is_prime(p):
        raise DomainError(f"n + h0 = {p} is not prime")
    if p <= R:
        raise DomainError(f"n + h0 = {p} must exceed R = {R}")
    full = big_lambda(n, WeightSpec(tuple, a, R), table)
    reduced = big_lambda(n, WeightSpec(tuple.without(h0), a, R), table)
    return math.isclose(full, reduced, rel_tol=1e-9)
