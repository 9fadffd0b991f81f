"""Singular series with a certified truncation error.

    S(H) = prod_p (1 - nu_H(p)/p) (1 - 1/p)^(-k),   nu_H(p) = #{h mod p},  k = |H|.

Primes are split into three ranges:

* ``p <= E = max(span(H), k)``: occupancy is computed exactly.
* ``E < p <= cutoff``: all offsets are distinct mod p, so ``nu = k`` and the
  factor depends on ``k`` only. These logs come from cached compensated
  suffix sums, shared by every tuple of the same size.
* ``p > cutoff``: omitted, and bounded analytically.

Tail bound. For ``p >= 2k`` write ``g(p) = log(1 - k/p) - k log(1 - 1/p)``.
Expanding both logs, the ``1/p`` terms cancel and

    g(p) = -sum_{m>=2} (k^m - k) / (m p^m).

Since ``k^(m-1) - 1 <= (m-1)(k-1) k^(m-2)``,

    (k^m - k)/m = k (k^(m-1) - 1)/m <= (k-1) k^(m-1),

so ``|g(p)| <= (k-1)/k * sum_{m>=2} (k/p)^m <= 2 k (k-1) / p^2`` using
``k/p <= 1/2``. Summing over ``p > Q`` and comparing with the integral of
``1/x^2`` gives ``|sum_{p>Q} g(p)| <= 2 k (k-1) / Q = L``. The true value
therefore lies in ``[value e^-L, value e^L]``, and ``tail_bound =
expm1(L)`` covers both sides (``1 - e^-L <= e^L - 1``). For ``k <= 1`` every
factor is exactly 1, so the bound is 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from gpysieve.arith import primes_up_to
from gpysieve.errors import DomainError
from gpysieve.weights import OffsetTuple

DEFAULT_CUTOFF = 10**6


@dataclass(frozen=True)
class SingularValue:
    """Point value plus multiplicative error: truth in ``value * [1 - e, 1 + e]``."""

    value: float
    tail_bound: float
    cutoff: int

    @property
    def interval(self) -> tuple[float, float]:
        return self.value * (1 - self.tail_bound), self.value * (1 + self.tail_bound)


@dataclass(frozen=True)
class OccupancyProfile:
    p: int
    count: int


def occupancy(tuple: OffsetTuple | Iterable[int], p: int) -> int:
    offs = list(tuple)
    if not offs:
        raise DomainError("occupancy of an empty tuple is undefined")
    return len({h % p for h in offs})


def occupancy_profile(tuple: OffsetTuple, primes: Iterable[int]) -> list[OccupancyProfile]:
    return [OccupancyProfile(int(p), occupancy(tuple, int(p))) for p in primes]


def minimum_cutoff(tuple: OffsetTuple) -> int:
    return max(tuple.span, 2 * tuple.k)


def default_cutoff(tuple: OffsetTuple) -> int:
    return max(DEFAULT_CUTOFF, minimum_cutoff(tuple))


def tail_log_bound(k: int, cutoff: int) -> float:
    """Bound on ``|log|`` of the product over primes above ``cutoff``."""
    return 2.0 * k * (k - 1) / cutoff


@njit(cache=True)
def _suffix_sums(g):
    # out[i] = sum_{j >= i} g[j], Neumaier-compensated, smallest terms first
    n = g.shape[0]
    out = np.zeros(n + 1)
    s = 0.0
    c = 0.0
    for i in range(n - 1, -1, -1):
        x = g[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i] = s + c
    return out


@lru_cache(maxsize=32)
def _generic_suffix(k: int, cutoff: int) -> np.ndarray:
    # suf[i] = sum of g(p_j) over primes p_j <= cutoff with j >= i; g is zeroed for p <= k
    primes = primes_up_to(cutoff).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.log1p(-k / primes) - k * np.log1p(-1.0 / primes)
    g[primes <= k] = 0.0
    suf = _suffix_sums(g)
    suf.flags.writeable = False
    return suf


def _exact_log(offs: np.ndarray, primes: np.ndarray) -> float | None:
    """Sum of exact log factors over ``primes``; None if some class is full."""
    if primes.size == 0:
        return 0.0
    k = offs.size
    res = np.sort(offs[:, None] % primes[None, :], axis=0)
    nu = 1 + np.count_nonzero(np.diff(res, axis=0), axis=0)
    if np.any(nu == primes):
        return None
    pf = primes.astype(np.float64)
    return float(np.sum(np.log1p(-nu / pf) - k * np.log1p(-1.0 / pf)))


@lru_cache(maxsize=1 << 16)
def _series_cached(norm: tuple[int, ...], cutoff: int) -> SingularValue:
    k = len(norm)
    if k <= 1:
        return SingularValue(1.0, 0.0, cutoff)
    offs = np.asarray(norm, dtype=np.int64)
    primes = primes_up_to(cutoff)
    edge = max(norm[-1], k)
    n_exact = int(np.searchsorted(primes, edge, side="right"))
    exact = _exact_log(offs, primes[:n_exact])
    if exact is None:
        return SingularValue(0.0, 0.0, cutoff)
    generic = float(_generic_suffix(k, cutoff)[n_exact])
    value = math.exp(exact + generic)
    return SingularValue(value, math.expm1(tail_log_bound(k, cutoff)), cutoff)


def singular_series(tuple: OffsetTuple, cutoff: int | None = None) -> SingularValue:
    """Singular series of ``tuple`` with primes up to ``cutoff`` taken exactly.

    ``cutoff`` defaults to ``max(10^6, span, 2k)``. The empty tuple gives 1.

    Raises:
        DomainError: if ``cutoff`` is below ``max(span, 2k)``.
    """
    if cutoff is None:
        cutoff = default_cutoff(tuple)
    cutoff = int(cutoff)
    need = minimum_cutoff(tuple)
    if cutoff < need:
        raise DomainError(
            f"cutoff {cutoff} is below the required minimum {need} "
            f"(max of span {tuple.span} and 2k = {2 * tuple.k})"
        )
    if tuple.k == 0:
        return SingularValue(1.0, 0.0, cutoff)
    base = tuple.offsets[0]
    return _series_cached(tuple.shifted(-base).offsets, cutoff)


def singular_series_union(
    tuples: Sequence[OffsetTuple | Iterable[int]], cutoff: int | None = None
) -> SingularValue:
    merged = OffsetTuple.of(h for t in tuples for h in t)
    return singular_series(merged, cutoff)
