"""Exhaustive singular-series averages over unions of subsets of subintervals.

For parts ``[B_i, C_i]`` with sizes ``k_i`` the exact sum

    sum over A_1, ..., A_l with A_i a k_i-subset of [B_i, C_i] of S(A_1 u ... u A_l)

is compared with ``prod d_i^k_i / k_i!``. Here ``d_i = C_i - B_i + 1`` counts
integer points, which makes the ``k_i = 1`` case exact. Tuples whose parts
overlap are kept in the sum.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from gpysieve.errors import DomainError, ResourceError
from gpysieve.singular import DEFAULT_CUTOFF, singular_series
from gpysieve.weights import OffsetTuple

DEFAULT_ENUMERATION_CAP = 10**7
MAX_R = 12


@dataclass(frozen=True)
class Part:
    B: int
    C: int
    k: int

    @property
    def d(self) -> int:
        return self.C - self.B + 1


@dataclass(frozen=True)
class SubintervalConfig:
    h: int
    parts: tuple[Part, ...]

    def __post_init__(self):
        parts = tuple(p if isinstance(p, Part) else Part(*p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise DomainError("a subinterval config needs at least one part")
        for p in parts:
            if not 0 <= p.B < p.C <= self.h:
                raise DomainError(f"part [{p.B}, {p.C}] must satisfy 0 <= B < C <= h = {self.h}")
            if p.k < 1:
                raise DomainError(f"part [{p.B}, {p.C}] needs k >= 1, got {p.k}")
            if p.d < p.k:
                raise DomainError(f"part [{p.B}, {p.C}] has {p.d} points, fewer than k = {p.k}")
        if self.r > MAX_R:
            raise DomainError(f"total size r = {self.r} exceeds the cap {MAX_R}")

    @property
    def r(self) -> int:
        return sum(p.k for p in self.parts)

    @property
    def tuple_count(self) -> int:
        return math.prod(math.comb(p.d, p.k) for p in self.parts)

    @property
    def predicted(self) -> float:
        return math.prod(p.d**p.k / math.factorial(p.k) for p in self.parts)


@dataclass(frozen=True)
class SubintervalTemplate:
    """Parts as fractions of ``h``; ``at(h)`` rounds the endpoints to integers."""

    parts: tuple[tuple[float, float, int], ...]

    def at(self, h: int) -> SubintervalConfig:
        return SubintervalConfig(
            h, tuple(Part(round(b * h), round(c * h), k) for b, c, k in self.parts)
        )


@dataclass(frozen=True)
class GallagherReport:
    exact_sum: float
    predicted: float
    ratio: float
    tuple_count: int
    h: int
    error_bound: float
    cutoff: int
    distinct_unions: int = field(default=0, compare=False)


def _cutoff_for(config: SubintervalConfig, cutoff: int | None) -> int:
    need = max(config.h, 2 * config.r)
    if cutoff is None:
        return max(DEFAULT_CUTOFF, need)
    if cutoff < need:
        raise DomainError(f"cutoff {cutoff} is below the required minimum {need}")
    return cutoff


def _partition_sum(first: tuple[int, ...], rest: Sequence[list], cutoff: int):
    values, errors = [], []
    seen: set[tuple[int, ...]] = set()
    for combo in itertools.product(*rest):
        union = set(first)
        for a in combo:
            union.update(a)
        s = singular_series(OffsetTuple(tuple(sorted(union))), cutoff)
        values.append(s.value)
        errors.append(s.value * s.tail_bound)
        offs = sorted(union)
        seen.add(tuple(h - offs[0] for h in offs))
    return math.fsum(values), math.fsum(errors), seen


def exact_average(
    config: SubintervalConfig,
    cutoff: int | None = None,
    *,
    cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> GallagherReport:
    """Enumerate every choice of subsets and sum their singular series.

    Work is split by the first part's subset; partial sums are merged in
    that order, so the result does not depend on ``workers``.

    Raises:
        ResourceError: when the tuple count exceeds ``cap``.
    """
    count = config.tuple_count
    if count > cap:
        raise ResourceError(f"enumeration needs {count} tuples, cap is {cap}")
    cutoff = _cutoff_for(config, cutoff)
    subsets = [
        list(itertools.combinations(range(p.B, p.C + 1), p.k)) for p in config.parts
    ]
    firsts, rest = subsets[0], subsets[1:]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda f: _partition_sum(f, rest, cutoff), firsts))
    else:
        parts = [_partition_sum(f, rest, cutoff) for f in firsts]
    exact = math.fsum(p[0] for p in parts)
    err = math.fsum(p[1] for p in parts)
    seen = set().union(*(p[2] for p in parts))
    predicted = config.predicted
    return GallagherReport(
        exact_sum=exact,
        predicted=predicted,
        ratio=exact / predicted,
        tuple_count=count,
        h=config.h,
        error_bound=err,
        cutoff=cutoff,
        distinct_unions=len(seen),
    )


def ratio_trend(
    template: SubintervalTemplate,
    h_values: Sequence[int],
    cutoff: int | None = None,
    *,
    cap: int = DEFAULT_ENUMERATION_CAP,
    workers: int = 1,
) -> list[GallagherReport]:
    return [
        exact_average(template.at(h), cutoff, cap=cap, workers=workers)
        for h in sorted(h_values)
    ]
