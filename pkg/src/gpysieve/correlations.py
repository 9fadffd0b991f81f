"""Weighted correlation sums over ``N < n <= 2N`` and their main terms.

A :class:`CorrelationSpec` describes a product of 0-2 theta factors
``theta(n + h0)`` and 1-4 weights ``big_lambda(n, H_i, k_i + l_i)``. The
main-term predictors are:

* two weights, no theta:
  ``C(l1+l2, l1) (log R)^(r+l1+l2) / (r+l1+l2)! * S(H1 u H2) * N``
* one theta at ``h0`` not in either tuple: same shape, with ``S(H u {h0})``
* four weights with ``(H1 u H2)`` disjoint from ``(H3 u H4)``:
  ``C(l1+l2, l1) C(l3+l4, l3) N (log R)^(u+v) / (u! v!) * S(union)``,
  ``u = l1 + l2 + r1``, ``v = l3 + l4 + r2``

Here ``r = |H1 n H2|``. The empirical sum is reduced in fixed chunks, each
with Neumaier compensation, merged in index order, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from gpysieve.arith import FactorTable, build_factor_table, theta
from gpysieve.errors import DomainError, ResourceError
from gpysieve.singular import SingularValue, singular_series_union
from gpysieve.weights import (
    OffsetTuple,
    WeightSpec,
    big_lambda,
    big_lambda_range,
    theta_range,
)

log = logging.getLogger(__name__)

DEFAULT_THETA_EXPONENT = 0.24
DEFAULT_LAMBDA = 1.0
CHUNK = 1 << 16

DISJOINTNESS = "(H1 u H2) n (H3 u H4) = {} must hold"


@dataclass(frozen=True)
class SieveParams:
    """Scale parameters: ``R = floor(N^Theta)``, ``h = floor(lambda log 3N)``."""

    N: int
    theta_exponent: float = DEFAULT_THETA_EXPONENT
    lambda_: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if self.N < 2:
            raise DomainError(f"N must be >= 2, got {self.N}")
        if not 0 < self.theta_exponent < 0.5:
            raise DomainError(f"Theta must lie in (0, 1/2), got {self.theta_exponent}")
        if self.R < 2:
            raise DomainError(f"R = floor(N^Theta) = {self.R} must be >= 2")
        if self.theta_exponent > 0.25 + 1e-9:
            warnings.warn(
                f"Theta = {self.theta_exponent} > 1/4: the theta-weighted and "
                "four-weight asymptotics assume R << N^(1/4)",
                stacklevel=2,
            )

    @property
    def R(self) -> int:
        # guard exact powers such as 10^(4 * 0.25) against rounding below
        return int(math.floor(self.N**self.theta_exponent * (1 + 1e-12)))

    @property
    def h(self) -> int:
        return int(math.floor(self.lambda_ * math.log(3 * self.N)))

    @property
    def log_R(self) -> float:
        return math.log(self.R)


@dataclass(frozen=True)
class CorrelationSpec:
    """Theta offsets plus weight tuples with their extra log powers ``l_i``."""

    theta_offsets: tuple[int, ...] = ()
    tuples: tuple[OffsetTuple, ...] = ()
    ls: tuple[int, ...] = ()

    def __post_init__(self):
        tuples = tuple(t if isinstance(t, OffsetTuple) else OffsetTuple.of(t) for t in self.tuples)
        object.__setattr__(self, "tuples", tuples)
        object.__setattr__(self, "theta_offsets", tuple(int(h) for h in self.theta_offsets))
        ls = tuple(int(l) for l in self.ls) if self.ls else (0,) * len(tuples)
        object.__setattr__(self, "ls", ls)
        if len(set(self.theta_offsets)) != len(self.theta_offsets):
            raise DomainError("theta offsets must be distinct")
        if len(self.theta_offsets) > 2:
            raise DomainError("at most two theta factors are supported")
        if not 1 <= len(tuples) <= 4:
            raise DomainError(f"need 1 to 4 weights, got {len(tuples)}")
        if len(ls) != len(tuples):
            raise DomainError(f"{len(ls)} l values for {len(tuples)} tuples")
        if any(l < 0 for l in ls):
            raise DomainError("l values must be >= 0")

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(t.k for t in self.tuples)

    @property
    def M(self) -> int:
        return sum(self.ks) + sum(self.ls)

    @property
    def r1(self) -> int:
        return _overlap(self.tuples, 0, 1)

    @property
    def r2(self) -> int:
        return _overlap(self.tuples, 2, 3)

    @property
    def max_offset(self) -> int:
        offs = [h for t in self.tuples for h in t] + list(self.theta_offsets)
        return max(offs, default=0)

    def weight_specs(self, R: int) -> list[WeightSpec]:
        return [WeightSpec(t, t.k + l, R) for t, l in zip(self.tuples, self.ls)]

    def summary(self) -> dict:
        return {
            "theta_offsets": list(self.theta_offsets),
            "tuples": [list(t.offsets) for t in self.tuples],
            "ls": list(self.ls),
            "ks": list(self.ks),
            "M": self.M,
        }


def _overlap(tuples, i, j) -> int:
    if len(tuples) <= max(i, j):
        return 0
    return len(set(tuples[i]) & set(tuples[j]))


@dataclass(frozen=True)
class MainTerm:
    """A predicted main term with the singular-series certificate folded in."""

    value: float
    singular: SingularValue
    admissible: bool
    u: int
    v: int = 0

    @property
    def band(self) -> tuple[float, float]:
        e = self.singular.tail_bound
        return self.value * (1 - e), self.value * (1 + e)


@dataclass(frozen=True)
class CorrelationReport:
    mode: str
    empirical: float
    main_term: float
    ratio: float
    main_band: tuple[float, float]
    params: SieveParams
    spec: dict = field(default_factory=dict)
    u: int = 0
    v: int = 0


def table_for(spec: CorrelationSpec, params: SieveParams) -> FactorTable:
    """A factor table covering ``2N + max(h, max offset)``."""
    return build_factor_table(2 * params.N + max(params.h, spec.max_offset))


@njit(cache=True, nogil=True)
def _neumaier(values):
    s = 0.0
    c = 0.0
    for x in values:
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
    return s, c


def _merge(partials: Sequence[tuple[float, float]]) -> float:
    sums = np.array([p[0] for p in partials])
    comps = np.array([p[1] for p in partials])
    s, c = _neumaier(sums)
    s2, c2 = _neumaier(comps)
    return s + (c + s2 + c2)


def _chunk_terms(lo, hi, spec, specs, table):
    # distinct weights are evaluated once; the product order is fixed
    cache: dict[WeightSpec, np.ndarray] = {}
    prod = np.ones(hi - lo)
    for h0 in spec.theta_offsets:
        prod *= theta_range(lo, hi, h0, table)
    for ws in specs:
        if ws not in cache:
            cache[ws] = big_lambda_range(lo, hi, ws, table)
        prod *= cache[ws]
    return prod


def empirical_sum(
    spec: CorrelationSpec,
    params: SieveParams,
    table: FactorTable,
    *,
    workers: int = 1,
) -> float:
    """``sum_{N < n <= 2N} prod theta(n + h0) * prod big_lambda(n, H_i, k_i + l_i)``."""
    top = 2 * params.N + spec.max_offset
    if top > table.limit:
        raise ResourceError(f"factor table limit {table.limit} does not cover {top}")
    specs = spec.weight_specs(params.R)
    lo, hi = params.N + 1, 2 * params.N + 1
    bounds = [(s, min(s + CHUNK, hi)) for s in range(lo, hi, CHUNK)]

    def run(b):
        return _neumaier(_chunk_terms(b[0], b[1], spec, specs, table))

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            partials = list(pool.map(run, bounds))
    else:
        partials = [run(b) for b in bounds]
    return _merge(partials)


def _pair_factor(l1: int, l2: int, r: int, log_R: float) -> float:
    u = l1 + l2 + r
    return math.comb(l1 + l2, l1) * log_R**u / math.factorial(u)


def _main(N, factors, sv, u, v=0) -> MainTerm:
    if sv.value == 0.0:
        return MainTerm(0.0, sv, False, u, v)
    value = float(N)
    for f in factors:
        value *= f
    return MainTerm(value * sv.value, sv, True, u, v)


def _require(spec: CorrelationSpec, n_weights: int, n_theta: int, name: str) -> None:
    if len(spec.tuples) != n_weights or len(spec.theta_offsets) != n_theta:
        raise DomainError(
            f"{name} needs {n_weights} weights and {n_theta} theta factors, "
            f"got {len(spec.tuples)} and {len(spec.theta_offsets)}"
        )


def main_term_prop1(spec: CorrelationSpec, params: SieveParams, cutoff: int | None = None) -> MainTerm:
    _require(spec, 2, 0, "the two-weight main term")
    l1, l2 = spec.ls
    r = spec.r1
    sv = singular_series_union(spec.tuples, cutoff)
    return _main(params.N, [_pair_factor(l1, l2, r, params.log_R)], sv, l1 + l2 + r)


def main_term_prop2(spec: CorrelationSpec, params: SieveParams, cutoff: int | None = None) -> MainTerm:
    _require(spec, 2, 1, "the theta-weighted main term")
    (h0,) = spec.theta_offsets
    if any(h0 in t for t in spec.tuples):
        raise DomainError(
            f"theta offset h0={h0} lies in a weight tuple; remove it with the prime-shift "
            "identity big_lambda(n, H, k+l) = big_lambda(n, H - {h0}, (k-1)+(l+1)) first"
        )
    l1, l2 = spec.ls
    r = spec.r1
    sv = singular_series_union([*spec.tuples, (h0,)], cutoff)
    return _main(params.N, [_pair_factor(l1, l2, r, params.log_R)], sv, l1 + l2 + r)


def main_term_thm1(spec: CorrelationSpec, params: SieveParams, cutoff: int | None = None) -> MainTerm:
    _require(spec, 4, 0, "the four-weight main term")
    t = spec.tuples
    left = set(t[0]) | set(t[1])
    right = set(t[2]) | set(t[3])
    if left & right:
        raise DomainError(f"{DISJOINTNESS}; shared offsets {sorted(left & right)}")
    l1, l2, l3, l4 = spec.ls
    r1, r2 = spec.r1, spec.r2
    sv = singular_series_union(t, cutoff)
    factors = [_pair_factor(l1, l2, r1, params.log_R)]
    # an empty second pair gives the factor 1.0 exactly, reproducing the two-weight term
    factors.append(_pair_factor(l3, l4, r2, params.log_R))
    return _main(params.N, factors, sv, l1 + l2 + r1, l3 + l4 + r2)


def main_term(spec: CorrelationSpec, params: SieveParams, cutoff: int | None = None) -> tuple[str, MainTerm]:
    """Pick the predictor matching the spec's shape."""
    nw, nt = len(spec.tuples), len(spec.theta_offsets)
    if nw == 2 and nt == 0:
        return "prop1", main_term_prop1(spec, params, cutoff)
    if nw == 2 and nt == 1:
        return "prop2", main_term_prop2(spec, params, cutoff)
    if nw == 4 and nt == 0:
        return "thm1", main_term_thm1(spec, params, cutoff)
    raise DomainError(f"no main-term predictor for {nw} weights and {nt} theta factors")


def correlate(
    spec: CorrelationSpec,
    params: SieveParams,
    table: FactorTable | None = None,
    *,
    cutoff: int | None = None,
    workers: int = 1,
) -> CorrelationReport:
    mode, mt = main_term(spec, params, cutoff)
    table = table if table is not None else table_for(spec, params)
    emp = empirical_sum(spec, params, table, workers=workers)
    ratio = emp / mt.value if mt.value else math.nan
    return CorrelationReport(
        mode=mode,
        empirical=emp,
        main_term=mt.value,
        ratio=ratio,
        main_band=mt.band,
        params=params,
        spec=spec.summary(),
        u=mt.u,
        v=mt.v,
    )


def convergence_ladder(
    spec: CorrelationSpec,
    N_values: Sequence[int],
    theta_exponent: float = DEFAULT_THETA_EXPONENT,
    *,
    lambda_: float = DEFAULT_LAMBDA,
    cutoff: int | None = None,
    workers: int = 1,
    table: FactorTable | None = None,
) -> list[CorrelationReport]:
    """Reports for each ``N`` in ascending order, sharing one factor table."""
    Ns = sorted(int(n) for n in N_values)
    if not Ns:
        return []
    params = [SieveParams(n, theta_exponent, lambda_) for n in Ns]
    if table is None or table.limit < 2 * Ns[-1] + max(params[-1].h, spec.max_offset):
        table = table_for(spec, params[-1])
    reports = []
    for p in params:
        rep = correlate(spec, p, table, cutoff=cutoff, workers=workers)
        log.info("N=%d R=%d ratio=%.6f", p.N, p.R, rep.ratio)
        reports.append(rep)
    return reports


@dataclass(frozen=True)
class Eq1Check:
    holds: bool
    lhs: float
    rhs: float


def eq1_bound_check(
    n: int,
    h0: int,
    h1: int,
    family: Sequence[OffsetTuple],
    params: SieveParams,
    table: FactorTable,
    *,
    l: int = 0,
) -> Eq1Check:
    """Pointwise check of the two-prime bound.

    ``lhs = theta(n+h0) theta(n+h1) (sum_H big_lambda(n, H, |H|+l))^2`` and
    ``rhs = Omega big_lambda(n, {h0,h1}, 2)^2 (sum_H big_lambda(n, H - {h0,h1}, |H|+l))^2``
    with ``Omega = 4 log^2(3N) / log^4 R``. Equality cases are absorbed with a
    relative slack of ``1e-12``.
    """
    R = params.R
    pair = OffsetTuple.of((h0, h1))
    th = theta(n + h0, table) * theta(n + h1, table)
    full = math.fsum(big_lambda(n, WeightSpec(H, H.k + l, R), table) for H in family)
    reduced = math.fsum(
        big_lambda(n, WeightSpec(H.without(h0, h1), H.k + l, R), table) for H in family
    )
    omega = 4 * math.log(3 * params.N) ** 2 / params.log_R**4
    lam2 = big_lambda(n, WeightSpec(pair, 2, R), table)
    lhs = th * full * full
    rhs = omega * lam2 * lam2 * reduced * reduced
    return Eq1Check(lhs <= rhs * (1 + 1e-12), lhs, rhs)


def eq1_scan(
    h0: int,
    h1: int,
    family: Sequence[OffsetTuple],
    params: SieveParams,
    table: FactorTable,
    *,
    l: int = 0,
) -> dict:
    """Run :func:`eq1_bound_check` over every ``n`` in ``(N, 2N]``."""
    failures = []
    checked = 0
    for n in range(params.N + 1, 2 * params.N + 1):
        c = eq1_bound_check(n, h0, h1, family, params, table, l=l)
        checked += 1
        if not c.holds:
            failures.append(n)
    return {"checked": checked, "violations": len(failures), "first_violations": failures[:10]}
