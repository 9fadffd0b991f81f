"""Positivity sum behind the F2 bound, the closed-form delta', and the lambda optimizer.

With ``x = Theta/lambda`` the sign of

    sum_{r=0}^{k} f(r) P(r, delta),    f(r) = C(k, r)^2 x^r / ((r+1)(r+2)...(r+2l)),

    P(r, delta) = 2 a(1,0,l) k x / (r+2l+1) + 1 - 2x/Theta
                  - 6 delta^3 / (Theta x^2) * S(r)

decides whether ``F2 <= lambda (1 - delta)`` follows. Here
``S(r) = sum_{j1,j2<=3} x^(j1+j2) mu(j1,j2,k,l,r)`` exactly, or its upper
bound ``(2x(k-r)/r + 1)^6`` (bound form, ``r >= 1``).

The sum is evaluated in log space. ``f(r+1)/f(r) = (k-r)^2 x / ((r+1)(r+2l+1))``
is strictly decreasing in ``r``, so ``f`` is log-concave. Terms are summed
exactly over a window around the peak. Both tails are bounded by geometric
series times a bound on ``|P|`` there, which gives a certified sign for
``k`` far beyond what an O(k) loop could reach.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from gpysieve.errors import DomainError

SQRT2_MINUS_1 = math.sqrt(2.0) - 1.0
BOUNDARY_LAMBDA = SQRT2_MINUS_1 * SQRT2_MINUS_1
TWO_SQRT2 = 2.0 * math.sqrt(2.0)
EPS = np.finfo(float).eps
DEFAULT_L_FACTORS = (0.35, 0.7, 1.4)


def default_theta(l: int) -> float:
    """``(1/4)(1 - 1/l)`` for ``l >= 2``; 1/4 below, where that expression fails."""
    return 0.25 * (1.0 - 1.0 / l) if l >= 2 else 0.25


@dataclass(frozen=True)
class F2Params:
    lambda_: float
    delta: float
    k: int
    l: int
    theta: float | None = None

    def __post_init__(self):
        if self.theta is None:
            object.__setattr__(self, "theta", default_theta(self.l))
        if self.lambda_ <= 0:
            raise DomainError(f"lambda must be > 0, got {self.lambda_}")
        if not 0 <= self.delta < 0.5:
            raise DomainError(f"delta must lie in [0, 1/2), got {self.delta}")
        if self.k < 1 or self.l < 0:
            raise DomainError(f"need k >= 1 and l >= 0, got k={self.k}, l={self.l}")
        if not 0 < self.theta <= 0.25:
            raise DomainError(f"Theta must lie in (0, 1/4], got {self.theta}")

    @property
    def x(self) -> float:
        return self.theta / self.lambda_

    @property
    def z(self) -> float:
        return 1.0 / math.sqrt(self.x)

    @property
    def r0(self) -> int:
        return int(self.k // (self.z + 1.0))


# --- combinatorial factors ------------------------------------------------


def gamma_fn(j: int, k: int, r: int) -> float:
    """Falling product ``(k-r)(k-r-1)...(k-r-j+1)``; 1 for ``j = 0``."""
    return float(math.prod(k - r - i for i in range(j)))


def beta_fn(j1: int, j2: int, l: int, r: int) -> float:
    """Rising product ``(r+2l+1)...(r+2l+j1+j2)``; 1 for ``j1 + j2 = 0``."""
    return float(math.prod(r + 2 * l + i for i in range(1, j1 + j2 + 1)))


def a_fn(j1: int, j2: int, l: int) -> float:
    """``C(2l+j1+j2, l+j1) / C(2l, l)``, from the short products that survive cancellation."""
    num = math.prod(2 * l + i for i in range(1, j1 + j2 + 1))
    den = math.prod(l + i for i in range(1, j1 + 1)) * math.prod(l + i for i in range(1, j2 + 1))
    return num / den


def mu_fn(j1: int, j2: int, k: int, l: int, r: int) -> float:
    return (
        gamma_fn(j1, k, r)
        * gamma_fn(j2, k, r)
        * a_fn(j1, j2, l)
        / beta_fn(j1, j2, l, r)
        * math.comb(3, j1)
        * math.comb(3, j2)
    )


def f_weight_log(r, k: int, l: int, x: float):
    """``log f(r)`` through log-gamma; accepts a scalar or an array of ``r``."""
    r = np.asarray(r, dtype=np.float64)
    out = (
        2.0 * (gammaln(k + 1.0) - gammaln(r + 1.0) - gammaln(k - r + 1.0))
        + r * math.log(x)
        - (gammaln(r + 2.0 * l + 1.0) - gammaln(r + 1.0))
    )
    return float(out) if out.ndim == 0 else out


def _log_ratio(r: np.ndarray, k: int, l: int, log_x: float) -> np.ndarray:
    # log f(r+1) - log f(r)
    return 2.0 * np.log(k - r) - np.log(r + 1.0) - np.log(r + 2.0 * l + 1.0) + log_x


def _s_exact(r: np.ndarray, k: int, l: int, x: float) -> np.ndarray:
    s = np.zeros_like(r)
    for j1 in range(4):
        for j2 in range(4):
            g1 = np.ones_like(r)
            for i in range(j1):
                g1 = g1 * (k - r - i)
            g2 = np.ones_like(r)
            for i in range(j2):
                g2 = g2 * (k - r - i)
            beta = np.ones_like(r)
            for i in range(1, j1 + j2 + 1):
                beta = beta * (r + 2 * l + i)
            coef = a_fn(j1, j2, l) * math.comb(3, j1) * math.comb(3, j2) * x ** (j1 + j2)
            s += coef * g1 * g2 / beta
    return s


def _s_bound(r: np.ndarray, k: int, x: float) -> np.ndarray:
    return (2.0 * x * (k - r) / r + 1.0) ** 6


def _p_values(r: np.ndarray, params: F2Params, use_bound: bool) -> np.ndarray:
    k, l, x, th, d = params.k, params.l, params.x, params.theta, params.delta
    base = 2.0 * a_fn(1, 0, l) * k * x / (r + 2 * l + 1) + 1.0 - 2.0 * x / th
    coef = 6.0 * d**3 / (th * x * x)
    if coef == 0.0:
        return base
    s = np.empty_like(r)
    if use_bound:
        pos = r >= 1
        s[pos] = _s_bound(r[pos], k, x)
        s[~pos] = _s_exact(r[~pos], k, l, x)
    else:
        s[:] = _s_exact(r, k, l, x)
    return base - coef * s


def p_term(r: int, params: F2Params, use_bound: bool = False) -> float:
    """``P(r, delta)``, with the exact ``mu`` double sum or the sixth-power bound."""
    if use_bound and r < 1:
        raise DomainError("the bound form of P divides by r; it needs r >= 1")
    if not 0 <= r <= params.k:
        raise DomainError(f"r={r} outside [0, k={params.k}]")
    return float(_p_values(np.array([float(r)]), params, use_bound)[0])


# --- positivity sum -------------------------------------------------------


@dataclass(frozen=True)
class PositivityReport:
    """Sign of ``sum f(r) P(r)`` with a certificate.

    ``shifted_total`` is the window sum divided by ``exp(shift)``, the largest
    ``f``. ``tail_bound`` bounds the omitted terms in the same units, and
    ``rounding_bound`` bounds floating-point error. The sign is ``"0"`` when
    those bounds do not exclude zero.
    """

    params: F2Params
    use_bound: bool
    total_sign: str
    log_magnitude: float | None
    shifted_total: float
    shift: float
    tail_bound: float
    rounding_bound: float
    r0: int
    argmax: int
    window: tuple[int, int]
    r: np.ndarray = field(repr=False, compare=False)
    log_f: np.ndarray = field(repr=False, compare=False)
    P: np.ndarray = field(repr=False, compare=False)

    @property
    def positive(self) -> bool:
        return self.total_sign == "+"

    def breakdown(self) -> list[tuple[int, float, float]]:
        return [(int(r), float(f), float(p)) for r, f, p in zip(self.r, self.log_f, self.P)]


def _peak(k: int, l: int, log_x: float) -> int:
    # smallest r with f(r+1) < f(r); log ratios decrease strictly in r
    lo, hi = 0, k
    while lo < hi:
        mid = (lo + hi) // 2
        if _log_ratio(np.array([float(mid)]), k, l, log_x)[0] < 0:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _abs_p_bound(r_min: float, params: F2Params) -> float:
    # |P(r)| for every r >= r_min >= 1 (S_exact <= S_bound there, and S_bound decreases)
    k, l, x, th, d = params.k, params.l, params.x, params.theta, params.delta
    head = 2.0 * a_fn(1, 0, l) * k * x / (r_min + 2 * l + 1) + 1.0 + 2.0 * x / th
    return head + 6.0 * d**3 / (th * x * x) * float(_s_bound(np.array([r_min]), k, x)[0])


def positivity_sum(params: F2Params, use_bound: bool = False, *, drop: float | None = None) -> PositivityReport:
    """Certified sign of ``sum_{r=0}^k f(r) P(r, delta)``.

    With ``use_bound`` the ``r = 0`` term keeps the exact ``P``, since the bound
    form is undefined there. The window runs out until ``log f`` falls
    ``drop`` nats below its peak (by default far enough that the tails cannot
    matter). The window does not depend on ``use_bound``, so exact and
    bound-form reports compare term by term.
    """
    k, l, x = params.k, params.l, params.x
    log_x = math.log(x)
    peak = _peak(k, l, log_x)
    if drop is None:
        drop = 50.0 + math.log(_abs_p_bound(1.0, params)) + math.log(k + 1.0)

    w = int(math.sqrt(2.0 * drop * (k + 1.0))) + 64
    while True:
        lo, hi = max(0, peak - w), min(k, peak + w)
        up = _log_ratio(np.arange(peak, hi, dtype=np.float64), k, l, log_x)
        down = _log_ratio(np.arange(lo, peak, dtype=np.float64), k, l, log_x)
        rel_up = np.concatenate(([0.0], np.cumsum(up)))
        rel_down = -np.cumsum(down[::-1])[::-1]
        if (lo == 0 or rel_down[0] < -drop) and (hi == k or rel_up[-1] < -drop):
            break
        w *= 2
    rel = np.concatenate((rel_down, rel_up))
    keep = np.flatnonzero(rel >= -drop)  # contiguous, by log-concavity
    rel = rel[keep[0] : keep[-1] + 1]
    lo, hi = lo + int(keep[0]), lo + int(keep[-1])
    r = np.arange(lo, hi + 1, dtype=np.float64)
    anchor = f_weight_log(peak, k, l, x)

    if lo > 0:
        r = np.concatenate(([0.0], r))
        rel = np.concatenate(([f_weight_log(0, k, l, x) - anchor], rel))
    P = _p_values(r, params, use_bound)
    terms = np.exp(rel) * P
    total = math.fsum(terms)

    # geometric tails: ratios beyond hi are at most f(hi+1)/f(hi) < 1, those below lo at least f(lo+1)/f(lo)
    tail = 0.0
    if hi < k:
        rho = math.exp(float(_log_ratio(np.array([float(hi)]), k, l, log_x)[0]))
        tail += math.exp(rel[-1]) * rho / (1.0 - rho) * _abs_p_bound(float(hi + 1), params)
    if lo > 1:
        rho = math.exp(-float(_log_ratio(np.array([float(lo)]), k, l, log_x)[0]))
        head = rel[1] if r[0] == 0.0 and lo > 0 else rel[0]
        tail += (
            math.exp(head) * rho / (1.0 - rho) if rho < 1.0 else math.inf
        ) * _abs_p_bound(1.0, params)
    # recursive-summation error of the cumulative log ratios, propagated through exp
    steps = max(peak - lo, hi - peak, 1)
    scale = 4.0 * (math.log(k + 2.0 * l + 2.0) + abs(log_x)) + drop
    rel_err = 2.0 * steps * EPS * scale + 64.0 * EPS
    rounding = math.expm1(rel_err) * math.fsum(np.abs(terms))

    margin = tail + rounding
    if total > margin:
        sign = "+"
    elif total < -margin:
        sign = "-"
    else:
        sign = "0"
    log_mag = anchor + math.log(abs(total)) if total != 0.0 else None
    return PositivityReport(
        params=params,
        use_bound=use_bound,
        total_sign=sign,
        log_magnitude=log_mag,
        shifted_total=total,
        shift=anchor,
        tail_bound=tail,
        rounding_bound=rounding,
        r0=params.r0,
        argmax=peak,
        window=(lo, hi),
        r=r.astype(np.int64),
        log_f=anchor + rel,
        P=P,
    )


# --- closed form and optimizer ---------------------------------------------


@dataclass(frozen=True)
class BoundResult:
    lambda_: float
    delta_prime: float | None
    bound: float | None
    valid: bool
    radicand: float


def delta_prime(lambda_: float) -> BoundResult:
    """``delta' = cbrt(((z+2)^2 - 8) / (24 (z+2)^6))`` with ``z = 2 sqrt(lambda)``.

    ``(z+2)^2 - 8`` is formed as ``2 (sqrt(lambda) - (sqrt 2 - 1)) (z + 2 + 2 sqrt 2)``
    so the boundary ``lambda = (sqrt 2 - 1)^2`` gives exactly 0 instead of a
    rounding residue amplified by the cube root. A negative radicand leaves
    ``delta_prime`` as None and ``valid`` False.
    """
    if lambda_ <= 0:
        raise DomainError(f"lambda must be > 0, got {lambda_}")
    s = math.sqrt(lambda_)
    zp2 = 2.0 * s + 2.0
    radicand = 2.0 * (s - SQRT2_MINUS_1) * (zp2 + TWO_SQRT2) / (24.0 * zp2**6)
    if radicand < 0:
        return BoundResult(lambda_, None, None, False, radicand)
    dp = math.cbrt(radicand) if hasattr(math, "cbrt") else radicand ** (1.0 / 3.0)
    valid = dp < 0.5
    return BoundResult(lambda_, dp, lambda_ * (1.0 - dp) if valid else None, valid, radicand)


def _objective(lam: float) -> float:
    res = delta_prime(lam)
    return res.bound if res.valid else math.inf


def optimize_lambda(lo: float, hi: float, tolerance: float = 1e-10, step: float = 1e-3) -> BoundResult:
    """Minimize ``lambda (1 - delta'(lambda))`` over ``[lo, hi]``.

    A grid of spacing ``step`` locates the best valid point; golden-section
    search then refines inside its neighbouring grid cells.

    Raises:
        DomainError: when no valid lambda lies in the interval.
    """
    if hi < lo or tolerance <= 0:
        raise DomainError(f"need lo <= hi and tolerance > 0, got [{lo}, {hi}], {tolerance}")
    if lo == hi:
        res = delta_prime(lo)
        if not res.valid:
            raise DomainError(f"lambda = {lo} has no valid delta'")
        return res
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, n)
    vals = np.array([_objective(g) for g in grid])
    if not np.isfinite(vals).any():
        raise DomainError(
            f"no lambda in [{lo}, {hi}] has a valid delta' (need lambda >= (sqrt 2 - 1)^2 = {BOUNDARY_LAMBDA:.12g})"
        )
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, n - 1)]
    if not np.isfinite(vals[max(i - 1, 0)]):
        # the bracket's left end is invalid: move it to the validity edge
        a = max(a, BOUNDARY_LAMBDA)
    if i in (0, n - 1) or b - a <= tolerance:
        best = float(grid[i])
    else:
        opt = minimize_scalar(_objective, bracket=(a, float(grid[i]), b), method="golden", tol=tolerance)
        best = float(opt.x) if opt.fun <= vals[i] else float(grid[i])
    return delta_prime(best)


# --- witness search --------------------------------------------------------


@dataclass(frozen=True)
class SearchResult:
    found: bool
    k: int | None
    l: int | None
    theta: float | None
    scanned: int
    futile: bool
    delta_prime: float | None
    report: PositivityReport | None = field(default=None, compare=False)


def default_l_schedule(k: int) -> list[int]:
    """``l`` near ``c sqrt(k)`` for a few ``c``, deduplicated, with ``2 <= l < k``."""
    ls = sorted({max(2, round(c * math.sqrt(k))) for c in DEFAULT_L_FACTORS})
    return [l for l in ls if l < k]


def k_ladder(k_min: int, k_max: int, factor: float = 2.0) -> list[int]:
    ks, k = [], float(k_min)
    while k <= k_max:
        ks.append(int(round(k)))
        k *= factor
    return ks


def search_positive(
    lambda_: float,
    delta: float,
    k_range: Iterable[int],
    l_range: Sequence[int] | None = None,
    *,
    use_bound: bool = True,
    theta: float | None = None,
    workers: int = 1,
) -> SearchResult:
    """First ``(k, l)`` in scan order whose positivity sum is certified positive.

    Candidates are ordered by ``k`` and then ``l``; ``Theta`` defaults to
    ``(1/4)(1 - 1/l)``. Batches of ``workers`` candidates run concurrently,
    and the earliest success in scan order wins, so the answer does not
    depend on ``workers``.
    """
    dp = delta_prime(lambda_)
    futile = not dp.valid or delta >= dp.delta_prime
    if futile:
        warnings.warn(
            f"delta = {delta} is not below delta'({lambda_}) = {dp.delta_prime}; "
            "no witness is expected",
            stacklevel=2,
        )
    cands = [
        (k, l)
        for k in k_range
        for l in (l_range if l_range is not None else default_l_schedule(k))
        if 0 <= l and k >= 1
    ]

    def run(c):
        return positivity_sum(F2Params(lambda_, delta, c[0], c[1], theta), use_bound)

    scanned = 0
    batch = max(1, workers)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for start in range(0, len(cands), batch):
            chunk = cands[start : start + batch]
            reps = list(pool.map(run, chunk)) if pool else [run(c) for c in chunk]
            for c, rep in zip(chunk, reps):
                scanned += 1
                if rep.positive:
                    return SearchResult(True, c[0], c[1], rep.params.theta, scanned, futile, dp.delta_prime, rep)
    finally:
        if pool:
            pool.shutdown()
    return SearchResult(False, None, None, None, scanned, futile, dp.delta_prime, None)
