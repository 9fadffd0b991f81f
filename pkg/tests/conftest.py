import math

import numpy as np
import pytest

from gpysieve.arith import build_factor_table


@pytest.fixture(scope="session")
def table():
    """Factor table shared by every test that stays below one million."""
    return build_factor_table(10**6)


def trial_factor(n: int) -> list[tuple[int, int]]:
    out, p = [], 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e:
            out.append((p, e))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def mobius_sieve(limit: int) -> np.ndarray:
    """Independent Moebius values by the linear sieve."""
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    is_comp = np.zeros(limit + 1, dtype=bool)
    for p in range(2, limit + 1):
        if not is_comp[p]:
            is_comp[2 * p :: p] = True
            mu[p::p] *= -1
            if p * p <= limit:
                mu[p * p :: p * p] = 0
    return mu


def naive_big_lambda(n: int, offsets, a: int, R: int) -> float:
    """Loop every d <= R and test d | prod(n + h)."""
    P = math.prod(n + h for h in offsets)
    mu = mobius_sieve(R)
    total = math.fsum(
        int(mu[d]) * math.log(R / d) ** a for d in range(1, R + 1) if mu[d] and P % d == 0
    )
    return total / math.factorial(a)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
