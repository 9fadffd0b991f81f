import math
import random

import pytest

from gpysieve import DomainError, ResourceError
from gpysieve.arith import build_factor_table
from gpysieve.correlations import (
    DISJOINTNESS,
    CorrelationSpec,
    SieveParams,
    convergence_ladder,
    correlate,
    empirical_sum,
    eq1_bound_check,
    eq1_scan,
    main_term,
    main_term_prop1,
    main_term_prop2,
    main_term_thm1,
)
from gpysieve.singular import singular_series_union
from gpysieve.weights import OffsetTuple

from conftest import naive_big_lambda

# frozen ratios at N = 10^5, Theta = 0.24 (R = 15)
PINNED_1E5 = {
    "prop1": 0.7632772694395671,
    "prop2": 0.8604369843988761,
    "thm1": 0.7094353550018679,
}
SPECS = {
    "prop1": CorrelationSpec((), ((0, 2), (0, 2))),
    "prop2": CorrelationSpec((0,), ((2,), (2,))),
    "thm1": CorrelationSpec((), ((0,), (0,), (2,), (2,))),
}


def test_sieve_params():
    p = SieveParams(10**6, 0.24)
    assert p.R == math.floor((10**6) ** 0.24) == 27
    assert p.h == math.floor(math.log(3 * 10**6))
    assert SieveParams(10**4, 0.25).R == 10
    with pytest.warns(UserWarning, match="1/4"):
        SieveParams(10**6, 0.4)
    for bad in [dict(N=1), dict(N=10**6, theta_exponent=0.5), dict(N=3, theta_exponent=0.1)]:
        with pytest.raises(DomainError):
            SieveParams(**bad)


def test_spec_validation():
    with pytest.raises(DomainError):
        CorrelationSpec((), ())
    with pytest.raises(DomainError):
        CorrelationSpec((0, 1, 2), ((0,),))
    with pytest.raises(DomainError):
        CorrelationSpec((), ((0,), (2,)), (1,))
    s = CorrelationSpec((), ((0, 2), (2, 6)), (1, 0))
    assert s.ks == (2, 2) and s.M == 5 and s.r1 == 1


def test_empirical_matches_naive_loop():
    spec = CorrelationSpec((1,), ((0, 2), (0, 6)), (1, 0))
    with pytest.warns(UserWarning):
        params = SieveParams(300, 0.45)
    R = params.R
    table = build_factor_table(800)
    want = []
    for n in range(301, 601):
        th = math.log(n + 1) if table.is_prime(n + 1) else 0.0
        want.append(th * naive_big_lambda(n, (0, 2), 3, R) * naive_big_lambda(n, (0, 6), 2, R))
    got = empirical_sum(spec, params, table)
    assert got == pytest.approx(math.fsum(want), rel=1e-9)


def test_workers_bit_identical():
    spec = SPECS["prop1"]
    params = SieveParams(2 * 10**5)
    table = build_factor_table(5 * 10**5)
    one = empirical_sum(spec, params, table, workers=1)
    assert one == empirical_sum(spec, params, table, workers=3)
    assert one == empirical_sum(spec, params, table, workers=8)


def test_table_must_cover():
    with pytest.raises(ResourceError, match="does not cover"):
        empirical_sum(SPECS["prop1"], SieveParams(10**4), build_factor_table(10**4))


def test_prop1_main_term_formula():
    spec = CorrelationSpec((), ((0, 2), (0, 6)), (1, 2))
    p = SieveParams(10**6)
    mt = main_term_prop1(spec, p)
    s = singular_series_union(spec.tuples).value
    u = 1 + 2 + 1
    assert mt.value == pytest.approx(math.comb(3, 1) * math.log(p.R) ** u / math.factorial(u) * s * p.N, rel=1e-14)
    assert mt.u == u and mt.admissible
    lo, hi = mt.band
    assert lo < mt.value < hi


def test_prop2_main_term():
    p = SieveParams(10**6)
    mt = main_term_prop2(SPECS["prop2"], p)
    s = singular_series_union([(2,), (0,)]).value
    assert mt.value == pytest.approx(math.log(p.R) * s * p.N, rel=1e-14)
    with pytest.raises(DomainError, match="prime-shift"):
        main_term_prop2(CorrelationSpec((0,), ((0, 2), (2,))), p)


def test_thm1_disjointness():
    spec = CorrelationSpec((), ((0, 2), (0, 2), (2,), (4,)))
    with pytest.raises(DomainError) as e:
        main_term_thm1(spec, SieveParams(10**5))
    assert DISJOINTNESS in str(e.value)


def test_thm1_with_empty_pair_equals_prop1():
    p = SieveParams(10**6)
    two = main_term_prop1(CorrelationSpec((), ((0, 2), (0, 6)), (1, 0)), p)
    four = main_term_thm1(CorrelationSpec((), ((0, 2), (0, 6), (), ()), (1, 0, 0, 0)), p)
    assert four.value == two.value and four.v == 0


def test_inadmissible_main_term_is_zero():
    mt = main_term_prop1(CorrelationSpec((), ((0, 1), (0, 1))), SieveParams(10**4))
    assert mt.value == 0.0 and not mt.admissible


def test_main_term_dispatch():
    assert main_term(SPECS["thm1"], SieveParams(10**4))[0] == "thm1"
    with pytest.raises(DomainError, match="no main-term predictor"):
        main_term(CorrelationSpec((), ((0,),)), SieveParams(10**4))


@pytest.mark.parametrize("mode", sorted(PINNED_1E5))
def test_pinned_ratios(mode):
    rep = correlate(SPECS[mode], SieveParams(10**5))
    assert rep.mode == mode
    assert rep.ratio == pytest.approx(PINNED_1E5[mode], rel=1e-10)
    assert 0.5 <= rep.ratio <= 2.0


def test_trivial_spec_ratio_is_one():
    reps = convergence_ladder(CorrelationSpec((), ((), ())), [10**4, 3 * 10**4])
    assert [r.ratio for r in reps] == [1.0, 1.0]


def test_ladder_order_and_single_point():
    reps = convergence_ladder(SPECS["prop1"], [10**5, 10**4])
    assert [r.params.N for r in reps] == [10**4, 10**5]
    assert len(convergence_ladder(SPECS["prop1"], [10**4])) == 1
    assert convergence_ladder(SPECS["prop1"], []) == []


class TestEq1:
    params = SieveParams(10**5)
    family = [OffsetTuple((0, 2, 6)), OffsetTuple((0, 2, 8))]

    def test_composite_gives_zero_lhs(self, table):
        # 100001 = 11 * 9091
        c = eq1_bound_check(100001, 0, 2, self.family, self.params, table)
        assert c.lhs == 0.0 and c.holds

    def test_both_primes_large(self, table):
        # 100151 and 100153 are primes above R
        c = eq1_bound_check(100151, 0, 2, self.family, self.params, table)
        assert table.is_prime(100151) and table.is_prime(100153)
        assert c.holds and c.lhs > 0

    def test_random_batch(self, table):
        rng = random.Random(3)
        for n in rng.sample(range(10**5 + 1, 2 * 10**5 + 1), 500):
            assert eq1_bound_check(n, 0, 2, self.family, self.params, table).holds

    def test_scan_small(self, table):
        with pytest.warns(UserWarning):
            params = SieveParams(2000, 0.3)
        out = eq1_scan(0, 2, self.family, params, table)
        assert out == {"checked": 2000, "violations": 0, "first_violations": []}
