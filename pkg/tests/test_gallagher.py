import itertools
import math

import pytest

from gpysieve import DomainError, ResourceError
from gpysieve.gallagher import (
    Part,
    SubintervalConfig,
    SubintervalTemplate,
    exact_average,
    ratio_trend,
)
from gpysieve.singular import singular_series
from gpysieve.weights import OffsetTuple

from test_singular import direct_product

# frozen from the first verified run (single interval, k = 2, default cutoff 10^6)
SINGLE_K2 = {
    50: 0.8964687013836053,
    100: 0.9407021306246187,
    200: 0.9666098470684333,
    400: 0.9815185233380099,
}
TWO_PART_200 = 0.8932023021720867


def test_config_validation():
    with pytest.raises(DomainError, match="0 <= B < C <= h"):
        SubintervalConfig(10, ((5, 5, 1),))
    with pytest.raises(DomainError, match="0 <= B < C <= h"):
        SubintervalConfig(10, ((0, 11, 1),))
    with pytest.raises(DomainError, match="fewer than k"):
        SubintervalConfig(10, ((0, 2, 4),))
    with pytest.raises(DomainError, match="k >= 1"):
        SubintervalConfig(10, ((0, 2, 0),))
    with pytest.raises(DomainError, match="cap"):
        SubintervalConfig(100, tuple((0, 100, 1) for _ in range(13)))
    with pytest.raises(DomainError):
        SubintervalConfig(10, ())


def test_counts():
    cfg = SubintervalConfig(200, ((0, 50, 2), (150, 200, 1)))
    assert cfg.parts[0] == Part(0, 50, 2) and cfg.parts[0].d == 51
    assert cfg.tuple_count == math.comb(51, 2) * 51 == 65025
    assert cfg.predicted == pytest.approx(51**2 / 2 * 51)


def test_single_point_parts_are_exact():
    rep = exact_average(SubintervalConfig(60, ((0, 60, 1),)))
    assert rep.ratio == 1.0 and rep.error_bound == 0.0
    rep = exact_average(SubintervalConfig(60, ((0, 20, 1), (30, 60, 1))))
    assert rep.tuple_count == 21 * 31 and rep.predicted == 21 * 31


def test_matches_independent_enumeration():
    cfg = SubintervalConfig(16, ((0, 8, 2), (10, 16, 1)))
    cutoff = 3000
    want = []
    for a in itertools.combinations(range(0, 9), 2):
        for b in range(10, 17):
            want.append(direct_product(tuple(sorted(set(a) | {b})), cutoff))
    rep = exact_average(cfg, cutoff)
    assert rep.exact_sum == pytest.approx(math.fsum(want), rel=1e-12)
    assert rep.tuple_count == len(want)


def test_overlapping_parts_are_kept():
    # [0, 4] twice with k = 1: diagonal tuples collapse to singletons with S = 1
    rep = exact_average(SubintervalConfig(4, ((0, 4, 1), (0, 4, 1))), 100)
    off = math.fsum(
        singular_series(OffsetTuple.of((a, b)), 100).value for a in range(5) for b in range(5) if a != b
    )
    assert rep.exact_sum == pytest.approx(5 + off, rel=1e-13)


def test_pair_sum_by_gap():
    h = 50
    rep = exact_average(SubintervalConfig(h, ((0, h, 2),)))
    by_gap = math.fsum((h + 1 - d) * singular_series(OffsetTuple((0, d))).value for d in range(1, h + 1))
    assert rep.exact_sum == pytest.approx(by_gap, rel=1e-12)
    assert rep.distinct_unions == h


def test_error_bound_is_tail_sum():
    rep = exact_average(SubintervalConfig(40, ((0, 40, 2),)), 10**4)
    tb = singular_series(OffsetTuple((0, 2)), 10**4).tail_bound
    assert rep.error_bound <= tb * rep.exact_sum * (1 + 1e-12)
    assert rep.error_bound > 0


@pytest.mark.parametrize("h", sorted(SINGLE_K2))
def test_single_interval_fixtures(h):
    rep = exact_average(SubintervalConfig(h, ((0, h, 2),)))
    assert rep.ratio == pytest.approx(SINGLE_K2[h], rel=1e-12)


def test_two_part_fixture():
    rep = exact_average(SubintervalConfig(200, ((0, 50, 2), (150, 200, 1))))
    assert rep.ratio == pytest.approx(TWO_PART_200, rel=1e-12)
    assert rep.tuple_count == 65025


def test_workers_do_not_change_result():
    cfg = SubintervalConfig(60, ((0, 30, 2), (40, 60, 1)))
    assert exact_average(cfg, workers=1) == exact_average(cfg, workers=4)


def test_cap():
    with pytest.raises(ResourceError, match="cap is 100"):
        exact_average(SubintervalConfig(100, ((0, 100, 2),)), cap=100)


def test_cutoff_floor():
    with pytest.raises(DomainError, match="required minimum 200"):
        exact_average(SubintervalConfig(200, ((0, 200, 1),)), cutoff=100)


def test_template_and_trend():
    tpl = SubintervalTemplate(((0.0, 0.25, 2), (0.75, 1.0, 1)))
    assert tpl.at(200).parts == (Part(0, 50, 2), Part(150, 200, 1))
    reps = ratio_trend(SubintervalTemplate(((0.0, 1.0, 2),)), [100, 50])
    assert [r.h for r in reps] == [50, 100]
    assert abs(reps[1].ratio - 1) < abs(reps[0].ratio - 1)
