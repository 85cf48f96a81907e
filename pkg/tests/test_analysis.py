import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from afdxsim.analysis import build_ecdf, ecdf_csv, percentile, series_stats

samples_st = st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=200)


def brute_cdf(xs, x):
    return Fraction(sum(1 for s in xs if s <= x), len(xs))


def brute_percentile(xs, p):
    for x in sorted(xs):
        if brute_cdf(xs, x) * 100 >= p:
            return x


def test_examples():
    e = build_ecdf([3, 1, 2, 2])
    assert e(0) == 0 and e(1) == Fraction(1, 4) and e(2) == Fraction(3, 4) and e(3) == 1
    assert percentile(e, 50) == 2 and percentile(e, 100) == 3 and percentile(e, 25) == 1


def test_empty_and_range():
    with pytest.raises(ValueError):
        build_ecdf([])
    with pytest.raises(ValueError):
        percentile(build_ecdf([1]), 0)
    with pytest.raises(ValueError):
        percentile(build_ecdf([1]), 101)


def test_stats():
    s = series_stats(list(range(1, 101)))
    assert (s.n, s.min, s.max, s.mean, s.p50, s.p95, s.p99, s.outliers) == (100, 1, 100, 50.5, 50, 95, 99, 1)


def test_csv():
    assert ecdf_csv(build_ecdf([5, 5, 7])).splitlines() == ["value_ns,cum_fraction", "5,0.6666666667", "7,1"]


@given(samples_st, st.integers(-10**6, 10**6))
def test_matches_brute_force(xs, x):
    assert build_ecdf(xs)(x) == brute_cdf(xs, x)


@given(samples_st, st.integers(1, 100))
def test_percentile_matches_brute_force(xs, p):
    assert percentile(build_ecdf(xs), p) == brute_percentile(xs, p)


@given(samples_st)
def test_monotone_and_normalised(xs):
    e = build_ecdf(xs)
    fr = e.fractions()
    assert fr == sorted(fr) and fr[-1] == 1 and e(e.max) == 1 and e(e.min - 1) == 0


@given(samples_st, st.integers(1, 100), st.integers(1, 100))
def test_percentile_monotone(xs, p, q):
    e = build_ecdf(xs)
    lo, hi = sorted((p, q))
    assert percentile(e, lo) <= percentile(e, hi)


@given(samples_st, st.integers(1, 1000), st.integers(-1000, 1000), st.integers(1, 100))
def test_scale_equivariance(xs, a, b, p):
    e = build_ecdf(xs)
    f = build_ecdf([a * x + b for x in xs])
    assert percentile(f, p) == a * percentile(e, p) + b


@given(samples_st)
def test_outliers_above_p99(xs):
    s = series_stats(xs)
    assert s.outliers == sum(1 for x in xs if x > s.p99)
    assert s.outliers <= len(xs) // 100 + 1


def test_float_samples():
    rng = random.Random(2)
    xs = [rng.random() for _ in range(999)]
    e = build_ecdf(xs)
    assert e(max(xs)) == 1 and percentile(e, 100) == max(xs)
