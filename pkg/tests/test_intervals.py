from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rentspan.intervals import Interval, hull_of_values, intersect, rat


rationals = st.fractions(min_value=-100, max_value=100, max_denominator=20)


def ivs():
    return st.tuples(rationals, rationals).map(
        lambda t: Interval(min(t), max(t))
    )


def test_constructor_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Interval.of(3, 2)


def test_rat_rejects_floats_and_junk():
    with pytest.raises(TypeError):
        rat(0.1)
    with pytest.raises(ValueError):
        rat("abc")
    assert rat("-3.5") == Fraction(-7, 2)
    assert rat(7) == 7


def test_singleton():
    assert Interval.point(5).is_singleton
    assert not Interval.of(1, 2).is_singleton


def test_intersect_examples():
    # narrowing two overlapping ranges pins the shared endpoint
    assert intersect(Interval.of(2, 3), Interval.of(1, 2)) == Interval.point(2)
    assert intersect(Interval.of(0, 1), Interval.of(0, 1)) == Interval.of(0, 1)
    assert intersect(Interval.of(0, 1), Interval.of(2, 3)) is None


def test_scaled_flips_for_negative_factor():
    assert Interval.of(3, 5).scaled(-2) == Interval.of(-10, -6)
    assert Interval.of(-1, 3).scaled(2) == Interval.of(-2, 6)


def test_four_product_multiplication():
    assert Interval.of(1, 2) * Interval.of(3, 4) == Interval.of(3, 8)
    assert Interval.of(-1, 3) * Interval.of(-2, 2) == Interval.of(-6, 6)


def test_hull_of_values():
    assert hull_of_values([Fraction(1), Fraction(-2), Fraction(3)]) == Interval.of(-2, 3)
    with pytest.raises(ValueError):
        hull_of_values([])


@given(ivs(), ivs())
def test_intersection_is_the_common_part(a, b):
    meet = a.intersect(b)
    if meet is None:
        assert a.hi < b.lo or b.hi < a.lo
    else:
        assert meet.lo == max(a.lo, b.lo) and meet.hi == min(a.hi, b.hi)
        assert a.contains_interval(meet) and b.contains_interval(meet)


@given(ivs(), ivs(), rationals, rationals)
def test_arithmetic_contains_pointwise_results(a, b, fa, fb):
    x = a.lo + (a.hi - a.lo) * abs(fa) / 100 if fa else a.lo
    y = b.lo + (b.hi - b.lo) * abs(fb) / 100 if fb else b.lo
    x = min(max(x, a.lo), a.hi)
    y = min(max(y, b.lo), b.hi)
    assert (a + b).contains(x + y)
    assert (a * b).contains(x * y)


@given(ivs(), ivs())
def test_multiplication_hull_is_tight(a, b):
    products = [a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi]
    assert (a * b) == Interval(min(products), max(products))
