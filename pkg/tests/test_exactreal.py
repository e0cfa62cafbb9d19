"""Exact quadratic-field arithmetic: the number type everything leans on."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dioplab.exactreal import ExactReal, MixedFieldError, parse_real

small_fractions = st.fractions(min_value=-50, max_value=50, max_denominator=1000)


def test_perfect_square_radicand_folds_to_rational():
    x = ExactReal.sqrt(2025)  # 45**2
    assert x.is_rational
    assert x.as_fraction() == 45
    y = ExactReal.sqrt(45**2 * 5)
    assert not y.is_rational
    assert y.field() == 5


def test_lowest_terms_and_sign_normalization():
    x = ExactReal(2, 4, -6, 8)  # (2 + 4*sqrt(8)) / -6 = (-1 - 4*sqrt(2)) / 3
    assert x.c > 0
    assert x.field() == 2
    assert float(x) == pytest.approx((2 + 4 * 8**0.5) / -6)


def test_zero_denominator_rejected():
    with pytest.raises(ZeroDivisionError):
        ExactReal(1, 1, 0, 2)


def test_negative_radicand_rejected():
    with pytest.raises(ValueError):
        ExactReal(0, 1, 1, -2)


@given(small_fractions, small_fractions)
def test_rational_arithmetic_matches_fraction(a, b):
    x = ExactReal.rational(a)
    y = ExactReal.rational(b)
    assert (x + y).as_fraction() == a + b
    assert (x - y).as_fraction() == a - b
    assert (x * y).as_fraction() == a * b
    if b != 0:
        assert (x / y).as_fraction() == a / b


@given(small_fractions, small_fractions, small_fractions, small_fractions)
def test_field_arithmetic_is_exact(a1, b1, a2, b2):
    # (a1 + b1 sqrt(2)) * (a2 + b2 sqrt(2)) expanded by hand
    x = ExactReal.rational(a1) + ExactReal.sqrt(2, b1)
    y = ExactReal.rational(a2) + ExactReal.sqrt(2, b2)
    prod = x * y
    rational_part = a1 * a2 + 2 * b1 * b2
    radical_part = a1 * b2 + a2 * b1
    expected = ExactReal.rational(rational_part) + ExactReal.sqrt(2, radical_part)
    assert prod.compare(expected) == 0


def test_mixed_field_sum_rejected():
    with pytest.raises(MixedFieldError):
        ExactReal.sqrt(2) + ExactReal.sqrt(3)


def test_cross_field_compare_is_exact():
    # sqrt(2) + sqrt(3) vs sqrt(10): squares are 5 + 2 sqrt(6) = 9.898...
    # vs 10, so sqrt(10) wins; compare on the pieces we can represent:
    assert ExactReal.sqrt(2).compare(ExactReal.sqrt(3)) < 0
    assert ExactReal.sqrt(3).compare(ExactReal.sqrt(2)) > 0
    # equal values across presentations
    assert ExactReal.sqrt(8).compare(ExactReal.sqrt(2, 2)) == 0
    # rational vs radical near-tie: 665857/470832 is a convergent of sqrt(2)
    conv = ExactReal.rational(Fraction(665857, 470832))
    assert conv.compare(ExactReal.sqrt(2)) > 0


def test_golden_ratio_identity():
    phi = ExactReal.golden()
    # phi^2 = phi + 1 exactly
    assert (phi * phi).compare(phi + ExactReal.rational(1)) == 0


@given(small_fractions)
def test_floor_frac_consistency(a):
    x = ExactReal.rational(a) + ExactReal.sqrt(2)
    f = x.floor()
    r = x.frac()
    assert (ExactReal.rational(f) + r).compare(x) == 0
    assert r.compare(ExactReal.rational(0)) >= 0
    assert r.compare(ExactReal.rational(1)) < 0


def test_nearest_int_dist_exact_values():
    two_sqrt2 = ExactReal.sqrt(2, 2)  # 2.828427...
    d = two_sqrt2.nearest_int_dist()
    # |2 sqrt(2) - 3| = 3 - 2 sqrt(2)
    expected = ExactReal.rational(3) - two_sqrt2
    assert d.compare(expected) == 0
    assert ExactReal.rational(7).nearest_int_dist().is_zero()
    assert ExactReal.rational(Fraction(1, 2)).nearest_int_dist().compare(
        ExactReal.rational(Fraction(1, 2))
    ) == 0


@pytest.mark.parametrize("bits", [32, 64, 128, 256])
def test_evaluate_width_contract(bits):
    x = ExactReal(1, 3, 7, 13)
    iv = x.evaluate(bits)
    assert iv.width <= Fraction(1, 2**bits)
    assert float(iv.lo) <= float(x) <= float(iv.hi)


def test_evaluate_scales_with_magnitude():
    big = ExactReal.sqrt(2, 10**9)
    iv = big.evaluate(128)
    assert iv.width <= Fraction(1, 2**128)


@pytest.mark.parametrize(
    "text",
    ["3/7", "-2/5", "(1+2*sqrt(5))/4", "(0+1*sqrt(2))/1", "(-3-2*sqrt(7))/9", "12"],
)
def test_parse_format_round_trip(text):
    x = parse_real(text)
    again = parse_real(x.format())
    assert x.compare(again) == 0


def test_parse_rejects_garbage():
    for bad in ["", "sqrt(2)", "(1+2*sqrt(-3))/4", "1/0", "one"]:
        with pytest.raises((ValueError, ZeroDivisionError)):
            parse_real(bad)


def test_is_integer_and_is_zero():
    assert ExactReal.rational(4).is_integer()
    assert not ExactReal.rational(Fraction(4, 3)).is_integer()
    assert (ExactReal.sqrt(2) - ExactReal.sqrt(2)).is_zero()
    assert not ExactReal.sqrt(2).is_zero()
