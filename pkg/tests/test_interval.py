"""Interval arithmetic: containment soundness and the transcendental leaves."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dioplab.intervalmath import (
    DEFAULT_BITS,
    Interval,
    PrecisionExhausted,
    cos_pi_times,
    cot_pi_times,
    dist_to_int,
    exp_interval,
    frac_part,
    log_interval,
    pi_interval,
    pow_interval,
    sin_pi_times,
    sqrt_fraction,
)

fractions_st = st.fractions(min_value=-100, max_value=100, max_denominator=10**6)


def make_interval(center: Fraction, slack: Fraction) -> Interval:
    return Interval(center - abs(slack), center + abs(slack))


@given(fractions_st, fractions_st, fractions_st, fractions_st)
def test_add_mul_containment(a, b, sa, sb):
    A = make_interval(a, sa)
    B = make_interval(b, sb)
    assert a + b in A + B
    assert a - b in A - B
    assert a * b in A * B


@given(fractions_st, fractions_st)
def test_neg_abs_pow_containment(a, sa):
    A = make_interval(a, sa)
    assert -a in -A
    assert abs(a) in A.abs()
    assert a**3 in A**3
    assert a**2 in A**2
    assert (A**2).lo >= 0


@given(fractions_st, fractions_st)
def test_reciprocal_containment(a, sa):
    A = make_interval(a, sa)
    if A.contains_zero():
        with pytest.raises(PrecisionExhausted):
            A.reciprocal()
    else:
        assert Fraction(1) / a in A.reciprocal()


@given(fractions_st, fractions_st, st.integers(min_value=4, max_value=128))
def test_quantize_keeps_containment(a, sa, bits):
    A = make_interval(a, sa)
    Q = A.quantize(bits)
    assert Q.lo <= A.lo and A.hi <= Q.hi
    assert Q.width <= A.width + 2 * Fraction(1, 2**bits)


def test_point_and_ordering():
    p = Interval.point(Fraction(3, 7))
    assert p.is_point()
    assert p.mid == Fraction(3, 7)
    with pytest.raises(ValueError):
        Interval(Fraction(1), Fraction(0))


def test_certain_comparisons():
    a = Interval(Fraction(0), Fraction(1))
    b = Interval(Fraction(2), Fraction(3))
    assert a.certainly_lt(b)
    assert b.certainly_gt(a)
    assert not a.certainly_lt(Interval(Fraction(1, 2), Fraction(2)))
    assert a.certainly_le(Interval.point(Fraction(1)))


def test_decide_lt_escalation_contract():
    wide = Interval(Fraction(0), Fraction(1))
    with pytest.raises(PrecisionExhausted):
        wide.decide_lt(Fraction(1, 2))


def test_frac_part_and_dist_to_int():
    assert frac_part(Fraction(7, 3)) == Fraction(1, 3)
    assert frac_part(Fraction(-1, 4)) == Fraction(3, 4)
    assert dist_to_int(Fraction(7, 10)) == Fraction(3, 10)
    assert dist_to_int(Fraction(-7, 10)) == Fraction(3, 10)
    assert dist_to_int(Fraction(4)) == 0


@pytest.mark.parametrize("bits", [32, 64, 128])
def test_sqrt_fraction_width_and_containment(bits):
    iv = sqrt_fraction(Fraction(2), bits)
    assert iv.width <= Fraction(1, 2**bits)
    assert iv.lo * iv.lo <= 2 <= iv.hi * iv.hi


def test_pi_enclosure():
    iv = pi_interval(128)
    # 100-digit reference, truncated both ways
    assert Fraction(31415926535897932, 10**16) <= iv.hi
    assert iv.lo <= Fraction(31415926535897933, 10**16)
    assert iv.width <= Fraction(1, 2**128)


def test_log_exp_inverse_pair():
    x = Fraction(5, 3)
    forward = log_interval(x, 96)
    back = exp_interval(forward, 96)
    assert x in back


@pytest.mark.parametrize(
    "u,expected",
    [
        (Fraction(0), Fraction(1)),
        (Fraction(1), Fraction(-1)),
        (Fraction(1, 2), Fraction(0)),
        (Fraction(2), Fraction(1)),
    ],
)
def test_cos_pi_times_special_angles(u, expected):
    iv = cos_pi_times(u, 96)
    assert expected in iv
    assert iv.width <= Fraction(1, 2**90)


def test_sin_cos_pythagoras():
    u = Fraction(1, 7)
    s = sin_pi_times(u, 128)
    c = cos_pi_times(u, 128)
    total = s * s + c * c
    assert Fraction(1) in total
    assert total.width < Fraction(1, 2**100)


def test_cot_is_cos_over_sin():
    u = Fraction(1, 5)
    quotient = cos_pi_times(u, 160) / sin_pi_times(u, 160)
    direct = cot_pi_times(u, 160)
    assert direct.lo <= quotient.hi and quotient.lo <= direct.hi


@pytest.mark.parametrize(
    "base,expo",
    [
        (Fraction(4), Fraction(1, 2)),
        (Fraction(8), Fraction(2, 3)),
        (Fraction(1, 16), Fraction(-1, 4)),
    ],
)
def test_pow_interval_exact_roots(base, expo):
    iv = pow_interval(base, expo, 128)
    want = Fraction(base) ** expo if expo.denominator == 1 else None
    if expo == Fraction(1, 2):
        want = Fraction(2)
    if expo == Fraction(2, 3):
        want = Fraction(4)
    if expo == Fraction(-1, 4):
        want = Fraction(2)
    assert want in iv


def test_default_bits_is_sane():
    assert DEFAULT_BITS >= 53
