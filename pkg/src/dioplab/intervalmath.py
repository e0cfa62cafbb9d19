"""Interval arithmetic on exact rational endpoints.

Every certified quantity in this package is a closed interval
``[lo, hi]`` with :class:`fractions.Fraction` endpoints guaranteed to
contain the true value.  Rational operations are exact.  Transcendental
leaves (log, exp, pi, the trig family) are obtained from MPFR through
gmpy2 with directed rounding, so the bracketing survives the float
boundary.  Nothing in here ever rounds toward the value.

The module is deliberately small: downstream code composes these
primitives instead of growing its own numerics.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, Union

import gmpy2

__all__ = [
    "DEFAULT_BITS",
    "Interval",
    "PrecisionExhausted",
    "frac_part",
    "dist_to_int",
    "sqrt_fraction",
    "log_interval",
    "exp_interval",
    "pow_interval",
    "pi_interval",
    "cos_pi_times",
    "sin_pi_times",
    "cot_pi_times",
]

DEFAULT_BITS = 96

Scalar = Union[int, Fraction]


class PrecisionExhausted(ArithmeticError):
    """A certified decision could not be made within the precision budget."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


@dataclass(frozen=True, slots=True)
class Interval:
    """Closed interval with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_fraction(self.lo))
        object.__setattr__(self, "hi", _as_fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"inverted interval: lo={self.lo} > hi={self.hi}")

    @classmethod
    def point(cls, v: Scalar) -> "Interval":
        f = _as_fraction(v)
        return cls(f, f)

    # -- geometry ---------------------------------------------------------

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __contains__(self, v) -> bool:
        f = _as_fraction(v)
        return self.lo <= f <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def is_point(self) -> bool:
        return self.lo == self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    # -- arithmetic -------------------------------------------------------

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __add__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        f = _as_fraction(other)
        return Interval(self.lo + f, self.hi + f)

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return Interval(self.lo - other.hi, self.hi - other.lo)
        f = _as_fraction(other)
        return Interval(self.lo - f, self.hi - f)

    def __rsub__(self, other) -> "Interval":
        return (-self).__add__(other)

    def __mul__(self, other) -> "Interval":
        if isinstance(other, Interval):
            products = (
                self.lo * other.lo,
                self.lo * other.hi,
                self.hi * other.lo,
                self.hi * other.hi,
            )
            return Interval(min(products), max(products))
        f = _as_fraction(other)
        if f >= 0:
            return Interval(self.lo * f, self.hi * f)
        return Interval(self.hi * f, self.lo * f)

    __rmul__ = __mul__

    def reciprocal(self) -> "Interval":
        if self.contains_zero():
            raise PrecisionExhausted(
                f"reciprocal of interval containing zero: [{self.lo}, {self.hi}]"
            )
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other) -> "Interval":
        if isinstance(other, Interval):
            return self * other.reciprocal()
        f = _as_fraction(other)
        if f == 0:
            raise ZeroDivisionError("interval divided by exact zero")
        return self * (Fraction(1) / f)

    def __rtruediv__(self, other) -> "Interval":
        return Interval.point(_as_fraction(other)) * self.reciprocal()

    def abs(self) -> "Interval":
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return Interval(Fraction(0), max(-self.lo, self.hi))

    def __pow__(self, k: int) -> "Interval":
        if not isinstance(k, int):
            raise TypeError("integer exponents only; use pow_interval for fractional")
        if k < 0:
            return (self ** (-k)).reciprocal()
        if k == 0:
            return Interval.point(1)
        a, b = self.lo**k, self.hi**k
        if k % 2 == 1:
            return Interval(a, b)
        if self.lo >= 0:
            return Interval(a, b)
        if self.hi <= 0:
            return Interval(b, a)
        return Interval(Fraction(0), max(a, b))

    # -- rounding control -------------------------------------------------

    def quantize(self, bits: int) -> "Interval":
        """Round endpoints outward onto the 2**-bits dyadic grid.

        Keeps Fraction denominators from growing without bound along long
        computations while preserving containment.
        """
        scale = 1 << bits
        lo = Fraction(self.lo.numerator * scale // self.lo.denominator, scale)
        hi = -Fraction((-self.hi).numerator * scale // self.hi.denominator, scale)
        return Interval(lo, hi)

    # -- certified comparisons ---------------------------------------------

    def certainly_lt(self, other) -> bool:
        bound = other.lo if isinstance(other, Interval) else _as_fraction(other)
        return self.hi < bound

    def certainly_le(self, other) -> bool:
        bound = other.lo if isinstance(other, Interval) else _as_fraction(other)
        return self.hi <= bound

    def certainly_gt(self, other) -> bool:
        bound = other.hi if isinstance(other, Interval) else _as_fraction(other)
        return self.lo > bound

    def certainly_ge(self, other) -> bool:
        bound = other.hi if isinstance(other, Interval) else _as_fraction(other)
        return self.lo >= bound

    def decide_lt(self, threshold) -> bool:
        """Certified strict `value < threshold`; PrecisionExhausted if the
        interval straddles the threshold."""
        if self.certainly_lt(threshold):
            return True
        if isinstance(threshold, Interval):
            if self.lo >= threshold.hi:
                return False
        elif self.lo >= threshold:
            return False
        raise PrecisionExhausted(
            f"cannot separate [{float(self.lo):.6g}, {float(self.hi):.6g}] "
            f"from threshold {threshold}"
        )

    def __float__(self) -> float:
        return float(self.mid)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Interval({float(self.lo):.12g}, {float(self.hi):.12g})"


# -- exact helpers on Fractions ---------------------------------------------


def frac_part(x: Fraction) -> Fraction:
    """Fractional part {x} in [0, 1), exact."""
    x = _as_fraction(x)
    return x - (x.numerator // x.denominator)


def dist_to_int(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer, exact."""
    f = frac_part(x)
    return min(f, 1 - f)


def sqrt_fraction(f: Scalar, bits: int) -> Interval:
    """Certified sqrt of a non-negative rational.

    Uses integer square roots only; exact (point interval) when `f` is a
    perfect square of a rational.
    """
    f = _as_fraction(f)
    if f < 0:
        raise ValueError("sqrt of negative rational")
    if f == 0:
        return Interval.point(0)
    n, d = f.numerator, f.denominator
    # sqrt(n/d) = sqrt(n*d)/d
    scale = 1 << (bits + 1)
    g = isqrt(n * d * scale * scale)
    if g * g == n * d * scale * scale:
        return Interval.point(Fraction(g, d * scale))
    return Interval(Fraction(g, d * scale), Fraction(g + 1, d * scale))


# -- MPFR leaves -------------------------------------------------------------


def _mpfr_to_fraction(x) -> Fraction:
    if not gmpy2.is_finite(x):
        raise PrecisionExhausted("MPFR produced a non-finite value")
    n, d = x.as_integer_ratio()
    return Fraction(int(n), int(d))


def _mpq(f: Fraction):
    return gmpy2.mpq(f.numerator, f.denominator)


def _monotone_leaf(fn: Callable, x: "Interval | Scalar", bits: int) -> Interval:
    """Enclose fn over x for a monotone increasing fn.

    Directed rounding covers both the Fraction->mpfr conversion and the
    function call, so each endpoint is rounded away from the true value.
    """
    iv = x if isinstance(x, Interval) else Interval.point(x)
    prec = bits + 16
    with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
        lo = _mpfr_to_fraction(fn(gmpy2.mpfr(_mpq(iv.lo))))
    with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
        hi = _mpfr_to_fraction(fn(gmpy2.mpfr(_mpq(iv.hi))))
    return Interval(lo, hi)


def log_interval(x: "Interval | Scalar", bits: int = DEFAULT_BITS) -> Interval:
    iv = x if isinstance(x, Interval) else Interval.point(x)
    if iv.lo <= 0:
        raise ValueError("log of interval touching (-inf, 0]")
    return _monotone_leaf(gmpy2.log, iv, bits)


def exp_interval(x: "Interval | Scalar", bits: int = DEFAULT_BITS) -> Interval:
    return _monotone_leaf(gmpy2.exp, x, bits)


def pi_interval(bits: int = DEFAULT_BITS) -> Interval:
    prec = bits + 16
    with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
        lo = _mpfr_to_fraction(gmpy2.const_pi())
    with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
        hi = _mpfr_to_fraction(gmpy2.const_pi())
    return Interval(lo, hi)


def pow_interval(base: "Interval | Scalar", expo: Fraction, bits: int = DEFAULT_BITS) -> Interval:
    """Certified base**expo for positive base and rational exponent.

    Integer and half-integer exponents stay in exact integer arithmetic;
    the general case goes through exp(expo * log(base)).
    """
    iv = base if isinstance(base, Interval) else Interval.point(base)
    expo = _as_fraction(expo)
    if expo == 0:
        return Interval.point(1)
    if iv.lo <= 0:
        raise ValueError("pow_interval requires a strictly positive base")
    if expo.denominator == 1:
        return iv ** expo.numerator
    if expo.denominator == 2:
        root = Interval(
            sqrt_fraction(iv.lo, bits + 4).lo, sqrt_fraction(iv.hi, bits + 4).hi
        )
        return (root ** expo.numerator).quantize(bits + 2)
    return exp_interval(log_interval(iv, bits + 8) * expo, bits).quantize(bits)


# -- trig leaves -------------------------------------------------------------
#
# cos/sin are evaluated at an exact dyadic center with correct rounding and
# extended by a Lipschitz radius (|cos'| <= 1, |sin'| <= 1), which keeps the
# enclosure sound without any monotone-segment case analysis.


def _dyadic_round(f: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(round(f * scale), scale)


def _lipschitz_trig(fn: Callable, theta: Interval, bits: int) -> Interval:
    prec = bits + 16
    center = _dyadic_round(theta.mid, prec)
    radius = max(theta.hi - center, center - theta.lo)
    # center is dyadic with <= prec significant bits after scaling, but its
    # integer part can be large; give the conversion enough room to be exact
    conv_prec = max(prec + 8, abs(center.numerator).bit_length() + 8)
    with gmpy2.context(precision=conv_prec, round=gmpy2.RoundDown):
        c = gmpy2.mpfr(_mpq(center))
    with gmpy2.context(precision=prec, round=gmpy2.RoundDown):
        v_lo = _mpfr_to_fraction(fn(c))
    with gmpy2.context(precision=prec, round=gmpy2.RoundUp):
        v_hi = _mpfr_to_fraction(fn(c))
    return Interval(max(Fraction(-1), v_lo - radius), min(Fraction(1), v_hi + radius))


def _angle_times_pi(u: "Fraction | Interval", bits: int) -> Interval:
    pi = pi_interval(bits + 8)
    if isinstance(u, Interval):
        return pi * u
    return pi * _as_fraction(u)


def cos_pi_times(u: "Fraction | int | Interval", bits: int = DEFAULT_BITS) -> Interval:
    """Certified cos(pi * u).  Exact at integer and half-integer u."""
    if not isinstance(u, Interval):
        u = _as_fraction(u)
        r = frac_part(u / 2) * 2  # reduce mod 2, exactly
        if r.denominator == 1:
            return Interval.point(1 if r == 0 else -1)
        if r.denominator == 2:
            return Interval.point(0)
        u = r
    return _lipschitz_trig(gmpy2.cos, _angle_times_pi(u, bits), bits).quantize(bits + 4)


def sin_pi_times(u: "Fraction | int | Interval", bits: int = DEFAULT_BITS) -> Interval:
    """Certified sin(pi * u).  Exact at integer and half-integer u."""
    if not isinstance(u, Interval):
        u = _as_fraction(u)
        r = frac_part(u / 2) * 2
        if r.denominator == 1:
            return Interval.point(0)
        if r.denominator == 2:
            return Interval.point(1 if r == Fraction(1, 2) else -1)
        u = r
    return _lipschitz_trig(gmpy2.sin, _angle_times_pi(u, bits), bits).quantize(bits + 4)


def cot_pi_times(u: Fraction, bits: int = DEFAULT_BITS) -> Interval:
    """Certified cot(pi * u) for exact rational u in (0, 1)."""
    u = _as_fraction(u)
    if not 0 < u < 1:
        raise ValueError("cot_pi_times needs u strictly inside (0, 1)")
    work = bits
    for _ in range(6):
        s = sin_pi_times(u, work)
        if s.lo > 0:
            c = cos_pi_times(u, work)
            return (c / s).quantize(bits)
        work *= 2
    raise PrecisionExhausted(f"sin(pi*{u}) could not be separated from zero")
