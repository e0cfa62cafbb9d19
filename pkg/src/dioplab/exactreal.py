"""Exact arithmetic over rationals and real quadratic irrationals.

A value is stored as ``(a + b*sqrt(D)) / c`` with integers a, b, c > 0,
gcd(a, b, c) = 1, and D > 1 squarefree-reduced (square factors folded
into b; rationals carry b = 0, D = 0).  This presentation is closed
under every operation the lab performs on matrix entries and makes sign
tests, floors, and nearest-integer distances decidable with integer
arithmetic alone, no matter how large the multipliers get.

Values from different quadratic fields cannot be added, but they can be
*compared* exactly (see :meth:`ExactReal.compare`), which is what the
certified threshold tests need.
"""

from __future__ import annotations

import re
from fractions import Fraction
from math import gcd, isqrt
from typing import Union

from .intervalmath import Interval

__all__ = ["ExactReal", "MixedFieldError", "parse_real"]

Rationalish = Union[int, Fraction]


class MixedFieldError(ValueError):
    """Arithmetic attempted between incompatible quadratic fields."""


def _squarefree_split(D: int) -> tuple[int, int]:
    """Return (s, D') with D = s**2 * D' and D' squarefree."""
    s, rest = 1, D
    f = 2
    while f * f <= rest:
        while rest % (f * f) == 0:
            rest //= f * f
            s *= f
        f += 1
    return s, rest


class ExactReal:
    """Immutable element of Q or Q(sqrt(D)) for a squarefree D > 1."""

    __slots__ = ("a", "b", "c", "D")

    def __init__(self, a: int, b: int = 0, c: int = 1, D: int = 0):
        if c == 0:
            raise ZeroDivisionError("zero denominator")
        if b != 0:
            if D < 0:
                raise ValueError("negative radicand")
            s, D = _squarefree_split(D)
            b *= s
            if D <= 1:  # sqrt(0)=0, sqrt(1)=1: fold into the rational part
                a += b * D
                b, D = 0, 0
        else:
            D = 0
        if c < 0:
            a, b, c = -a, -b, -c
        g = gcd(gcd(abs(a), abs(b)), c)
        if g > 1:
            a, b, c = a // g, b // g, c // g
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "D", D)

    def __setattr__(self, *_):
        raise AttributeError("ExactReal is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def rational(cls, v: Rationalish) -> "ExactReal":
        f = Fraction(v)
        return cls(f.numerator, 0, f.denominator)

    @classmethod
    def sqrt(cls, D: int, scale: Rationalish = 1) -> "ExactReal":
        f = Fraction(scale)
        return cls(0, f.numerator, f.denominator, D)

    @classmethod
    def golden(cls) -> "ExactReal":
        return cls(1, 1, 2, 5)

    @classmethod
    def coerce(cls, v) -> "ExactReal":
        if isinstance(v, ExactReal):
            return v
        if isinstance(v, (int, Fraction)):
            return cls.rational(v)
        raise TypeError(f"cannot coerce {type(v).__name__} to ExactReal")

    # -- predicates ----------------------------------------------------------

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def as_fraction(self) -> Fraction:
        if not self.is_rational:
            raise MixedFieldError(f"{self} is irrational")
        return Fraction(self.a, self.c)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def is_integer(self) -> bool:
        return self.b == 0 and self.c == 1

    def field(self) -> int:
        """The radicand D (0 for rationals)."""
        return self.D

    # -- exact sign / comparison ---------------------------------------------

    def sign(self) -> int:
        a, b, D = self.a, self.b, self.D
        if b == 0:
            return (a > 0) - (a < 0)
        if a == 0:
            return (b > 0) - (b < 0)
        sa, sb = (a > 0) - (a < 0), (b > 0) - (b < 0)
        if sa == sb:
            return sa
        # opposite signs: compare a**2 with b**2 * D
        lhs, rhs = a * a, b * b * D
        if lhs == rhs:
            return 0  # impossible for squarefree D > 1, kept for safety
        return sa if lhs > rhs else sb

    def compare(self, other) -> int:
        """Exact three-way comparison, valid across different fields."""
        other = ExactReal.coerce(other)
        if self.b == 0 or other.b == 0 or self.D == other.D:
            return (self - other).sign()
        return self._cmp_mixed(other)

    def _cmp_mixed(self, other: "ExactReal") -> int:
        # sign of (a1 + b1 sqrt(D1))/c1 - (a2 + b2 sqrt(D2))/c2 with D1 != D2
        A = Fraction(self.a, self.c) - Fraction(other.a, other.c)
        B = Fraction(self.b, self.c)
        C = Fraction(-other.b, other.c)
        return _sign_with_two_radicals(A, B, self.D, C, other.D)

    def __eq__(self, other) -> bool:
        if isinstance(other, (ExactReal, int, Fraction)):
            return self.compare(other) == 0
        return NotImplemented

    def __lt__(self, other):
        return self.compare(other) < 0

    def __le__(self, other):
        return self.compare(other) <= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __hash__(self):
        if self.is_rational:
            return hash(Fraction(self.a, self.c))
        return hash((self.a, self.b, self.c, self.D))

    # -- ring operations -------------------------------------------------------

    def _compatible(self, other: "ExactReal") -> int:
        if self.b == 0:
            return other.D
        if other.b == 0 or self.D == other.D:
            return self.D
        raise MixedFieldError(
            f"cannot combine sqrt({self.D}) with sqrt({other.D}) exactly"
        )

    def __add__(self, other):
        other = ExactReal.coerce(other)
        D = self._compatible(other)
        a = self.a * other.c + other.a * self.c
        b = self.b * other.c + other.b * self.c
        return ExactReal(a, b, self.c * other.c, D)

    __radd__ = __add__

    def __neg__(self):
        return ExactReal(-self.a, -self.b, self.c, self.D)

    def __sub__(self, other):
        return self + (-ExactReal.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = ExactReal.coerce(other)
        D = self._compatible(other)
        if self.b != 0 and other.b != 0:
            a = self.a * other.a + self.b * other.b * self.D
            b = self.a * other.b + self.b * other.a
        else:
            a = self.a * other.a
            b = self.a * other.b + self.b * other.a
        return ExactReal(a, b, self.c * other.c, D)

    __rmul__ = __mul__

    def inverse(self) -> "ExactReal":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        if self.b == 0:
            return ExactReal(self.c, 0, self.a)
        # c / (a + b sqrt(D)) = c (a - b sqrt(D)) / (a^2 - b^2 D)
        norm = self.a * self.a - self.b * self.b * self.D
        return ExactReal(self.a * self.c, -self.b * self.c, norm, self.D)

    def __truediv__(self, other):
        return self * ExactReal.coerce(other).inverse()

    def __rtruediv__(self, other):
        return ExactReal.coerce(other) * self.inverse()

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- integer structure ------------------------------------------------------

    def floor(self) -> int:
        a, b, c, D = self.a, self.b, self.c, self.D
        if b == 0:
            return a // c
        g = isqrt(b * b * D)
        num_lo = a + (g if b > 0 else -(g + 1))
        k = num_lo // c  # candidate floor of (a + b sqrt(D)) / c
        # the bracket spans < 2 integers; settle by exact comparison
        while self.compare(ExactReal.rational(k + 1)) >= 0:
            k += 1
        while self.compare(ExactReal.rational(k)) < 0:
            k -= 1
        return k

    def frac(self) -> "ExactReal":
        return self - ExactReal.rational(self.floor())

    def nearest_int_dist(self) -> "ExactReal":
        """Exact distance to the nearest integer, in [0, 1/2]."""
        f = self.frac()
        comp = ExactReal.rational(1) - f
        return f if f.compare(comp) <= 0 else comp

    # -- evaluation ---------------------------------------------------------------

    def evaluate(self, bits: int) -> Interval:
        """Certified enclosure with width <= 2**-bits."""
        if self.b == 0:
            return Interval.point(Fraction(self.a, self.c))
        F = bits + 2
        scale = 1 << F
        g = isqrt(self.b * self.b * self.D * scale * scale)
        if self.b > 0:
            num = Interval(Fraction(self.a * scale + g, 1), Fraction(self.a * scale + g + 1, 1))
        else:
            num = Interval(Fraction(self.a * scale - g - 1, 1), Fraction(self.a * scale - g, 1))
        return num / (self.c * scale)

    def __float__(self) -> float:
        return float(self.evaluate(64).mid)

    # -- text form ------------------------------------------------------------------

    def format(self) -> str:
        if self.b == 0:
            return str(self.a) if self.c == 1 else f"{self.a}/{self.c}"
        op = "+" if self.b > 0 else "-"
        body = f"({self.a}{op}{abs(self.b)}*sqrt({self.D}))"
        return body if self.c == 1 else f"{body}/{self.c}"

    def __repr__(self) -> str:
        return f"ExactReal[{self.format()}]"


_RAT_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+))?\s*$")
_QUAD_RE = re.compile(
    r"^\s*\(\s*(-?\d+)\s*([+-])\s*(\d+)\s*\*\s*sqrt\(\s*(\d+)\s*\)\s*\)"
    r"\s*(?:/\s*(\d+))?\s*$"
)


def parse_real(text: str) -> ExactReal:
    """Parse the `p/r` and `(p+q*sqrt(D))/r` literal forms."""
    m = _RAT_RE.match(text)
    if m:
        num, den = int(m.group(1)), int(m.group(2) or 1)
        return ExactReal(num, 0, den)
    m = _QUAD_RE.match(text)
    if m:
        a = int(m.group(1))
        b = int(m.group(3)) * (1 if m.group(2) == "+" else -1)
        D = int(m.group(4))
        c = int(m.group(5) or 1)
        return ExactReal(a, b, c, D)
    raise ValueError(f"unparseable numeric literal: {text!r}")


def _sign_of_single_radical(A: Fraction, B: Fraction, m: int) -> int:
    """Exact sign of A + B*sqrt(m)."""
    if B == 0:
        return (A > 0) - (A < 0)
    if A == 0:
        return (B > 0) - (B < 0)
    sa, sb = (A > 0) - (A < 0), (B > 0) - (B < 0)
    if sa == sb:
        return sa
    lhs, rhs = A * A, B * B * m
    if lhs == rhs:
        return 0
    return sa if lhs > rhs else sb


def _sign_with_two_radicals(A: Fraction, B: Fraction, m: int, C: Fraction, n: int) -> int:
    """Exact sign of A + B*sqrt(m) + C*sqrt(n) with m, n squarefree, m != n."""
    if B == 0:
        return _sign_of_single_radical(A, C, n)
    if C == 0:
        return _sign_of_single_radical(A, B, m)
    # compare L = A + B sqrt(m) against R = -C sqrt(n)
    sl = _sign_of_single_radical(A, B, m)
    sr = -((C > 0) - (C < 0))
    if sl != sr:
        return 1 if sl > sr else -1
    if sl == 0:
        return 0
    # both sides share a strict sign; compare squares (exact, single radical)
    # L^2 = A^2 + B^2 m + 2AB sqrt(m), R^2 = C^2 n
    diff_sign = _sign_of_single_radical(A * A + B * B * m - C * C * n, 2 * A * B, m)
    return diff_sign if sl > 0 else -diff_sign
