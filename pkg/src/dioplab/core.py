"""Subspace geometry, approximation functions, and the lift map.

The objects here are shared by every experiment: an affine subspace
given by its tilt matrix and shift, the decreasing approximation
function psi, sup-norm distances to the integer lattice, and the strip
translation that moves the whole picture by an integer vector.
"""

from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .exactreal import ExactReal, MixedFieldError, parse_real
from .intervalmath import (
    DEFAULT_BITS,
    Interval,
    PrecisionExhausted,
    log_interval,
    pow_interval,
)

__all__ = [
    "AffineSubspaceSpec",
    "ApproxFunction",
    "Ball",
    "DegenerateTiltError",
    "HattedVector",
    "StripIndex",
    "hat_dot",
    "lift",
    "nearest_int_dist",
    "psi_capital",
    "psi_capital_exact",
    "half_threshold",
    "strip_translate",
]


class DegenerateTiltError(ValueError):
    """Zero tilt matrix: the subspace is an affine coordinate plane and the
    Psi-based machinery (constant 1/(2n|a|)) does not apply."""


def _coerce_entry(v) -> ExactReal:
    if isinstance(v, str):
        return parse_real(v)
    return ExactReal.coerce(v)


@dataclass(frozen=True)
class AffineSubspaceSpec:
    """An n-dimensional affine subspace of R^d: points (x, x*tilt + shift).

    Parameters
    ----------
    d, n : int
        Ambient and subspace dimension, 1 <= n < d.
    tilt : matrix of ExactReal, shape (n, d-n)
        Row-major tilt matrix.
    shift : vector of ExactReal, length d-n
        The constant offset of the last d-n coordinates.

    Every column (one lifted coordinate) must live in a single quadratic
    field so that integer combinations of its entries stay exact.
    """

    d: int
    n: int
    tilt: tuple
    shift: tuple

    def __post_init__(self):
        if not (isinstance(self.d, int) and isinstance(self.n, int)):
            raise TypeError("dimensions must be integers")
        if not 1 <= self.n < self.d:
            raise ValueError(f"need 1 <= n < d, got n={self.n}, d={self.d}")
        m = self.d - self.n
        rows = tuple(tuple(_coerce_entry(e) for e in row) for row in self.tilt)
        shift = tuple(_coerce_entry(e) for e in self.shift)
        if len(rows) != self.n or any(len(r) != m for r in rows):
            raise ValueError(f"tilt must be {self.n}x{m}")
        if len(shift) != m:
            raise ValueError(f"shift must have length {m}")
        for v in range(m):
            fields = {e.D for e in (shift[v], *(rows[i][v] for i in range(self.n))) if e.D}
            if len(fields) > 1:
                raise MixedFieldError(
                    f"column {v} mixes radicals {sorted(fields)}; one field per column"
                )
        object.__setattr__(self, "tilt", rows)
        object.__setattr__(self, "shift", shift)

    # -- derived views ------------------------------------------------------

    def augmented(self) -> tuple:
        """The (n+1) x (d-n) matrix with the shift as row 0, tilt rows after."""
        return (self.shift,) + self.tilt

    def is_zero_tilt(self) -> bool:
        return all(e.is_zero() for row in self.tilt for e in row)

    def tilt_sup(self) -> ExactReal:
        """Sup of absolute values of tilt entries, exact."""
        best = None
        for row in self.tilt:
            for e in row:
                a = abs(e)
                if best is None or a.compare(best) > 0:
                    best = a
        return best

    def tilt_float(self) -> np.ndarray:
        return np.array([[float(e) for e in row] for row in self.tilt], dtype=float)

    def shift_float(self) -> np.ndarray:
        return np.array([float(e) for e in self.shift], dtype=float)

    # -- text form ------------------------------------------------------------

    def to_text(self) -> str:
        rows = " ; ".join(" ".join(e.format() for e in row) for row in self.tilt)
        shift = " ".join(e.format() for e in self.shift)
        return (
            "[subspace]\n"
            f"d = {self.d}\n"
            f"n = {self.n}\n"
            f"tilt = {rows}\n"
            f"shift = {shift}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "AffineSubspaceSpec":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        sec = cp["subspace"]
        d, n = int(sec["d"]), int(sec["n"])
        tilt = tuple(
            tuple(parse_real(tok) for tok in row.split())
            for row in sec["tilt"].split(";")
        )
        shift = tuple(parse_real(tok) for tok in sec["shift"].split())
        return cls(d=d, n=n, tilt=tilt, shift=shift)


@dataclass(frozen=True)
class HattedVector:
    """p-hat = (q, p): denominator first, then the n numerators."""

    q: int
    p: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(x) for x in self.p))
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if any(not 0 <= x <= self.q for x in self.p):
            raise ValueError(f"numerators must lie in [0, q]: {self.p} with q={self.q}")

    @property
    def weight(self) -> int:
        """Sup norm |p-hat|; equals q because p/q lies in the unit cube."""
        return self.q

    def point(self) -> tuple:
        return tuple(Fraction(x, self.q) for x in self.p)


@dataclass(frozen=True)
class Ball:
    """Sup-norm ball in [0,1]^n with rational radius."""

    center: tuple
    radius: Fraction

    def __post_init__(self):
        center = tuple(_coerce_entry(c) for c in self.center)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", Fraction(self.radius))
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        for c in center:
            if c.compare(0) < 0 or c.compare(1) > 0:
                raise ValueError("ball center must lie in the unit cube")

    @property
    def n(self) -> int:
        return len(self.center)

    def measure(self) -> Fraction:
        return (2 * self.radius) ** self.n

    def inside_unit_cube(self) -> bool:
        r = self.radius
        return all(c.compare(Fraction(r)) >= 0 and c.compare(1 - r) <= 0 for c in self.center)


@dataclass(frozen=True)
class StripIndex:
    v: tuple

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(int(x) for x in self.v))


_TABLE_ITEM = re.compile(r"^(\d+):(\S+)$")


@dataclass(frozen=True)
class ApproxFunction:
    """Decreasing psi on the positive integers.

    kind = "power_log": psi(q) = coef * q**(-tau) * log(q+1)**(-sigma)
    kind = "table": right-constant interpolation of sampled values
    (value at q = value of the largest sample point <= q; constant to the
    left of the first sample).
    """

    kind: str
    coef: Fraction = Fraction(1)
    tau: Fraction = Fraction(0)
    sigma: Fraction = Fraction(0)
    qs: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind == "power_log":
            object.__setattr__(self, "coef", Fraction(self.coef))
            object.__setattr__(self, "tau", Fraction(self.tau))
            object.__setattr__(self, "sigma", Fraction(self.sigma))
            if self.coef <= 0 or self.tau < 0 or self.sigma < 0:
                raise ValueError("power_log needs coef > 0, tau >= 0, sigma >= 0")
        elif self.kind == "table":
            qs = tuple(int(q) for q in self.qs)
            vals = tuple(Fraction(v) for v in self.values)
            if len(qs) != len(vals) or not qs:
                raise ValueError("table needs matching, non-empty qs/values")
            if qs[0] < 1 or any(a >= b for a, b in zip(qs, qs[1:])):
                raise ValueError("table sample points must be increasing, >= 1")
            if any(v <= 0 for v in vals):
                raise ValueError("table values must be positive")
            if any(a < b for a, b in zip(vals, vals[1:])):
                raise ValueError("table values must be non-increasing")
            object.__setattr__(self, "qs", qs)
            object.__setattr__(self, "values", vals)
        else:
            raise ValueError(f"unknown ApproxFunction kind: {self.kind}")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def power_log(cls, coef, tau, sigma=0) -> "ApproxFunction":
        return cls(kind="power_log", coef=Fraction(coef), tau=Fraction(tau), sigma=Fraction(sigma))

    @classmethod
    def power(cls, tau, coef=1) -> "ApproxFunction":
        return cls.power_log(coef, tau, 0)

    @classmethod
    def table(cls, qs, values) -> "ApproxFunction":
        return cls(kind="table", qs=tuple(qs), values=tuple(values))

    # -- evaluation -------------------------------------------------------------

    def _table_value(self, q: int) -> Fraction:
        idx = 0
        for i, qq in enumerate(self.qs):
            if qq <= q:
                idx = i
            else:
                break
        return self.values[idx]

    def exact_value(self, q: int) -> Optional[ExactReal]:
        """Exact psi(q) when it lives in a quadratic field, else None."""
        if q < 1:
            raise ValueError("psi is defined on q >= 1")
        if self.kind == "table":
            return ExactReal.rational(self._table_value(q))
        if self.sigma != 0:
            return None
        den = self.tau.denominator
        if den == 1:
            return ExactReal.rational(self.coef * Fraction(1, q**self.tau.numerator))
        if den == 2:
            # q**(-p/2) = sqrt(q) / q**((p+1)/2) for odd p
            p = self.tau.numerator
            return ExactReal.sqrt(q, self.coef * Fraction(1, q ** ((p + 1) // 2)))
        return None

    def value_interval(self, q: int, bits: int = DEFAULT_BITS) -> Interval:
        exact = self.exact_value(q)
        if exact is not None:
            return exact.evaluate(bits)
        out = pow_interval(Interval.point(q), -self.tau, bits + 8)
        if self.sigma != 0:
            out = out * pow_interval(log_interval(Interval.point(q + 1), bits + 8), -self.sigma, bits + 8)
        return (out * self.coef).quantize(bits)

    def value_float(self, q: int) -> float:
        if self.kind == "table":
            return float(self._table_value(q))
        out = float(self.coef) * float(q) ** (-float(self.tau))
        if self.sigma != 0:
            out *= np.log(q + 1.0) ** (-float(self.sigma))
        return out

    def values_float(self, qs: np.ndarray) -> np.ndarray:
        """Vectorized float64 psi; a prefilter, never a certificate."""
        if self.kind == "table":
            idx = np.searchsorted(np.asarray(self.qs), qs, side="right") - 1
            idx = np.clip(idx, 0, len(self.values) - 1)
            return np.array([float(v) for v in self.values])[idx]
        q = qs.astype(float)
        out = float(self.coef) * q ** (-float(self.tau))
        if self.sigma != 0:
            out *= np.log(q + 1.0) ** (-float(self.sigma))
        return out

    # -- text form ------------------------------------------------------------------

    def describe(self) -> str:
        if self.kind == "power_log":
            return f"power_log coef={self.coef} tau={self.tau} sigma={self.sigma}"
        items = " ".join(f"{q}:{v}" for q, v in zip(self.qs, self.values))
        return f"table {items}"

    @classmethod
    def parse(cls, text: str) -> "ApproxFunction":
        toks = text.split()
        if not toks:
            raise ValueError("empty psi description")
        if toks[0] == "power_log":
            kw = {}
            for tok in toks[1:]:
                key, _, val = tok.partition("=")
                kw[key] = Fraction(val)
            return cls.power_log(kw.get("coef", 1), kw.get("tau", 0), kw.get("sigma", 0))
        if toks[0] == "table":
            qs, vals = [], []
            for tok in toks[1:]:
                m = _TABLE_ITEM.match(tok)
                if not m:
                    raise ValueError(f"bad table item {tok!r}")
                qs.append(int(m.group(1)))
                vals.append(Fraction(m.group(2)))
            return cls.table(qs, vals)
        raise ValueError(f"unknown psi kind {toks[0]!r}")


# -- operations ------------------------------------------------------------------


def nearest_int_dist(xs: Sequence, bits: int = DEFAULT_BITS) -> Interval:
    """Certified sup-norm distance from a vector to the integer lattice.

    Componentwise nearest-integer distances are computed exactly in their
    quadratic fields; the maximum is then evaluated to the requested
    precision, so the result interval has width <= 2**-bits.
    """
    entries = [_coerce_entry(x) for x in xs]
    if not entries:
        raise ValueError("empty vector")
    best = entries[0].nearest_int_dist()
    for e in entries[1:]:
        d = e.nearest_int_dist()
        if d.compare(best) > 0:
            best = d
    return best.evaluate(bits)


def hat_dot(phat: HattedVector, augmented: Sequence) -> tuple:
    """q * row0 + sum_i p_i * row_{i+1}, componentwise and exact."""
    rows = tuple(augmented)
    if len(rows) != len(phat.p) + 1:
        raise ValueError(
            f"augmented matrix has {len(rows)} rows, expected {len(phat.p) + 1}"
        )
    width = len(rows[0])
    out = []
    for v in range(width):
        acc = rows[0][v] * phat.q
        for i, pi in enumerate(phat.p):
            acc = acc + rows[i + 1][v] * pi
        out.append(acc)
    return tuple(out)


def lift(x: Sequence, L: AffineSubspaceSpec) -> tuple:
    """Map x in [0,1]^n to the subspace point (x, x~ * augmented)."""
    xs = tuple(_coerce_entry(v) for v in x)
    if len(xs) != L.n:
        raise ValueError(f"x must have length n={L.n}")
    tail = []
    for v in range(L.d - L.n):
        acc = L.shift[v]
        for i in range(L.n):
            acc = acc + L.tilt[i][v] * xs[i]
        tail.append(acc)
    return xs + tuple(tail)


def psi_capital_exact(q: int, psi: ApproxFunction, L: AffineSubspaceSpec) -> Optional[ExactReal]:
    """Psi(q) = psi(q) / (2 n |a| q) exactly, when representable."""
    if L.is_zero_tilt():
        raise DegenerateTiltError("Psi needs |tilt| > 0")
    num = psi.exact_value(q)
    if num is None:
        return None
    denom = L.tilt_sup() * (2 * L.n * q)
    try:
        return num / denom
    except MixedFieldError:
        return None


def psi_capital(
    q: int, psi: ApproxFunction, L: AffineSubspaceSpec, bits: int = DEFAULT_BITS
) -> Interval:
    """Certified Psi(q) = psi(q) / (2 n |tilt| q)."""
    if q < 1:
        raise ValueError("q >= 1 required")
    exact = psi_capital_exact(q, psi, L)
    if exact is not None:
        return exact.evaluate(bits)
    denom = (L.tilt_sup() * (2 * L.n * q)).evaluate(bits + 8)
    return (psi.value_interval(q, bits + 8) / denom).quantize(bits)


def strip_translate(L: AffineSubspaceSpec, v: StripIndex) -> AffineSubspaceSpec:
    """Translate the subspace by the integer strip index: shift += v * tilt."""
    if len(v.v) != L.n:
        raise ValueError(f"strip index must have length n={L.n}")
    new_shift = []
    for col in range(L.d - L.n):
        acc = L.shift[col]
        for i, vi in enumerate(v.v):
            acc = acc + L.tilt[i][col] * vi
        new_shift.append(acc)
    return AffineSubspaceSpec(d=L.d, n=L.n, tilt=L.tilt, shift=tuple(new_shift))


def half_threshold(psi: ApproxFunction, q: int):
    """psi(q)/2 as an ExactReal when exact, else a bits -> Interval callable."""
    val = psi.exact_value(q)
    if val is not None:
        return val * Fraction(1, 2)
    return lambda bits: psi.value_interval(q, bits) * Fraction(1, 2)
