"""Minimal-denominator products, their reciprocal sums, and exponent fits.

For an m x n matrix A with exact real entries and a nonzero integer
vector j, the weighted product

    P_omega(j) = |j|^omega * prod_u || <j, row_u(A)> ||

(|.| the sup norm, ||.|| the distance to the nearest integer) measures
how close j comes to resonating with the rows.  The reciprocal sum
over 0 < |j| <= J, the record minima of the plain product, and the
least-squares exponent fitted to those records are the quantities the
counting bounds consume downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _cartesian
from typing import Iterable, Iterator, Sequence

import numpy as np

from .exactreal import ExactReal, MixedFieldError
from .intervalmath import (
    DEFAULT_BITS,
    Interval,
    PrecisionExhausted,
    log_interval,
    pow_interval,
    sin_pi_times,
)

__all__ = [
    "ResonanceError",
    "MadDiagnostics",
    "SumConstantFit",
    "half_lattice",
    "mad_functional",
    "mad_sum",
    "estimate_exponent",
    "fit_sum_constant",
    "progression_exp_sum",
]


class ResonanceError(ArithmeticError):
    """An exact resonance <j, row> in Z makes a reciprocal term divide by zero."""

    def __init__(self, j: tuple, row_index: int):
        self.witness = tuple(j)
        self.row_index = row_index
        super().__init__(
            f"division-by-zero signal: row {row_index} resonates exactly at j={tuple(j)}"
        )


@dataclass(frozen=True)
class MadDiagnostics:
    """Record minima of the product and the exponent fitted to them."""

    j_max: int
    records: tuple  # ((sup norm, certified product interval), ...)
    fitted_omega: float
    omega_band: float
    infimum_witness: tuple
    resonance: bool
    resonance_witness: tuple | None = None


@dataclass(frozen=True)
class SumConstantFit:
    constant: float
    omega: Fraction
    log_power: int
    grid: tuple
    ratios: tuple


def _coerce_matrix(matrix) -> tuple:
    rows = []
    for r, row in enumerate(matrix):
        entries = tuple(ExactReal.coerce(e) for e in row)
        if not entries:
            raise ValueError("matrix rows must be non-empty")
        fields = {e.D for e in entries if e.D}
        if len(fields) > 1:
            raise MixedFieldError(
                f"row {r} mixes quadratic fields {sorted(fields)}; "
                "inner products would leave exact arithmetic"
            )
        rows.append(entries)
    if not rows:
        raise ValueError("matrix must have at least one row")
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ValueError("matrix rows must share one length")
    return tuple(rows)


def half_lattice(n: int, J: int) -> Iterator[tuple]:
    """Integer vectors with 0 < sup|j| <= J and first nonzero entry positive.

    Exactly one of {j, -j} is produced for every nonzero j in the box, so
    symmetric sums over the full box double the contributions seen here.
    """
    if n < 1 or J < 1:
        return
    if n == 1:
        for j in range(1, J + 1):
            yield (j,)
        return
    for head in range(1, J + 1):
        for tail in _cartesian(range(-J, J + 1), repeat=n - 1):
            yield (head,) + tail
    for zeros in range(1, n):
        for head in range(1, J + 1):
            for tail in _cartesian(range(-J, J + 1), repeat=n - 1 - zeros):
                yield (0,) * zeros + (head,) + tail


def _row_distance(row: tuple, j: tuple) -> ExactReal:
    acc = ExactReal.rational(0)
    for coef, entry in zip(j, row):
        if coef:
            acc = acc + entry * coef
    return acc.nearest_int_dist()


def _product_interval(rows: tuple, j: tuple, bits: int):
    """(certified product of row distances, resonant row index or None)."""
    acc = Interval.point(Fraction(1))
    for r, row in enumerate(rows):
        dist = _row_distance(row, j)
        if dist.is_zero():
            return Interval.point(Fraction(0)), r
        if dist.is_rational:
            acc = acc * dist.as_fraction()  # keep rational distances exact
        else:
            acc = acc * dist.evaluate(bits)
    return acc, None


def _reciprocal_term(rows: tuple, j: tuple, sup: int, omega: Fraction, bits: int) -> Interval:
    """2 / P_omega(j), escalating precision until the product clears zero."""
    work = bits
    while True:
        prod, resonant = _product_interval(rows, j, work)
        if resonant is not None:
            raise ResonanceError(j, resonant)
        try:
            return (prod * pow_interval(Fraction(sup), omega, work)).reciprocal() * 2
        except PrecisionExhausted:
            if work >= 16 * bits:
                raise
            work *= 2


def mad_functional(matrix, j: Sequence[int], omega, bits: int = DEFAULT_BITS) -> Interval:
    """Certified |j|^omega * prod_u ||<j, row_u>||.

    An exact resonance collapses the product and the result is the exact
    zero interval; no error is raised here because nothing is inverted.
    """
    rows = _coerce_matrix(matrix)
    j = tuple(int(c) for c in j)
    if len(j) != len(rows[0]):
        raise ValueError("j must match the matrix width")
    sup = max(abs(c) for c in j)
    if sup == 0:
        raise ValueError("j must be a nonzero integer vector")
    prod, resonant = _product_interval(rows, j, bits)
    if resonant is not None:
        return Interval.point(Fraction(0))
    return (prod * pow_interval(Fraction(sup), Fraction(omega), bits)).quantize(bits)


def _mad_sweep(rows: tuple, omega: Fraction, checkpoints: Sequence[int], bits: int) -> dict:
    """Partial reciprocal sums at each checkpoint J, in one enumeration pass."""
    targets = sorted(set(int(J) for J in checkpoints))
    if targets[0] < 2:
        raise ValueError("reciprocal sums need J >= 2")
    n = len(rows[0])
    out = {}
    acc = Interval.point(Fraction(0))
    pending = list(targets)
    j_max = targets[-1]
    # growing-shell order so each checkpoint closes exactly once
    for shell in range(1, j_max + 1):
        for j in _shell_vectors(n, shell):
            term = _reciprocal_term(rows, j, shell, omega, bits)  # counts j and -j
            acc = (acc + term).quantize(bits + 16)
        if pending and shell == pending[0]:
            out[pending.pop(0)] = acc.quantize(bits)
    return out


def _shell_vectors(n: int, s: int) -> Iterator[tuple]:
    """Half-lattice vectors with sup norm exactly s."""
    if n == 1:
        yield (s,)
        return
    for j in half_lattice(n, s):
        if max(abs(c) for c in j) == s:
            yield j


def mad_sum(matrix, J: int, omega, bits: int = DEFAULT_BITS) -> Interval:
    """Certified sum of 1 / P_omega(j) over 0 < |j| <= J.

    Raises ResonanceError when some j resonates exactly, and ValueError
    for J < 2 (a single shell says nothing about growth).
    """
    rows = _coerce_matrix(matrix)
    if J < 2:
        raise ValueError("reciprocal sums need J >= 2")
    return _mad_sweep(rows, Fraction(omega), [J], bits)[int(J)]


def _record_candidates(rows: tuple, j_max: int) -> list:
    """Float prefilter: indices of running-minimum candidates of the product.

    Only meaningful for width-1 matrices where the scan is a vector sweep;
    wider matrices fall back to exact enumeration by the caller.
    """
    n = len(rows[0])
    if n != 1:
        return []
    js = np.arange(1, j_max + 1, dtype=float)
    prod = np.ones_like(js)
    for row in rows:
        x = js * float(row[0])
        prod *= np.abs(x - np.rint(x))
    run = np.minimum.accumulate(prod)
    # keep anything within a stretch of the running minimum; exact math decides
    mask = prod <= run * (1 + 1e-9) + 1e-300
    return [int(i) + 1 for i in np.nonzero(mask)[0]]


def estimate_exponent(matrix, j_max: int, bits: int = DEFAULT_BITS) -> MadDiagnostics:
    """Fit the decay exponent of record minima of prod_u ||<j, row_u>||.

    Scans 0 < |j| <= j_max, keeps the strict record minima of the plain
    (unweighted) product, and least-squares fits -log(product) against
    log|j| over those records.  An exact resonance short-circuits to an
    infinite exponent with the witness attached.
    """
    rows = _coerce_matrix(matrix)
    if j_max < 2:
        raise ValueError("need j_max >= 2 to fit a slope")
    n = len(rows[0])

    if n == 1:
        candidates = [(jj, (jj,)) for jj in _record_candidates(rows, j_max)]
    else:
        candidates = [(max(abs(c) for c in j), j) for j in half_lattice(n, j_max)]
        candidates.sort(key=lambda t: t[0])

    records = []
    best = None
    best_j = None
    for sup, j in candidates:
        prod, resonant = _product_interval(rows, j, bits)
        if resonant is not None:
            return MadDiagnostics(
                j_max=j_max,
                records=tuple(records),
                fitted_omega=math.inf,
                omega_band=0.0,
                infimum_witness=tuple(j),
                resonance=True,
                resonance_witness=tuple(j),
            )
        if best is None or prod.certainly_lt(best):
            records.append((sup, prod))
            best = prod
            best_j = j

    xs = np.log([float(s) for s, _ in records])
    ys = np.array([-math.log(float(p.mid)) for _, p in records])
    if len(records) >= 3 and xs[-1] > xs[0]:
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        spread = xs - xs.mean()
        band = float(
            math.sqrt(max(float(np.sum(resid**2)), 1e-300) / max(len(xs) - 2, 1))
            / math.sqrt(float(np.sum(spread**2)))
        )
    else:
        slope, band = float("nan"), float("inf")
    return MadDiagnostics(
        j_max=j_max,
        records=tuple(records),
        fitted_omega=float(slope),
        omega_band=band,
        infimum_witness=tuple(best_j),
        resonance=False,
    )


def fit_sum_constant(
    matrix,
    omega,
    log_power: int,
    grid: Sequence[int],
    bits: int = DEFAULT_BITS,
) -> SumConstantFit:
    """Smallest C with mad_sum(J) <= C * J^omega * (ln J)^log_power on the grid.

    The sum side is the plain reciprocal-product sum (no |j| weight); omega
    lives in the envelope only.  The certified upper end of each partial
    sum is compared against the certified lower end of the envelope, so
    the returned constant really dominates every grid point.
    """
    rows = _coerce_matrix(matrix)
    omega = Fraction(omega)
    grid = sorted(set(int(J) for J in grid))
    if not grid or grid[0] < 2:
        raise ValueError("grid entries must be integers >= 2")
    if log_power < 0:
        raise ValueError("log_power must be >= 0")
    sums = _mad_sweep(rows, Fraction(0), grid, bits)
    ratios = []
    for J in grid:
        envelope = pow_interval(Fraction(J), omega, bits)
        if log_power:
            envelope = envelope * log_interval(Fraction(J), bits) ** log_power
        ratios.append(float(sums[J].hi) / float(envelope.lo))
    return SumConstantFit(
        constant=max(ratios),
        omega=omega,
        log_power=int(log_power),
        grid=tuple(grid),
        ratios=tuple(ratios),
    )


def progression_exp_sum(x, a0: int, k: int, bits: int = DEFAULT_BITS) -> Interval:
    """Certified |sum_{a=a0}^{a0+k-1} e(a x)| = |sin(pi k x)| / |sin(pi x)|.

    The starting index a0 only rotates the sum, so the modulus ignores it;
    it stays in the signature because callers track progressions, not bare
    lengths.  Integer x collapses to exactly k.
    """
    x = ExactReal.coerce(x)
    if k < 1:
        raise ValueError("progression length k must be >= 1")
    int(a0)  # type check only
    if x.is_integer():
        return Interval.point(Fraction(k))

    work = bits
    for _ in range(6):
        num = _abs_sin_pi(x * k, work)
        den = _abs_sin_pi(x, work)
        if den.lo > 0:
            return (num / den).quantize(bits)
        work *= 2
    raise PrecisionExhausted(
        f"|sin(pi x)| not separated from zero at {work} bits for x={x.format()}"
    )


def _abs_sin_pi(x: ExactReal, bits: int) -> Interval:
    # reduce mod 2 exactly before any interval widening
    reduced = x - ExactReal.rational(2 * (x * Fraction(1, 2)).floor())
    if reduced.is_rational:
        return sin_pi_times(reduced.as_fraction(), bits).abs()
    return sin_pi_times(reduced.evaluate(bits + 8), bits).abs()
