"""Counting rational points near an affine subspace, with proof-side bounds.

`count_exact` enumerates numerators p in an integer box around q*x0 and
keeps those whose lifted form lands within delta of the integer lattice;
`count_aggregate` stacks those counts over all denominators up to
k^(t-1) against the threshold psi(k^t)/2.  The companion bound
evaluators stay deliberately dumb: they compute the published
expressions as written so the sweep can compare observed counts with
predicted ceilings and record where domination kicks in.

Inequality conventions: closeness and ball membership are strict, the
height cap |p_hat| <= k^(t-1) is not, and p has positive integer
coordinates throughout.  All membership tests run in exact arithmetic
(rationals and quadratic irrationals), so boundary ties are decided, not
escalated; only approximation functions without an exact form fall back
to certified intervals.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _cartesian
from typing import Optional, Sequence

import numpy as np

from .core import AffineSubspaceSpec, ApproxFunction, Ball, half_threshold
from .exactreal import ExactReal
from .intervalmath import DEFAULT_BITS, Interval, PrecisionExhausted

__all__ = [
    "BudgetExceeded",
    "CountConfig",
    "AggregateConfig",
    "SweepRow",
    "SweepReport",
    "count_exact",
    "count_aggregate",
    "lemma3_bound",
    "theorem4_bound",
    "verify_counting_sweep",
]

DEFAULT_BUDGET = 50_000_000


class BudgetExceeded(RuntimeError):
    """Enumeration would exceed the configured work budget."""


@dataclass(frozen=True)
class CountConfig:
    """One denominator q, closeness delta, and a ball constraining p/q.

    delta may be a Fraction or an exact quadratic irrational; values at
    or above 1/2 are legal but degenerate (nearly every box point
    passes), and the bound evaluators reject them separately.
    """

    subspace: AffineSubspaceSpec
    q: int
    delta: object
    ball: Ball

    def __post_init__(self):
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "delta", ExactReal.coerce(self.delta))
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if self.delta.sign() <= 0:
            raise ValueError("delta must be positive")
        if len(self.ball.center) != self.subspace.n:
            raise ValueError("ball dimension must match the subspace")
        if not self.ball.inside_unit_cube():
            raise ValueError("ball must sit inside the unit cube")


@dataclass(frozen=True)
class AggregateConfig:
    """Counts over all q <= k^(t-1) against the threshold psi(k^t)/2."""

    subspace: AffineSubspaceSpec
    k: int
    t: int
    psi: ApproxFunction
    ball: Ball

    def __post_init__(self):
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "t", int(self.t))
        if self.k < 2:
            raise ValueError("k must be an integer >= 2")
        if self.t < 1:
            raise ValueError("t must be an integer >= 1")
        if len(self.ball.center) != self.subspace.n:
            raise ValueError("ball dimension must match the subspace")
        if not self.ball.inside_unit_cube():
            raise ValueError("ball must sit inside the unit cube")

    @property
    def q_cap(self) -> int:
        return self.k ** (self.t - 1)


def _box_interval(q: int, center: ExactReal, radius: Fraction) -> range:
    """Integers p with |p - q*center| < q*radius, strictly."""
    lo = center * q - ExactReal.rational(radius * q)
    hi = center * q + ExactReal.rational(radius * q)
    pmin = lo.floor() + 1  # strict lower bound, exact
    hfloor = hi.floor()
    pmax = hfloor - 1 if hi.is_integer() else hfloor
    return range(pmin, pmax + 1)


def _threshold_compare(dist: ExactReal, threshold, bits: int, tag) -> bool:
    """dist < threshold, exact when possible, else certified with escalation."""
    if isinstance(threshold, ExactReal):
        return dist.compare(threshold) < 0
    # threshold is a callable bits -> Interval (no exact closed form)
    work = bits
    for _ in range(5):
        thr = threshold(work)
        div = dist.evaluate(work)
        if div.hi < thr.lo:
            return True
        if div.lo > thr.hi:
            return False
        work *= 2
    raise PrecisionExhausted(f"closeness test undecided at {work} bits for {tag}")


def _is_close(
    subspace: AffineSubspaceSpec, q: int, p: tuple, threshold, bits: int
) -> bool:
    """Strict sup-norm closeness of the lifted point (q, p) to the lattice."""
    aug = subspace.augmented()
    for v in range(subspace.d - subspace.n):
        acc = aug[0][v] * q
        for i, pi in enumerate(p):
            acc = acc + aug[i + 1][v] * pi
        if not _threshold_compare(acc.nearest_int_dist(), threshold, bits, (q, p)):
            return False
    return True


def count_exact(cfg: CountConfig, bits: int = DEFAULT_BITS) -> int:
    """|{p : p_i >= 1, |p - q*x0| < q*eta, ||p_hat a|| < delta}| by enumeration."""
    ranges = []
    for ci in cfg.ball.center:
        r = _box_interval(cfg.q, ci, cfg.ball.radius)
        ranges.append(range(max(1, r.start), r.stop))
    total = 0
    for p in _cartesian(*ranges):
        if _is_close(cfg.subspace, cfg.q, p, cfg.delta, bits):
            total += 1
    return total


def _valid_p_zero_shift(cfg: AggregateConfig, threshold, bits: int) -> list:
    """Sorted p with ||p * tilt|| < threshold over 1 <= p <= q_cap.

    Zero-shift speciality: the closeness test does not involve q, so the
    admissible numerators can be computed once.  A float prefilter with a
    rigorous error band decides the easy cases; the band is settled
    exactly.
    """
    cap = cfg.q_cap
    tilt = cfg.subspace.tilt_float()[0]  # n == 1 here
    ps = np.arange(1, cap + 1, dtype=float)
    if isinstance(threshold, ExactReal):
        thr_iv = threshold.evaluate(64)
    else:
        thr_iv = threshold(64)
    thr = float(thr_iv.mid)
    band = float(thr_iv.width) + float(np.max(np.abs(tilt)) + 1.0) * cap * 2.0**-50
    dists = np.empty((len(tilt), cap))
    for v, col in enumerate(tilt):
        x = ps * col
        dists[v] = np.abs(x - np.rint(x))
    sup = dists.max(axis=0)
    keep = sup < thr - band
    unsure = (sup >= thr - band) & (sup <= thr + band)
    out = [int(i) + 1 for i in np.nonzero(keep)[0]]
    for i in np.nonzero(unsure)[0]:
        p = int(i) + 1
        if _is_close(cfg.subspace, 1, (p,), threshold, bits):
            out.append(p)
    out.sort()
    return out


def count_aggregate(
    cfg: AggregateConfig, bits: int = DEFAULT_BITS, budget: int = DEFAULT_BUDGET
) -> int:
    """Exact count of (q, p) with q <= k^(t-1), closeness < psi(k^t)/2, p/q in B."""
    cap = cfg.q_cap
    n = cfg.subspace.n
    if cap > budget:
        raise BudgetExceeded(f"q cap {cap} exceeds enumeration budget {budget}")
    threshold = half_threshold(cfg.psi, cfg.k**cfg.t)

    zero_shift = all(e.is_zero() for e in cfg.subspace.shift)
    if zero_shift and n == 1:
        valid = _valid_p_zero_shift(cfg, threshold, bits)
        x0 = cfg.ball.center[0]
        eta = cfg.ball.radius
        total = 0
        for q in range(1, cap + 1):
            r = _box_interval(q, x0, eta)
            lo = max(1, r.start)
            hi = min(r.stop - 1, cap)  # height cap also binds p
            if hi < lo:
                continue
            total += bisect.bisect_right(valid, hi) - bisect.bisect_left(valid, lo)
        return total

    # general path: plain double enumeration with a work budget
    spent = 0
    total = 0
    for q in range(1, cap + 1):
        ranges = []
        for ci in cfg.ball.center:
            r = _box_interval(q, ci, cfg.ball.radius)
            ranges.append(range(max(1, r.start), min(r.stop, cap + 1)))
        size = math.prod(len(r) for r in ranges)
        spent += size
        if spent > budget:
            raise BudgetExceeded(
                f"enumeration passed {spent} candidates, budget {budget}"
            )
        for p in _cartesian(*ranges):
            if _is_close(cfg.subspace, q, p, threshold, bits):
                total += 1
    return total


def lemma3_bound(
    q: int,
    delta,
    mB,
    omega,
    C,
    d: int,
    n: int,
) -> float:
    """3^d delta^(d-n) q^n m(B) + C delta^(d-n-omega) ln(1/delta - 1)^n.

    Callers are responsible for the applicability condition q >= 1/(2 eta);
    the expression itself only needs 0 < delta < 1/2.
    """
    delta = float(delta)
    if not 0.0 < delta < 0.5:
        raise ValueError("lemma3_bound needs 0 < delta < 1/2")
    main = 3.0**d * delta ** (d - n) * float(q) ** n * float(mB)
    tail = float(C) * delta ** (d - n - float(omega)) * math.log(1.0 / delta - 1.0) ** n
    return main + tail


def theorem4_bound(k: int, t: int, psi: ApproxFunction, mB, d: int, n: int):
    """3^(d+n+2) psi(k^t)^(d-n) k^((t-1)(n+1)) m(B).

    Returns an exact Fraction whenever psi(k^t)^(d-n) is rational, a float
    otherwise.
    """
    if k < 2 or t < 1:
        raise ValueError("need k >= 2 and t >= 1")
    level = k**t
    val = psi.exact_value(level)
    if val is not None:
        powed = ExactReal.rational(1)
        for _ in range(d - n):
            powed = powed * val
        if powed.is_rational:
            return (
                Fraction(3) ** (d + n + 2)
                * powed.as_fraction()
                * Fraction(k) ** ((t - 1) * (n + 1))
                * Fraction(mB)
            )
        return 3.0 ** (d + n + 2) * float(powed) * float(k) ** ((t - 1) * (n + 1)) * float(mB)
    return (
        3.0 ** (d + n + 2)
        * psi.value_float(level) ** (d - n)
        * float(k) ** ((t - 1) * (n + 1))
        * float(mB)
    )


@dataclass(frozen=True)
class SweepRow:
    t: int
    ball: Ball
    count: int
    bound: float
    margin: float
    passed: bool
    lemma3_count: Optional[int] = None
    lemma3_bound_value: Optional[float] = None
    lemma3_passed: Optional[bool] = None


@dataclass(frozen=True)
class SweepReport:
    k: int
    rows: tuple
    t_onset: Optional[int]
    all_pass: bool
    constant_scaled: Optional[float] = None

    def row_lines(self) -> list:
        out = []
        for r in self.rows:
            line = (
                f"t={r.t} count={r.count} bound={float(r.bound):.6g} "
                f"margin={r.margin:.6g} {'pass' if r.passed else 'FAIL'}"
            )
            if r.lemma3_count is not None:
                line += (
                    f" | lemma3 {r.lemma3_count} <= {r.lemma3_bound_value:.6g}"
                    f" {'pass' if r.lemma3_passed else 'FAIL'}"
                )
            out.append(line)
        return out


def verify_counting_sweep(
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    k: int,
    t_range: Sequence[int],
    balls: Sequence[Ball],
    C_fitted=None,
    bits: int = DEFAULT_BITS,
    budget: int = DEFAULT_BUDGET,
) -> SweepReport:
    """Aggregate counts vs. their ceiling across t and balls, plus onset t0.

    When C_fitted (a SumConstantFit) is given, each row also replays the
    single-q estimate at q = k^(t-1), delta = psi(k^t)/2 against
    lemma3_bound with the fitted constant scaled by 2^(omega - d + n),
    the normalization under which the reciprocal-sum constant enters the
    per-q bound.  Failures are recorded, never raised.
    """
    d, n = subspace.d, subspace.n
    scaled = None
    omega = None
    if C_fitted is not None:
        omega = float(C_fitted.omega)
        scaled = C_fitted.constant * 2.0 ** (omega - d + n)
    rows = []
    for t in sorted(set(int(t) for t in t_range)):
        for ball in balls:
            cfg = AggregateConfig(subspace=subspace, k=k, t=t, psi=psi, ball=ball)
            count = count_aggregate(cfg, bits=bits, budget=budget)
            bound = theorem4_bound(k, t, psi, ball.measure(), d, n)
            margin = float(bound) - count
            passed = count < float(bound)
            l3_count = l3_bound = l3_pass = None
            if C_fitted is not None:
                q_l = k ** (t - 1)
                thr = half_threshold(psi, k**t)
                delta = thr if isinstance(thr, ExactReal) else None
                if delta is not None and float(delta) < 0.5:
                    l3_count = count_exact(
                        CountConfig(subspace=subspace, q=q_l, delta=delta, ball=ball),
                        bits=bits,
                    )
                    l3_bound = lemma3_bound(
                        q_l, float(delta), ball.measure(), omega, scaled, d, n
                    )
                    l3_pass = l3_count <= l3_bound
            rows.append(
                SweepRow(
                    t=t,
                    ball=ball,
                    count=count,
                    bound=float(bound),
                    margin=margin,
                    passed=passed,
                    lemma3_count=l3_count,
                    lemma3_bound_value=l3_bound,
                    lemma3_passed=l3_pass,
                )
            )
    t_values = sorted(set(r.t for r in rows))
    t_onset = None
    for t in t_values:
        if all(r.passed for r in rows if r.t >= t):
            t_onset = t
            break
    return SweepReport(
        k=k,
        rows=tuple(rows),
        t_onset=t_onset,
        all_pass=all(r.passed for r in rows),
        constant_scaled=scaled,
    )
