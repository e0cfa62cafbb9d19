"""Resonant points, the covering radius rho, and measured covering fractions.

Rational points p/q whose hatted vector sits within psi(q)/2 of the
integer lattice are the resonance centers; at level t they carry balls
of radius rho(k^t) and the question is what fraction of a target ball
those balls cover.  The fraction is measured, not assumed: the theory
guarantees some positive kappa once t is large enough but gives no
constructive value, so reports record the empirical fraction with a
binomial confidence band and leave the threshold comparison to the
caller.

Sample points come from a seeded jittered grid whose coordinates are
256-bit dyadic fractions.  That matters: rational samples with small
denominators sit on resonant points of their own accord and would bias
the measurement upward.
"""

from __future__ import annotations

import itertools
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import numpy as np

from .core import AffineSubspaceSpec, ApproxFunction, Ball, HattedVector, half_threshold
from .exactreal import ExactReal
from .intervalmath import DEFAULT_BITS, Interval, PrecisionExhausted

__all__ = [
    "ResonantPoint",
    "CoverReport",
    "JitteredSampler",
    "resonant_points",
    "rho",
    "rho_exact",
    "rho_interval",
    "min_k",
    "covering_fraction",
    "regularity_check",
    "wilson_interval",
]


@dataclass(frozen=True)
class ResonantPoint:
    """A rational point p/q certified within psi(q)/2 of the lattice."""

    phat: HattedVector
    point: tuple  # p_i / q as Fractions
    weight: int  # q
    closeness: Interval


@dataclass(frozen=True)
class CoverReport:
    k: int
    t: int
    ball: Ball
    fraction: float
    kappa_target: float
    grid_resolution: int
    seed: int
    samples: int
    hits: int
    ci_low: float
    ci_high: float
    ci_half_width: float
    q_low: int
    q_high: int
    rho_value: float


@dataclass(frozen=True)
class JitteredSampler:
    """Deterministic jittered grid over a ball.

    One dyadic jitter per cell per axis, cells walked in lexicographic
    order, all randomness drawn from a single seeded stream.  The
    realized sample count is resolution**n, the smallest grid power at
    or above ``count``.  Coordinates are fractions with denominator
    2**dyadic_bits, so no sample ever coincides with a rational point
    of small height.
    """

    ball: Ball
    count: int
    seed: int
    dyadic_bits: int = 256

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("need at least one sample")
        if self.dyadic_bits < 64:
            raise ValueError("jitter needs >= 64 dyadic bits to stay non-degenerate")
        for c in self.ball.center:
            if not c.is_rational:
                raise ValueError("jittered sampling needs a rational ball center")

    @property
    def n(self) -> int:
        return len(self.ball.center)

    @property
    def resolution(self) -> int:
        return math.ceil(self.count ** (1.0 / self.n))

    @property
    def realized_count(self) -> int:
        return self.resolution**self.n

    def points(self) -> Iterator[tuple]:
        rng = random.Random(self.seed)
        m = self.resolution
        scale = 1 << self.dyadic_bits
        lows = [c.as_fraction() - self.ball.radius for c in self.ball.center]
        width = 2 * self.ball.radius
        for cells in itertools.product(range(m), repeat=self.n):
            coords = []
            for i in range(self.n):
                u = Fraction(rng.getrandbits(self.dyadic_bits), scale)
                coords.append(lows[i] + width * Fraction(cells[i] + u, m))
            yield tuple(coords)


def resonant_points(
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    q_max: int,
    bits: int = DEFAULT_BITS,
) -> list:
    """All p/q with p in [0,q]^n, q <= q_max, and ||p_hat a|| < psi(q)/2."""
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    out = []
    for q in range(1, q_max + 1):
        threshold = half_threshold(psi, q)
        for p in _p_grid(subspace.n, q):
            ok, dist_iv = _membership(subspace, q, p, threshold, bits)
            if ok:
                out.append(
                    ResonantPoint(
                        phat=HattedVector(q=q, p=p),
                        point=tuple(Fraction(pi, q) for pi in p),
                        weight=q,
                        closeness=dist_iv,
                    )
                )
    return out


def _p_grid(n: int, q: int) -> Iterator[tuple]:
    if n == 1:
        for p in range(0, q + 1):
            yield (p,)
        return
    yield from itertools.product(range(0, q + 1), repeat=n)


def _membership(subspace, q, p, threshold, bits):
    """(is-member, certified enclosure of the sup distance)."""
    aug = subspace.augmented()
    sup_iv = Interval.point(Fraction(0))
    for v in range(subspace.d - subspace.n):
        acc = aug[0][v] * q
        for i, pi in enumerate(p):
            if pi:
                acc = acc + aug[i + 1][v] * pi
        dist = acc.nearest_int_dist()
        if isinstance(threshold, ExactReal):
            if dist.compare(threshold) >= 0:
                return False, sup_iv
        else:
            work = bits
            decided = False
            for _ in range(4):
                di = dist.evaluate(work)
                ti = threshold(work)
                if di.hi < ti.lo:
                    decided = True
                    break
                if di.lo >= ti.hi:
                    return False, sup_iv
                work *= 2
            if not decided:
                raise PrecisionExhausted(f"membership tie at q={q}, p={p}")
        div = dist.evaluate(bits)
        sup_iv = Interval(max(sup_iv.lo, div.lo), max(sup_iv.hi, div.hi))
    return True, sup_iv


def rho(q: int, psi: ApproxFunction, d: int, n: int) -> float:
    """Covering radius 2^((d-n)/n) / (q^((n+1)/n) psi(q)^((d-n)/n)), in float."""
    if q < 1:
        raise ValueError("q must be >= 1")
    return (
        2.0 ** ((d - n) / n)
        / (float(q) ** ((n + 1) / n) * psi.value_float(q) ** ((d - n) / n))
    )


def rho_exact(q: int, psi: ApproxFunction, d: int, n: int) -> Optional[ExactReal]:
    """The covering radius exactly, when n = 1 and psi(q) stays quadratic."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if n != 1:
        return None
    val = psi.exact_value(q)
    if val is None:
        return None
    den = ExactReal.rational(Fraction(q) ** (n + 1))
    for _ in range(d - n):
        den = den * val
    return ExactReal.rational(Fraction(2) ** (d - n)) / den


def rho_interval(q: int, psi: ApproxFunction, d: int, n: int, bits: int) -> Interval:
    """Certified enclosure of the covering radius; n = 1 keeps exponents integral."""
    if n != 1:
        raise ValueError("interval rho is wired for n = 1")
    pw = psi.value_interval(q, bits + 8)
    den = Interval.point(Fraction(q) ** 2)
    for _ in range(d - n):
        den = den * pw
    return (den.reciprocal() * (Fraction(2) ** (d - n))).quantize(bits)


def min_k(n: int, d: int) -> float:
    """Threshold above which the level base k makes the covering argument run."""
    if not 1 <= n < d:
        raise ValueError("need 1 <= n < d")
    return 2.0 ** ((n + d) / (n + 1)) * 3.0 ** ((n + d + 2) / (n + 1))


def covering_fraction(
    ball: Ball,
    k: int,
    t: int,
    psi: ApproxFunction,
    subspace: AffineSubspaceSpec,
    sampler: Optional[JitteredSampler] = None,
    bits: int = DEFAULT_BITS,
    kappa_target: float = 0.0,
    threads: int = 1,
    rho_scale: Fraction = Fraction(1),
) -> CoverReport:
    """Fraction of ball samples within rho(k^t) of a level-t resonant point.

    Levels are the denominators k^(t-1) < q <= k^t.  Membership of each
    sample is decided by a per-q scan: q*rho(k^t) < 1/2 keeps the only
    candidate numerator at round(q*x), a float prefilter classifies the
    clear cases, and anything inside the rigorous error band is settled
    exactly.  Hit counts are integers and samples are partitioned into
    contiguous chunks, so the thread count cannot change the result.

    rho_scale multiplies the covering radius; coverage must be monotone
    in it, which is what scale-doubling tests check.
    """
    if k < 2 or t < 1:
        raise ValueError("need k >= 2, t >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    if subspace.n != 1:
        raise ValueError("covering fraction measurement is wired for n = 1")
    rho_scale = Fraction(rho_scale)
    if rho_scale <= 0:
        raise ValueError("rho_scale must be positive")
    if sampler is None:
        sampler = JitteredSampler(ball=ball, count=10_000, seed=0)
    level = k**t
    q_low = k ** (t - 1)
    r_exact = rho_exact(level, psi, subspace.d, subspace.n)
    if r_exact is not None:
        r_exact = r_exact * rho_scale
    r_float = rho(level, psi, subspace.d, subspace.n) * float(rho_scale)
    if level * r_float >= 0.5:
        raise ValueError(
            "q * rho >= 1/2 at the top level; the unique-candidate scan "
            "does not apply to this configuration"
        )

    q_ints = np.arange(q_low + 1, level + 1)
    qs = q_ints.astype(float)
    thr_q = psi.values_float(q_ints) / 2.0
    shift_f = subspace.shift_float()
    tilt_f = subspace.tilt_float()[0]
    # rigorous float-error allowance: |x| <= 1, q <= level, entries O(1)
    band = level * 2.0**-48

    points = list(sampler.points())

    def count_chunk(chunk) -> int:
        c = 0
        for x in chunk:
            if _sample_covered(
                x[0], qs, thr_q, shift_f, tilt_f, r_float, band,
                subspace, psi, r_exact, q_low, level, bits, rho_scale,
            ):
                c += 1
        return c

    if threads == 1:
        hits = count_chunk(points)
    else:
        step = math.ceil(len(points) / threads)
        chunks = [points[i : i + step] for i in range(0, len(points), step)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(count_chunk, chunks))

    samples = len(points)
    frac = hits / samples
    lo, hi = wilson_interval(hits, samples)
    return CoverReport(
        k=k,
        t=t,
        ball=ball,
        fraction=frac,
        kappa_target=kappa_target,
        grid_resolution=sampler.resolution,
        seed=sampler.seed,
        samples=samples,
        hits=hits,
        ci_low=lo,
        ci_high=hi,
        ci_half_width=(hi - lo) / 2.0,
        q_low=q_low,
        q_high=level,
        rho_value=r_float,
    )


def _sample_covered(
    x: Fraction,
    qs: np.ndarray,
    thr_q: np.ndarray,
    shift_f: np.ndarray,
    tilt_f: np.ndarray,
    r_float: float,
    band: float,
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    r_exact: Optional[ExactReal],
    q_low: int,
    level: int,
    bits: int,
    rho_scale: Fraction,
) -> bool:
    xf = float(x)
    qx = qs * xf
    px = np.rint(qx)
    ball_margin = np.abs(qx - px) - qs * r_float
    close_ok = np.ones(len(qs), dtype=bool)
    close_maybe = np.zeros(len(qs), dtype=bool)
    for v in range(subspace.d - subspace.n):
        y = qs * shift_f[v] + px * tilt_f[v]
        margin = np.abs(y - np.rint(y)) - thr_q
        close_ok &= margin < -band
        close_maybe |= np.abs(margin) <= band
    in_range = (px >= 0) & (px <= qs)
    if ((ball_margin < -band) & close_ok & in_range).any():
        return True
    # anything not certainly rejected by the ball test whose closeness or
    # ball margin is borderline gets the exact treatment
    ambiguous = in_range & (ball_margin < band) & (
        (np.abs(ball_margin) <= band) | close_maybe | close_ok
    )
    for idx in np.nonzero(ambiguous)[0]:
        q = q_low + 1 + int(idx)
        if _exact_hit(x, q, int(px[idx]), subspace, psi, r_exact, level, bits, rho_scale):
            return True
    return False


def _exact_hit(
    x: Fraction,
    q: int,
    p: int,
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    r_exact: Optional[ExactReal],
    level: int,
    bits: int,
    rho_scale: Fraction = Fraction(1),
) -> bool:
    if p < 0 or p > q:
        return False
    err = abs(ExactReal.rational(Fraction(x) * q - p))
    if r_exact is not None:
        if err.compare(r_exact * q) >= 0:
            return False
    else:
        work = bits
        for _ in range(5):
            bound = rho_interval(level, psi, subspace.d, subspace.n, work) * (q * rho_scale)
            ei = err.evaluate(work)
            if ei.hi < bound.lo:
                break
            if ei.lo >= bound.hi:
                return False
            work *= 2
        else:
            raise PrecisionExhausted(f"ball-radius tie at q={q}, p={p}")
    threshold = half_threshold(psi, q)
    ok, _ = _membership(subspace, q, (p,), threshold, bits)
    return ok


def wilson_interval(hits: int, total: int, z: float = 1.959963984540054) -> tuple:
    """95% Wilson score interval for a binomial proportion."""
    if total == 0:
        return 0.0, 1.0
    ph = hits / total
    z2 = z * z
    denom = 1.0 + z2 / total
    center = (ph + z2 / (2 * total)) / denom
    half = z * math.sqrt(ph * (1 - ph) / total + z2 / (4 * total * total)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def regularity_check(
    psi: ApproxFunction,
    subspace: AffineSubspaceSpec,
    k: int,
    t_range: Sequence[int],
) -> tuple:
    """Check Psi(k^(t+1))/Psi(k^t) <= 1/k across the range; power-log only.

    Psi(q) = psi(q)/(2 n |a| q), so the subspace constant cancels and each
    ratio reduces to psi(k^(t+1)) / (k * psi(k^t)).  Returns (ok, ratios).
    """
    if psi.kind != "power_log":
        raise ValueError("regularity is checked in closed form for power-log psi")
    if k < 2:
        raise ValueError("k must be >= 2")
    ratios = []
    for t in t_range:
        if t < 1:
            raise ValueError("levels start at t = 1")
        a = psi.value_float(k**t)
        b = psi.value_float(k ** (t + 1))
        ratios.append(b / (k * a))
    ok = all(r <= 1.0 / k + 1e-12 for r in ratios)
    return ok, tuple(ratios)
