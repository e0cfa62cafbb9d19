"""Approximability verdicts, empirical measure, series classification, dimension.

Four views of the same limsup set.  A point is psi-approximable when
some denominator q brings every coordinate of q * lift(x) within psi(q)
of an integer; the measure of that set over a truncated q-range is
sampled; the volume series that governs full measure is classified
exactly from its exponents and cross-checked by condensation partial
sums; and the box-counting dimension of the truncated set is fitted
against the closed-form value.

Verdicts on individual points are certified (float prefilter, exact
arithmetic on anything borderline).  The dimension estimator is
deliberately not: it is a slope fit on box counts, a statistic, and
float evaluation keeps it honest and fast.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import (
    AffineSubspaceSpec,
    ApproxFunction,
    Ball,
    half_threshold,
    lift,
    psi_capital_exact,
)
from .exactreal import ExactReal
from .intervalmath import DEFAULT_BITS, PrecisionExhausted
from .madsum import estimate_exponent
from .ubiquity import JitteredSampler, wilson_interval

__all__ = [
    "ApproxVerdict",
    "MeasureReport",
    "CondensationReport",
    "DimensionEstimate",
    "is_approximable_upto",
    "empirical_measure",
    "divergence_classifier",
    "condensation_check",
    "box_dimension",
    "lift_transfer",
]

_CHUNK = 1 << 16


@dataclass(frozen=True)
class ApproxVerdict:
    """Scan outcome: the first certified denominator at or below Q, if any."""

    point: tuple
    first_q: Optional[int]
    Q: int


@dataclass(frozen=True)
class MeasureReport:
    Q: int
    fraction: float
    ci_low: float
    ci_high: float
    samples: int
    hits: int
    seed: int


@dataclass(frozen=True)
class CondensationReport:
    """Partial-sum diagnostics for the condensed volume series."""

    k: int
    T: int
    s: Fraction
    log_terms: tuple
    partial_sums: tuple
    verdict: Optional[str]
    classifier_verdict: Optional[str]
    agrees: Optional[bool]
    growth_slope: Optional[float]
    boundary_slope: Optional[float]

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.partial_sums else 0.0


@dataclass(frozen=True)
class DimensionEstimate:
    """Box-count slope over the fitted scale window."""

    tau: float
    scales: tuple
    counts: tuple
    slope: float
    formula_value: float
    residuals: tuple

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.scales, self.scales[1:])):
            raise ValueError("scales must be strictly decreasing")
        if any(b < a for a, b in zip(self.counts, self.counts[1:])):
            raise ValueError("counts must be non-decreasing as boxes shrink")


def is_approximable_upto(
    x: Sequence,
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    Q: int,
    bits: int = DEFAULT_BITS,
) -> ApproxVerdict:
    """Scan q = 1..Q for a certified ||q * lift(x)|| < psi(q); early exit.

    The scan runs a vectorized float pass per chunk and settles any q
    whose margin falls inside the rigorous error band with exact
    arithmetic, in increasing order, so first_q is exact.  Precision
    exhaustion reports the offending q.
    """
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if subspace.n >= subspace.d:
        raise ValueError("need n < d; ambient points have no lift to test")
    xs = tuple(ExactReal.coerce(v) for v in x)
    if len(xs) != subspace.n:
        raise ValueError(f"x must have length n={subspace.n}")
    lifted = lift(xs, subspace)
    lifted_f = np.array([float(v) for v in lifted])
    thr_band = 2.0**-48

    for lo in range(1, Q + 1, _CHUNK):
        hi = min(Q, lo + _CHUNK - 1)
        q_ints = np.arange(lo, hi + 1)
        qs = q_ints.astype(float)
        thr = psi.values_float(q_ints)
        band = qs * 2.0**-50 + thr * thr_band
        ok = np.ones(len(qs), dtype=bool)
        maybe = np.zeros(len(qs), dtype=bool)
        for coord in lifted_f:
            y = qs * coord
            margin = np.abs(y - np.rint(y)) - thr
            ok &= margin < -band
            maybe |= np.abs(margin) <= band
        candidates = np.nonzero(ok | maybe)[0]
        for idx in candidates:
            q = lo + int(idx)
            try:
                if _certified_at(lifted, q, psi, bits):
                    return ApproxVerdict(point=xs, first_q=q, Q=Q)
            except PrecisionExhausted as exc:
                raise PrecisionExhausted(f"undecidable at q={q}: {exc}") from exc
    return ApproxVerdict(point=xs, first_q=None, Q=Q)


def _certified_at(lifted: tuple, q: int, psi: ApproxFunction, bits: int) -> bool:
    """Exact or escalating-interval check of ||q * lifted|| < psi(q)."""
    threshold = half_threshold(psi, q)
    # half_threshold gives psi/2; the raw test wants psi itself
    if isinstance(threshold, ExactReal):
        full = threshold * 2
        for coord in lifted:
            if (coord * q).nearest_int_dist().compare(full) >= 0:
                return False
        return True
    for coord in lifted:
        dist = (coord * q).nearest_int_dist()
        work = bits
        decided = False
        for _ in range(5):
            di = dist.evaluate(work)
            ti = threshold(work) * 2
            if di.hi < ti.lo:
                decided = True
                break
            if di.lo >= ti.hi:
                return False
            work *= 2
        if not decided:
            raise PrecisionExhausted("threshold tie")
    return True


def empirical_measure(
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    Q: int,
    sample_count: int,
    seed: int,
    bits: int = DEFAULT_BITS,
) -> MeasureReport:
    """Fraction of jittered samples in [0,1]^n whose lift is approximable up to Q."""
    center = tuple(ExactReal.rational(Fraction(1, 2)) for _ in range(subspace.n))
    ball = Ball(center=center, radius=Fraction(1, 2))
    sampler = JitteredSampler(ball=ball, count=sample_count, seed=seed)
    hits = 0
    total = 0
    for pt in sampler.points():
        if is_approximable_upto(pt, subspace, psi, Q, bits).first_q is not None:
            hits += 1
        total += 1
    lo, hi = wilson_interval(hits, total)
    return MeasureReport(
        Q=Q,
        fraction=hits / total,
        ci_low=lo,
        ci_high=hi,
        samples=total,
        hits=hits,
        seed=seed,
    )


def _series_exponents(psi: ApproxFunction, d: int, n: int, s) -> tuple:
    """(power offset e, log weight w) of the term psi(q)^(d-n+s) q^(n-s)."""
    if psi.kind != "power_log":
        raise ValueError(
            "exact classification needs a power-log psi; run condensation_check "
            "partial sums as a numeric diagnostic instead"
        )
    s = Fraction(s)
    if not 0 <= s <= n:
        raise ValueError("need 0 <= s <= n")
    if not 1 <= n < d:
        raise ValueError("need 1 <= n < d")
    weight = Fraction(d - n) + s
    e = Fraction(n) - s - psi.tau * weight
    return e, psi.sigma * weight


def divergence_classifier(psi: ApproxFunction, d: int, n: int, s) -> str:
    """Classify sum of psi(q)^(d-n+s) q^(n-s) exactly from its exponents.

    Diverges iff the power exponent e = n - s - tau (d-n+s) exceeds -1,
    or equals -1 with log weight sigma (d-n+s) <= 1.
    """
    e, log_weight = _series_exponents(psi, d, n, s)
    if psi.coef == 0:
        return "converges"
    if e > -1:
        return "diverges"
    if e == -1 and log_weight <= 1:
        return "diverges"
    return "converges"


def condensation_check(
    psi: ApproxFunction,
    d: int,
    n: int,
    s,
    k: int,
    T: int,
    slope_tol: float = 1e-9,
) -> CondensationReport:
    """Partial sums of the condensed series sum_t k^t psi(k^t)^(d-n+s) k^(t(n-s)).

    Terms of a divergent series grow (or stay level with a sub-harmonic
    log factor); convergent ones decay geometrically.  The verdict fits
    log(term) against t over the upper half of the range: a positive or
    negative slope decides directly, a flat one defers to the decay in
    log t.  Cross-checked against the exact classifier.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if T < 0:
        raise ValueError("T must be >= 0")
    if psi.kind != "power_log":
        raise ValueError("condensation is wired for power-log psi")
    s = Fraction(s)
    weight = float(Fraction(d - n) + s)
    if T == 0:
        return CondensationReport(
            k=k, T=0, s=s, log_terms=(), partial_sums=(), verdict=None,
            classifier_verdict=None, agrees=None, growth_slope=None,
            boundary_slope=None,
        )
    if psi.coef == 0:
        zero = tuple(-math.inf for _ in range(T))
        sums = tuple(0.0 for _ in range(T))
        return CondensationReport(
            k=k, T=T, s=s, log_terms=zero, partial_sums=sums,
            verdict="converges", classifier_verdict="converges", agrees=True,
            growth_slope=None, boundary_slope=None,
        )

    lnk = math.log(k)
    base = float(math.log(float(psi.coef))) * weight
    power = float(Fraction(1) + Fraction(n) - s - psi.tau * (Fraction(d - n) + s))
    log_terms = []
    for t in range(1, T + 1):
        lt = base + t * power * lnk
        if psi.sigma != 0:
            lt -= float(psi.sigma) * weight * math.log(math.log(k**t + 1.0))
        log_terms.append(lt)
    sums = []
    acc = 0.0
    for lt in log_terms:
        acc += math.exp(lt) if lt < 700 else math.inf
        sums.append(acc)

    growth = None
    boundary = None
    verdict = None
    if T >= 4:
        ts = np.arange(max(1, T // 2), T + 1).astype(float)
        window = np.array(log_terms[max(1, T // 2) - 1 : T])
        growth = float(np.polyfit(ts, window, 1)[0])
        if growth > slope_tol:
            verdict = "diverges"
        elif growth < -slope_tol:
            verdict = "converges"
        else:
            boundary = float(np.polyfit(np.log(ts), window, 1)[0])
            verdict = "diverges" if boundary >= -1.0 - 1e-9 else "converges"

    classifier = divergence_classifier(psi, d, n, s)
    agrees = None if verdict is None else verdict == classifier
    return CondensationReport(
        k=k,
        T=T,
        s=s,
        log_terms=tuple(log_terms),
        partial_sums=tuple(sums),
        verdict=verdict,
        classifier_verdict=classifier,
        agrees=agrees,
        growth_slope=growth,
        boundary_slope=boundary,
    )


def box_dimension(
    subspace: Optional[AffineSubspaceSpec],
    tau,
    Q: int,
    scales: Optional[Sequence[Fraction]] = None,
    seed: int = 0,
    bits: int = DEFAULT_BITS,
) -> DimensionEstimate:
    """Box-count the truncated tau-approximable set, fit the dimension slope.

    At scale s the boxes tile [0,1] from a seeded dyadic grid offset; a
    box is hit when its center passes the approximability test with
    slack half the box side added per coordinate (scaled by the tilt
    gain).  Denominators are scanned in the window matched to the box
    size, (cap/2, cap] with cap = s^(-1/(tau+1)) clipped at Q: smaller q
    only pads saturation, larger q is invisible at the scale.  The slope
    is fitted over the middle octaves: leading scales where the set
    still fills over half the boxes are dropped (a truncated limsup set
    has large measure at coarse resolution, so those octaves carry no
    slope), as are scales whose window hit the Q ceiling.  Shallow
    schedules may never leave the saturated regime; push the scales a
    few octaves deeper than the default when the fit looks transient.

    ``subspace=None`` measures the classical ambient set on [0,1], the
    d = n = 1 reading of the same formula.
    """
    tau_f = Fraction(tau)
    if scales is None:
        scales = tuple(Fraction(1, 2**j) for j in range(3, 13))
    scales = tuple(Fraction(sc) for sc in scales)
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")

    if subspace is None:
        n, d = 1, 1
        tilt_f = np.zeros(0)
        shift_f = np.zeros(0)
    else:
        n, d = subspace.n, subspace.d
        if n != 1:
            raise ValueError("box counting is wired for n = 1")
        tilt_f = subspace.tilt_float()[0]
        shift_f = subspace.shift_float()
        forms = [
            [subspace.tilt[i][v] for i in range(n)]
            for v in range(d - n)
        ]
        gate = estimate_exponent(forms, j_max=20_000, bits=bits)
        if not gate.fitted_omega + gate.omega_band < n / float(tau_f):
            raise ValueError(
                f"exponent gate failed: omega-hat {gate.fitted_omega:.4f} "
                f"(+{gate.omega_band:.4f}) is not below n/tau = {n / float(tau_f):.4f}"
            )
    if tau_f < Fraction(1, d):
        raise ValueError("need tau >= 1/d")

    rng = random.Random(seed)
    counts = []
    clipped = []
    for sc in scales:
        c, was_clipped = _boxes_hit(sc, tau_f, Q, tilt_f, shift_f, rng)
        counts.append(c)
        clipped.append(was_clipped)

    # middle octaves only: leading octaves where the truncated set still
    # fills most boxes carry no slope information, and octaves whose
    # denominator window hit the Q ceiling are truncation-starved
    keep = []
    saturated_head = True
    for i, sc in enumerate(scales):
        frac = counts[i] / math.floor(1 / sc)
        if saturated_head and frac > 0.5:
            continue
        saturated_head = False
        if clipped[i] or counts[i] == 0:
            continue
        keep.append(i)
    if len(keep) < 3:
        keep = [i for i, c in enumerate(counts) if c > 0][-3:]
    # fit only the stabilized tail: the longest suffix on which counts
    # grow monotonically as boxes shrink (coarse matched windows hold so
    # few denominators that counts jitter)
    suffix = keep[-1:]
    for i in reversed(keep[:-1]):
        if counts[i] <= counts[suffix[0]]:
            suffix.insert(0, i)
        else:
            break
    keep = suffix
    if len(keep) < 3:
        raise ValueError("too few populated scales to fit a slope")
    xs = np.array([math.log(1.0 / float(scales[i])) for i in keep])
    ys = np.array([math.log(counts[i]) for i in keep])
    slope, intercept = np.polyfit(xs, ys, 1)
    residuals = tuple(float(y - (slope * x + intercept)) for x, y in zip(xs, ys))
    formula = n - (float(tau_f) * d - 1.0) / (float(tau_f) + 1.0)
    return DimensionEstimate(
        tau=float(tau_f),
        scales=tuple(scales[i] for i in keep),
        counts=tuple(counts[i] for i in keep),
        slope=float(slope),
        formula_value=formula,
        residuals=residuals,
    )


def _boxes_hit(
    sc: Fraction,
    tau: Fraction,
    Q: int,
    tilt_f: np.ndarray,
    shift_f: np.ndarray,
    rng: random.Random,
) -> tuple:
    """(boxes hit at this scale, whether the q-window was clipped by Q)."""
    s = float(sc)
    m = math.floor(1 / sc)
    offset = Fraction(rng.getrandbits(256), 1 << 256)
    centers = (np.arange(m) + float(offset)) * s
    cap = s ** (-1.0 / (float(tau) + 1.0))
    q_hi = min(math.floor(cap), Q)
    q_lo = max(1, math.floor(cap / 2) + 1)
    if q_hi < q_lo:
        return 0, True
    hit = np.zeros(m, dtype=bool)
    half = s / 2.0
    for q in range(q_lo, q_hi + 1):
        thr = float(q) ** (-float(tau))
        y = q * centers
        ok = np.abs(y - np.rint(y)) < thr + q * half
        for v in range(len(tilt_f)):
            z = q * (centers * tilt_f[v] + shift_f[v])
            ok &= np.abs(z - np.rint(z)) < thr + q * half * abs(tilt_f[v])
        hit |= ok
        if hit.all():
            break
    return int(hit.sum()), math.floor(cap) > Q


def lift_transfer(
    subspace: AffineSubspaceSpec,
    psi: ApproxFunction,
    phat,
    x,
    bits: int = DEFAULT_BITS,
) -> bool:
    """Certify the closeness transfer from base to lift at a resonant point.

    Given ||p_hat a|| < psi(q)/2 and |x - p/q| < Psi(q), every coordinate
    of q * lift(x) must land within psi(q) of the integer witness: the
    tilt-induced displacement costs at most psi(q)/2 because Psi divides
    out 2 n |a|, and the triangle inequality absorbs it.  Returns True
    only when the full chain is certified for this x.
    """
    if subspace.n != 1:
        raise ValueError("transfer check is wired for n = 1")
    q = phat.q
    x = ExactReal.coerce(x)
    cap = psi_capital_exact(q, psi, subspace)
    if cap is None:
        raise ValueError("transfer check needs an exact Psi at this q")
    base_err = abs(x * q - ExactReal.rational(phat.p[0]))
    if base_err.compare(cap * q) >= 0:
        return False
    full = half_threshold(psi, q)
    if not isinstance(full, ExactReal):
        raise ValueError("transfer check needs an exact psi at this q")
    full = full * 2
    lifted = lift((x,), subspace)
    for coord in lifted:
        if (coord * q).nearest_int_dist().compare(full) >= 0:
            return False
    return True
