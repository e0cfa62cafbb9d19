"""Linear-forms systems, a small exact solver, and covering witnesses.

The containment argument runs on a (d+1) x (d+1) block system in the
variables (r, p, q): closeness rows pin the lifted coordinates to the
integer vector r within psi(N)/2, ball rows pin p to q*x within the
middle bound 2^((d-n)/n) / (N^(1/n) psi(N)^((d-n)/n)), and the last row
caps |q| by N.  The bound product is exactly 1 and so is |det|, which
is precisely the boundary case where a nonzero integer solution is
still guaranteed (the final inequality is non-strict).

`solve_linear_forms` is a complete bounded search, not a reduction
pipeline: the inverse matrix bounds every admissible coordinate, and
expanding sup-norm shells are enumerated with certified checks.  At the
sizes this package runs (k <= 5, entry magnitudes small) that is both
exact and fast, and failure is always reported as search exhaustion,
never as a nonexistence claim.

A covering witness asks for the same solution with q >= 1 attached to a
concrete sample x, so the witness search walks q upward directly; for
each q the ball rows leave at most a couple of candidate numerators per
coordinate.  Both radius normalizations are recorded per witness: the
per-form radius beta/q it certifies, and the N-level radius beta/N the
covering statement quotes (stronger for q < N); see the report fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product as _cartesian
from typing import Optional, Sequence

from .core import AffineSubspaceSpec, ApproxFunction, HattedVector
from .exactreal import ExactReal
from .intervalmath import DEFAULT_BITS, Interval, PrecisionExhausted, pow_interval

__all__ = [
    "SearchExhausted",
    "LinearFormsSystem",
    "CoveringWitness",
    "solve_linear_forms",
    "build_containment_system",
    "middle_bound",
    "covering_witness",
]


class SearchExhausted(RuntimeError):
    """The bounded search ended without a verdict: solver incompleteness,
    never evidence of nonexistence."""


def _as_interval(v, bits: int) -> Interval:
    if isinstance(v, Interval):
        return v
    if isinstance(v, ExactReal):
        return v.evaluate(bits)
    return Interval.point(Fraction(v))


def _as_fraction(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, ExactReal) and v.is_rational:
        return v.as_fraction()
    return None


def _rational_matrix(rows):
    out = []
    for row in rows:
        qrow = []
        for e in row:
            f = _as_fraction(e)
            if f is None:
                return None
            qrow.append(f)
        out.append(tuple(qrow))
    return tuple(out)


def _rational_vector(vec):
    out = []
    for e in vec:
        f = _as_fraction(e)
        if f is None:
            return None
        out.append(f)
    return tuple(out)


def _det_fraction(m) -> Fraction:
    k = len(m)
    if k == 1:
        return m[0][0]
    if k == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = Fraction(0)
    for j in range(k):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * _det_fraction(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


@dataclass(frozen=True)
class LinearFormsSystem:
    """k linear forms |<row_i, x>| < C_i (i < k), |<row_k, x>| <= C_k.

    Entries and bounds may be Fractions, ExactReals, or pre-certified
    Intervals; everything is widened to intervals on demand.  Minkowski's
    guarantee needs |det| <= prod C_i, checked by `minkowski_applicable`.
    """

    rows: tuple
    bounds: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "bounds", tuple(self.bounds))
        k = len(rows)
        if k < 1:
            raise ValueError("need at least one form")
        if any(len(r) != k for r in rows):
            raise ValueError("system must be square")
        if len(self.bounds) != k:
            raise ValueError("need one bound per form")
        object.__setattr__(self, "_rows_q", _rational_matrix(rows))
        object.__setattr__(self, "_bounds_q", _rational_vector(self.bounds))

    @property
    def k(self) -> int:
        return len(self.rows)

    def row_interval(self, i: int, bits: int) -> tuple:
        return tuple(_as_interval(e, bits) for e in self.rows[i])

    def bound_interval(self, i: int, bits: int) -> Interval:
        return _as_interval(self.bounds[i], bits)

    def det_interval(self, bits: int) -> Interval:
        m = [self.row_interval(i, bits) for i in range(self.k)]
        return _det_laplace(m)

    def bounds_product(self, bits: int) -> Interval:
        acc = Interval.point(Fraction(1))
        for i in range(self.k):
            acc = acc * self.bound_interval(i, bits)
        return acc

    def minkowski_applicable(self, bits: int = DEFAULT_BITS) -> bool:
        """Certified |det| <= prod C_i, escalating before giving up."""
        if self._rows_q is not None and self._bounds_q is not None:
            prod_q = Fraction(1)
            for c in self._bounds_q:
                prod_q *= c
            return abs(_det_fraction(self._rows_q)) <= prod_q
        work = bits
        for _ in range(4):
            det = self.det_interval(work).abs()
            prod = self.bounds_product(work)
            if det.hi <= prod.lo:
                return True
            if det.lo > prod.hi:
                return False
            work *= 2
        raise PrecisionExhausted(
            f"|det| vs bound product undecided at {work} bits"
        )

    def check_candidate(self, x: Sequence[int], bits: int = DEFAULT_BITS) -> bool:
        """Certified test of all k inequalities at an integer point."""
        if self._rows_q is not None and self._bounds_q is not None:
            for i, (row, c) in enumerate(zip(self._rows_q, self._bounds_q)):
                val = abs(sum(e * xi for e, xi in zip(row, x) if xi))
                if (val >= c) if i < self.k - 1 else (val > c):
                    return False
            return True
        work = bits
        for _ in range(4):
            verdict = self._check_once(x, work)
            if verdict is not None:
                return verdict
            work *= 2
        raise PrecisionExhausted(f"candidate {tuple(x)} undecided at {work} bits")

    def _check_once(self, x: Sequence[int], bits: int) -> Optional[bool]:
        for i in range(self.k):
            acc = Interval.point(Fraction(0))
            for e, xi in zip(self.row_interval(i, bits), x):
                if xi:
                    acc = acc + e * xi
            acc = acc.abs()
            c = self.bound_interval(i, bits)
            strict = i < self.k - 1
            if strict:
                if acc.hi < c.lo:
                    continue
                if acc.lo >= c.hi:
                    return False
            else:
                if acc.hi <= c.lo:
                    continue
                if acc.lo > c.hi:
                    return False
            return None  # undecided at this precision
        return True


def _det_laplace(m: list) -> Interval:
    k = len(m)
    if k == 1:
        return m[0][0]
    if k == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    acc = Interval.point(Fraction(0))
    for j in range(k):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * _det_laplace(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def _shells(k: int, radius: int):
    """Integer points with sup norm exactly `radius`, deterministic order."""
    rng = range(-radius, radius + 1)
    for x in _cartesian(rng, repeat=k):
        if max(abs(c) for c in x) == radius:
            yield x


def _sign_normalize(x: tuple) -> tuple:
    for c in x:
        if c > 0:
            return x
        if c < 0:
            return tuple(-v for v in x)
    return x


def solve_linear_forms(
    system: LinearFormsSystem,
    budget: int = 2_000_000,
    bits: int = DEFAULT_BITS,
) -> tuple:
    """Nonzero integer solution of the system, found by complete search.

    The inverse matrix turns the bounds into per-coordinate caps
    (|x| <= sum_j |inv_ij| C_j componentwise), then shells of growing sup
    norm are enumerated with certified membership tests.  Exceeding the
    budget or an unusable (zero-straddling) determinant raises
    SearchExhausted; when the Minkowski precondition fails, ValueError.
    """
    if not system.minkowski_applicable(bits):
        raise ValueError("|det| <= prod C fails: Minkowski guarantee absent")
    k = system.k

    work = bits
    caps = None
    for _ in range(4):
        caps = _coordinate_caps(system, work)
        if caps is not None:
            break
        work *= 2
    if caps is None:
        raise SearchExhausted(
            "determinant interval straddles zero; inverse bound unavailable"
        )

    max_radius = max(caps)
    spent = 0
    for radius in range(1, max_radius + 1):
        for x in _shells(k, radius):
            if any(abs(c) > cap for c, cap in zip(x, caps)):
                continue
            spent += 1
            if spent > budget:
                raise SearchExhausted(
                    f"candidate budget {budget} exhausted at shell {radius}"
                )
            if system.check_candidate(x, bits):
                return _sign_normalize(x)
    raise SearchExhausted(
        f"no solution in the certified search box (caps {caps}); "
        "treat as solver incompleteness, not nonexistence"
    )


def _coordinate_caps(system: LinearFormsSystem, bits: int) -> Optional[list]:
    k = system.k
    if system._rows_q is not None and system._bounds_q is not None:
        mq = [list(r) for r in system._rows_q]
        det_q = _det_fraction(system._rows_q)
        if det_q == 0:
            return None
        caps = []
        for i in range(k):
            total = Fraction(0)
            for j in range(k):
                minor = [
                    [mq[r][c] for c in range(k) if c != i]
                    for r in range(k)
                    if r != j
                ]
                cof = _det_fraction(minor) if k > 1 else Fraction(1)
                total += abs(cof / det_q) * system._bounds_q[j]
            caps.append(int(total) + 1)
        return caps
    m = [system.row_interval(i, bits) for i in range(k)]
    det = _det_laplace(m)
    if det.contains_zero():
        return None
    caps = []
    for i in range(k):
        total = Interval.point(Fraction(0))
        for j in range(k):
            minor = [
                [m[r][c] for c in range(k) if c != i] for r in range(k) if r != j
            ]
            cof = _det_laplace(minor) if k > 1 else Interval.point(Fraction(1))
            inv_ij = cof / det
            total = total + inv_ij.abs() * system.bound_interval(j, bits)
        caps.append(int(total.hi) + 1)
    return caps


# -- containment system -----------------------------------------------------


def middle_bound(N: int, psi: ApproxFunction, d: int, n: int, bits: int = DEFAULT_BITS):
    """2^((d-n)/n) / (N^(1/n) psi(N)^((d-n)/n)); ExactReal when n = 1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    val = psi.exact_value(N)
    if n == 1 and val is not None:
        num = ExactReal.rational(Fraction(2) ** (d - n))
        den = ExactReal.rational(N)
        for _ in range(d - n):
            den = den * val
        return num / den
    out = pow_interval(Fraction(2), Fraction(d - n, n), bits)
    out = out / pow_interval(Fraction(N), Fraction(1, n), bits)
    psi_iv = psi.value_interval(N, bits)
    return out / pow_interval(psi_iv, Fraction(d - n, n), bits)


def build_containment_system(
    x: Sequence, N: int, psi: ApproxFunction, subspace: AffineSubspaceSpec
) -> LinearFormsSystem:
    """The (d+1)-form block system locating a rational point near x.

    Variables ordered (r_1..r_{d-n}, p_1..p_n, q).  Closeness rows carry
    bound psi(N)/2, ball rows the middle bound, and the final |q| <= N is
    the one non-strict inequality.  |det| = 1 and prod C = 1 by
    construction, both certifiable to any precision.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    d, n = subspace.d, subspace.n
    xs = tuple(ExactReal.coerce(v) for v in x)
    if len(xs) != n:
        raise ValueError("x must have n coordinates")
    m = d - n
    aug = subspace.augmented()
    zero = Fraction(0)
    rows = []
    for v in range(m):
        row = [zero] * (d + 1)
        row[v] = Fraction(-1)
        for i in range(n):
            row[m + i] = aug[i + 1][v]
        row[d] = aug[0][v]
        rows.append(tuple(row))
    for i in range(n):
        row = [zero] * (d + 1)
        row[m + i] = Fraction(-1)
        row[d] = xs[i]
        rows.append(tuple(row))
    last = [zero] * (d + 1)
    last[d] = Fraction(1)
    rows.append(tuple(last))

    psi_val = psi.exact_value(N)
    if psi_val is not None:
        close_bound = psi_val * Fraction(1, 2)
    else:
        close_bound = psi.value_interval(N, 192) * Fraction(1, 2)
    mid = middle_bound(N, psi, d, n, 192)
    bounds = [close_bound] * m + [mid] * n + [Fraction(N)]
    return LinearFormsSystem(rows=tuple(rows), bounds=tuple(bounds))


# -- covering witnesses -----------------------------------------------------


@dataclass(frozen=True)
class CoveringWitness:
    """A rational point p/q certified close to both x and the subspace.

    radius_ok certifies the per-form inequality |q x_i - p_i| < beta
    (equivalently |x_i - p_i/q| < beta/q); statement_radius_ok records
    whether the N-normalized radius beta/N also holds, which is the
    stronger requirement for q < N.  degenerate marks witnesses with a
    zero numerator component.
    """

    phat: HattedVector
    r: tuple
    radius_ok: bool
    closeness_ok: bool
    height_ok: bool
    statement_radius_ok: bool
    degenerate: bool

    def valid(self) -> bool:
        return self.radius_ok and self.closeness_ok and self.height_ok


def _certified_less(lhs: ExactReal, rhs, bits: int, strict: bool = True) -> bool:
    """lhs < rhs (or <=) with rhs an ExactReal or an Interval."""
    if isinstance(rhs, ExactReal):
        c = lhs.compare(rhs)
        return c < 0 if strict else c <= 0
    work = bits
    for _ in range(4):
        li = lhs.evaluate(work)
        if li.hi < rhs.lo:
            return True
        if li.lo > rhs.hi:
            return False
        work *= 2
    raise PrecisionExhausted("comparison undecided against interval bound")


def covering_witness(
    x: Sequence,
    N: int,
    psi: ApproxFunction,
    subspace: AffineSubspaceSpec,
    budget: int = 10_000_000,
    bits: int = DEFAULT_BITS,
) -> CoveringWitness:
    """Find (q, p) with q <= N, ||p_hat a|| < psi(N)/2, |x - p/q| < beta/q.

    Walks q = 1..N; the ball rows confine each p_i to a couple of
    integers around q*x_i, and every candidate is settled exactly.  The
    first fully valid witness with positive numerators wins; a valid but
    degenerate (some p_i = 0) witness is returned flagged only when
    nothing better exists.  Exhausting q <= N raises SearchExhausted.
    """
    d, n = subspace.d, subspace.n
    xs = tuple(ExactReal.coerce(v) for v in x)
    if len(xs) != n:
        raise ValueError("x must have n coordinates")
    psi_val = psi.exact_value(N)
    if psi_val is not None:
        close_bound = psi_val * Fraction(1, 2)
    else:
        close_bound = psi.value_interval(N, 192) * Fraction(1, 2)
    beta = middle_bound(N, psi, d, n, 192)

    aug = subspace.augmented()
    fallback = None
    spent = 0
    for q in range(1, N + 1):
        cand_ranges = []
        for xi in xs:
            target = xi * q
            base = target.floor()
            cands = []
            for p in (base - 1, base, base + 1, base + 2):
                if p < 0 or p > q:
                    continue
                err = abs(target - ExactReal.rational(p))
                if _certified_less(err, beta, bits):
                    cands.append(p)
            cand_ranges.append(cands)
        for p in _cartesian(*cand_ranges):
            spent += 1
            if spent > budget:
                raise SearchExhausted(f"witness budget {budget} exhausted at q={q}")
            ok, r_vec = _closeness_with_witness(aug, d, n, q, p, close_bound, bits)
            if not ok:
                continue
            statement = all(
                _certified_less(
                    abs(xs[i] * q - ExactReal.rational(p[i])) * N, beta * q, bits
                )
                for i in range(n)
            )
            wit = CoveringWitness(
                phat=HattedVector(q=q, p=tuple(p)),
                r=tuple(r_vec),
                radius_ok=True,
                closeness_ok=True,
                height_ok=q <= N,
                statement_radius_ok=statement,
                degenerate=any(pi == 0 for pi in p),
            )
            if not wit.degenerate:
                return wit
            if fallback is None:
                fallback = wit
    if fallback is not None:
        return fallback
    raise SearchExhausted(
        f"no covering witness with q <= {N}; the containment guarantee "
        "predicts one, so report this as a search defect"
    )


def _closeness_with_witness(aug, d, n, q, p, close_bound, bits):
    """Check sup-norm closeness of (q, p); return (ok, nearest integer r)."""
    r_vec = []
    for v in range(d - n):
        acc = aug[0][v] * q
        for i in range(n):
            if p[i]:
                acc = acc + aug[i + 1][v] * p[i]
        # nearest integer and the distance to it, exactly
        fl = acc.floor()
        fr = acc - ExactReal.rational(fl)
        if fr.compare(Fraction(1, 2)) <= 0:
            r_vec.append(fl)
            dist = fr
        else:
            r_vec.append(fl + 1)
            dist = ExactReal.rational(fl + 1) - acc
        if not _certified_less(dist, close_bound, bits):
            return False, ()
    return True, r_vec
