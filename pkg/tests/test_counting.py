"""Exact lattice-point counts and their certified ceilings."""

import random
from fractions import Fraction

import pytest

from dioplab.core import AffineSubspaceSpec, ApproxFunction, Ball, half_threshold
from dioplab.counting import (
    AggregateConfig,
    BudgetExceeded,
    CountConfig,
    count_aggregate,
    count_exact,
    lemma3_bound,
    theorem4_bound,
    verify_counting_sweep,
)
from dioplab.exactreal import ExactReal
from dioplab.madsum import SumConstantFit

SQRT2_LINE = AffineSubspaceSpec(
    d=2, n=1, tilt=[[ExactReal.sqrt(2)]], shift=[Fraction(0)]
)
SHIFTED_LINE = AffineSubspaceSpec(
    d=2, n=1, tilt=[[ExactReal.sqrt(2)]], shift=[Fraction(1, 3)]
)
UNIT_BALL = Ball(center=[Fraction(1, 2)], radius=Fraction(1, 2))
PSI_SQRT = ApproxFunction.power(Fraction(1, 2))

_rng = random.Random(20260816)
# (q, eta_num, eta_den, x0_num, tilt_D) with q < 1/(2 eta): the open box
# |p - q x0| < q eta is shorter than 1, so it holds at most one integer.
_NARROW_CASES = []
while len(_NARROW_CASES) < 40:
    den = _rng.randrange(8, 64)
    num = _rng.randrange(1, max(2, den // 6))
    eta = Fraction(num, den)
    q_max = int(1 / (2 * eta))
    if q_max < 1:
        continue
    q = _rng.randrange(1, q_max + 1)
    x0_den = _rng.randrange(4, 40)
    lo = eta * x0_den
    x0_num = _rng.randrange(int(lo) + 1, x0_den - int(lo)) if x0_den - 2 * int(lo) > 1 else None
    if x0_num is None:
        continue
    D = _rng.choice([2, 3, 5, 7])
    _NARROW_CASES.append((q, num, den, x0_num, x0_den, D))


class TestCountConfig:
    def test_rejects_nonpositive_q(self):
        with pytest.raises(ValueError):
            CountConfig(subspace=SQRT2_LINE, q=0, delta=Fraction(1, 5), ball=UNIT_BALL)

    def test_rejects_nonpositive_delta(self):
        with pytest.raises(ValueError):
            CountConfig(subspace=SQRT2_LINE, q=5, delta=0, ball=UNIT_BALL)

    def test_rejects_dimension_mismatch(self):
        fat = Ball(center=[Fraction(1, 2), Fraction(1, 2)], radius=Fraction(1, 4))
        with pytest.raises(ValueError):
            CountConfig(subspace=SQRT2_LINE, q=5, delta=Fraction(1, 5), ball=fat)

    def test_rejects_ball_outside_unit_cube(self):
        out = Ball(center=[Fraction(9, 10)], radius=Fraction(1, 4))
        with pytest.raises(ValueError):
            CountConfig(subspace=SQRT2_LINE, q=5, delta=Fraction(1, 5), ball=out)


class TestCountExact:
    def test_sqrt2_line_q5(self):
        cfg = CountConfig(subspace=SQRT2_LINE, q=5, delta=Fraction(1, 5), ball=UNIT_BALL)
        assert count_exact(cfg) == 1

    def test_unit_denominator_unit_ball_is_empty(self):
        # |p - 1/2| < 1/2 is the open interval (0, 1): no integers at all
        cfg = CountConfig(subspace=SQRT2_LINE, q=1, delta=Fraction(1, 5), ball=UNIT_BALL)
        assert count_exact(cfg) == 0

    def test_huge_delta_counts_whole_box(self):
        cfg = CountConfig(subspace=SQRT2_LINE, q=7, delta=Fraction(2), ball=UNIT_BALL)
        assert count_exact(cfg) == 6  # p in the open interval (0, 7)

    @pytest.mark.parametrize("q,en,ed,xn,xd,D", _NARROW_CASES)
    def test_narrow_box_holds_at_most_one_point(self, q, en, ed, xn, xd, D):
        sub = AffineSubspaceSpec(
            d=2, n=1, tilt=[[ExactReal.sqrt(D)]], shift=[Fraction(0)]
        )
        ball = Ball(center=[Fraction(xn, xd)], radius=Fraction(en, ed))
        cfg = CountConfig(subspace=sub, q=q, delta=Fraction(10), ball=ball)
        assert count_exact(cfg) <= 1

    def test_deterministic(self):
        cfg = CountConfig(subspace=SHIFTED_LINE, q=50, delta=Fraction(1, 7), ball=UNIT_BALL)
        assert count_exact(cfg) == count_exact(cfg)


class TestLemma3Bound:
    def test_reference_value(self):
        got = lemma3_bound(100, Fraction(1, 5), 1, Fraction(21, 20), 1.0, 2, 1)
        assert got == 181.50246359212068

    @pytest.mark.parametrize("delta", [Fraction(1, 2), Fraction(3, 4), 0, Fraction(-1, 5)])
    def test_rejects_delta_outside_open_half(self, delta):
        with pytest.raises(ValueError):
            lemma3_bound(100, delta, 1, Fraction(21, 20), 1.0, 2, 1)

    def test_zero_measure_leaves_only_tail(self):
        import math

        delta = 0.2
        got = lemma3_bound(100, delta, 0, Fraction(21, 20), 2.0, 2, 1)
        tail = 2.0 * delta ** (1 - 1.05) * math.log(1 / delta - 1)
        assert got == pytest.approx(tail, rel=1e-15)

    def test_monotone_in_q(self):
        vals = [lemma3_bound(q, 0.2, 1, Fraction(21, 20), 1.0, 2, 1) for q in (10, 100, 1000)]
        assert vals[0] < vals[1] < vals[2]


class TestTheorem4Bound:
    def test_exact_fraction_at_even_t(self):
        got = theorem4_bound(45, 2, PSI_SQRT, Fraction(1), 2, 1)
        assert isinstance(got, Fraction)
        assert got == 10935

    def test_step_ratio_is_k_cubed(self):
        # psi = q^(-1/2), n = 1: two steps in t multiply the bound by k^3
        b2 = theorem4_bound(45, 2, PSI_SQRT, Fraction(1), 2, 1)
        b4 = theorem4_bound(45, 4, PSI_SQRT, Fraction(1), 2, 1)
        assert b4 / b2 == Fraction(45) ** 3

    def test_irrational_psi_value_falls_back_to_float(self):
        got = theorem4_bound(45, 3, PSI_SQRT, Fraction(1), 2, 1)
        assert isinstance(got, float)
        assert got == pytest.approx(3300939.450084627, rel=1e-12)

    def test_zero_measure_is_zero(self):
        assert theorem4_bound(45, 2, PSI_SQRT, 0, 2, 1) == 0

    @pytest.mark.parametrize("k,t", [(1, 3), (45, 0)])
    def test_rejects_bad_k_t(self, k, t):
        with pytest.raises(ValueError):
            theorem4_bound(k, t, PSI_SQRT, Fraction(1), 2, 1)


class TestCountAggregate:
    def test_sqrt2_line_small_t(self):
        for t, expected in [(1, 0), (2, 0), (3, 5479)]:
            cfg = AggregateConfig(subspace=SQRT2_LINE, k=45, t=t, psi=PSI_SQRT, ball=UNIT_BALL)
            assert count_aggregate(cfg) == expected

    def test_matches_per_denominator_sums(self):
        # the aggregate over q <= k^(t-1) is the sum of single-q counts at
        # the shared threshold psi(k^t)/2; check both enumeration paths
        k, t = 3, 3
        thr = half_threshold(PSI_SQRT, k**t)
        assert isinstance(thr, ExactReal)
        for sub, expected in [(SQRT2_LINE, 4), (SHIFTED_LINE, 8)]:
            agg = count_aggregate(
                AggregateConfig(subspace=sub, k=k, t=t, psi=PSI_SQRT, ball=UNIT_BALL)
            )
            per_q = sum(
                count_exact(CountConfig(subspace=sub, q=q, delta=thr, ball=UNIT_BALL))
                for q in range(1, k ** (t - 1) + 1)
            )
            assert agg == per_q == expected

    def test_zero_shift_larger_anchor(self):
        cfg = AggregateConfig(subspace=SQRT2_LINE, k=5, t=4, psi=PSI_SQRT, ball=UNIT_BALL)
        assert count_aggregate(cfg) == 261

    def test_cap_over_budget_raises(self):
        cfg = AggregateConfig(subspace=SQRT2_LINE, k=10, t=5, psi=PSI_SQRT, ball=UNIT_BALL)
        with pytest.raises(BudgetExceeded):
            count_aggregate(cfg, budget=1000)

    def test_candidate_budget_raises_on_general_path(self):
        cfg = AggregateConfig(subspace=SHIFTED_LINE, k=3, t=3, psi=PSI_SQRT, ball=UNIT_BALL)
        with pytest.raises(BudgetExceeded):
            count_aggregate(cfg, budget=12)
        assert count_aggregate(cfg, budget=40) == 8


class TestVerifyCountingSweep:
    def test_small_sweep_report(self):
        rep = verify_counting_sweep(
            SQRT2_LINE, PSI_SQRT, 10, range(2, 5), [UNIT_BALL]
        )
        assert rep.k == 10
        assert len(rep.rows) == 3
        assert [r.t for r in rep.rows] == [2, 3, 4]
        assert rep.all_pass
        assert rep.t_onset == 2
        assert rep.constant_scaled is None
        assert all(r.lemma3_count is None for r in rep.rows)
        assert all(r.margin == float(r.bound) - r.count for r in rep.rows)

    def test_empty_range(self):
        rep = verify_counting_sweep(SQRT2_LINE, PSI_SQRT, 10, [], [UNIT_BALL])
        assert rep.rows == ()
        assert rep.t_onset is None
        assert rep.all_pass

    def test_fitted_constant_rows(self):
        fit = SumConstantFit(
            constant=4.0, omega=Fraction(21, 20), log_power=1, grid=(8, 16), ratios=(4.0, 3.0)
        )
        rep = verify_counting_sweep(
            SQRT2_LINE, PSI_SQRT, 10, range(2, 4), [UNIT_BALL], C_fitted=fit
        )
        assert rep.constant_scaled == pytest.approx(4.0 * 2.0 ** (1.05 - 1))
        for row in rep.rows:
            assert row.lemma3_count is not None
            assert row.lemma3_passed
            assert row.lemma3_count <= row.lemma3_bound_value
        lines = rep.row_lines()
        assert all("lemma3" in line for line in lines)

    def test_dominance_failure_is_recorded_not_raised(self):
        # a ball thinner than the applicability condition q >= 1/(2 eta)
        # allows, plus a vanishing fitted constant: the per-q comparison
        # must come back as a recorded failure, not an exception
        psi = ApproxFunction.power(Fraction(1, 2), coef=2)
        thin = Ball(center=[Fraction(1, 2)], radius=Fraction(1, 50))
        fit = SumConstantFit(
            constant=1e-12, omega=Fraction(21, 20), log_power=1, grid=(8,), ratios=(1e-12,)
        )
        rep = verify_counting_sweep(
            SQRT2_LINE, psi, 10, range(2, 3), [thin], C_fitted=fit
        )
        (row,) = rep.rows
        assert row.lemma3_count == 1
        assert row.lemma3_passed is False
        # theorem-side verdict is independent of the fitted constant
        assert row.passed

    def test_deterministic(self):
        a = verify_counting_sweep(SHIFTED_LINE, PSI_SQRT, 4, range(2, 5), [UNIT_BALL])
        b = verify_counting_sweep(SHIFTED_LINE, PSI_SQRT, 4, range(2, 5), [UNIT_BALL])
        assert a == b
