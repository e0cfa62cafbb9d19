"""Linear-forms solver, containment systems, and covering witnesses."""

import itertools
import random
from fractions import Fraction

import pytest

from dioplab.core import AffineSubspaceSpec, ApproxFunction
from dioplab.exactreal import ExactReal
from dioplab.lattice import (
    CoveringWitness,
    LinearFormsSystem,
    SearchExhausted,
    build_containment_system,
    covering_witness,
    middle_bound,
    solve_linear_forms,
)

SQRT2_LINE = AffineSubspaceSpec(
    d=2, n=1, tilt=[[ExactReal.sqrt(2)]], shift=[Fraction(0)]
)
PSI_SQRT = ApproxFunction.power(Fraction(1, 2))


def _det(m):
    k = len(m)
    if k == 1:
        return m[0][0]
    total = Fraction(0)
    for j in range(k):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * _det(minor)
        total += term if j % 2 == 0 else -term
    return total


def _oracle_valid(rows, bounds, x):
    k = len(rows)
    for i in range(k):
        val = abs(sum(e * xi for e, xi in zip(rows[i], x)))
        if (val >= bounds[i]) if i < k - 1 else (val > bounds[i]):
            return False
    return True


_rng = random.Random(4501)
_SYSTEMS = []
while len(_SYSTEMS) < 60:
    k = _rng.choice([1, 2, 2, 3])
    rows = tuple(
        tuple(Fraction(_rng.randrange(-3, 4)) for _ in range(k)) for _ in range(k)
    )
    det = _det([list(r) for r in rows])
    if det == 0:
        continue
    bounds = tuple([Fraction(1)] * (k - 1) + [abs(det)])
    _SYSTEMS.append((rows, bounds))


class TestLinearFormsSystem:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            LinearFormsSystem(rows=(), bounds=())
        with pytest.raises(ValueError):
            LinearFormsSystem(rows=((Fraction(1), Fraction(0)),), bounds=(1,))
        with pytest.raises(ValueError):
            LinearFormsSystem(rows=((Fraction(1),),), bounds=(1, 1))

    def test_minkowski_applicable_exact(self):
        ok = LinearFormsSystem(rows=((Fraction(2),),), bounds=(Fraction(2),))
        assert ok.minkowski_applicable()
        no = LinearFormsSystem(rows=((Fraction(3),),), bounds=(Fraction(1),))
        assert not no.minkowski_applicable()

    def test_minkowski_applicable_irrational(self):
        phi = ExactReal.golden()
        assert LinearFormsSystem(rows=((phi,),), bounds=(Fraction(2),)).minkowski_applicable()
        assert not LinearFormsSystem(rows=((phi,),), bounds=(Fraction(3, 2),)).minkowski_applicable()

    def test_check_candidate_strictness(self):
        # first form strict, last form non-strict
        sys2 = LinearFormsSystem(
            rows=((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))),
            bounds=(Fraction(1), Fraction(1)),
        )
        assert sys2.check_candidate((0, 1))
        assert not sys2.check_candidate((1, 0))  # |1| < 1 fails

    def test_det_interval_exact_point(self):
        sys2 = LinearFormsSystem(
            rows=((Fraction(2), Fraction(1)), (Fraction(1), Fraction(1))),
            bounds=(1, 1),
        )
        iv = sys2.det_interval(64)
        assert iv.lo == iv.hi == 1


class TestSolveLinearForms:
    def test_identity_three(self):
        sysI = LinearFormsSystem(
            rows=(
                (Fraction(1), 0, 0),
                (0, Fraction(1), 0),
                (0, 0, Fraction(1)),
            ),
            bounds=(1, 1, 1),
        )
        assert solve_linear_forms(sysI) == (0, 0, 1)

    def test_rational_diagonal(self):
        sysD = LinearFormsSystem(
            rows=((Fraction(2), 0), (0, Fraction(1, 2))), bounds=(1, 1)
        )
        assert solve_linear_forms(sysD) == (0, 1)

    def test_irrational_single_form(self):
        sysP = LinearFormsSystem(rows=((ExactReal.golden(),),), bounds=(Fraction(2),))
        assert solve_linear_forms(sysP) == (1,)

    def test_inapplicable_system_raises_value_error(self):
        bad = LinearFormsSystem(rows=((Fraction(3),),), bounds=(Fraction(1),))
        with pytest.raises(ValueError):
            solve_linear_forms(bad)

    def test_singular_system_raises_search_exhausted(self):
        sys0 = LinearFormsSystem(
            rows=((Fraction(1), Fraction(1)), (Fraction(1), Fraction(1))),
            bounds=(1, 1),
        )
        with pytest.raises(SearchExhausted):
            solve_linear_forms(sys0)

    def test_budget_exhaustion(self):
        sys2 = LinearFormsSystem(
            rows=((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))),
            bounds=(Fraction(1), Fraction(1)),
        )
        with pytest.raises(SearchExhausted):
            solve_linear_forms(sys2, budget=3)

    @pytest.mark.parametrize("rows,bounds", _SYSTEMS)
    def test_random_systems_sound_and_minimal(self, rows, bounds):
        system = LinearFormsSystem(rows=rows, bounds=bounds)
        assert system.minkowski_applicable()
        x = solve_linear_forms(system)
        assert any(x)
        assert system.check_candidate(x)
        assert _oracle_valid(rows, bounds, x)
        # nothing valid lives in any strictly smaller sup-norm shell
        r = max(abs(c) for c in x)
        k = len(rows)
        for y in itertools.product(range(-(r - 1), r), repeat=k):
            if any(y):
                assert not _oracle_valid(rows, bounds, y)


class TestMiddleBound:
    def test_exact_sixteen(self):
        got = middle_bound(16, PSI_SQRT, 2, 1)
        assert isinstance(got, ExactReal)
        assert got.compare(Fraction(1, 2)) == 0

    def test_exact_one(self):
        assert middle_bound(1, PSI_SQRT, 2, 1).compare(Fraction(2)) == 0

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            middle_bound(0, PSI_SQRT, 2, 1)

    def test_interval_path_brackets_exact(self):
        # d=3, n=2 forces the interval route; the value collapses to sqrt(2)/2
        iv = middle_bound(16, PSI_SQRT, 3, 2, bits=96)
        expected = 2.0**0.5 / 2.0
        assert float(iv.lo) <= expected <= float(iv.hi)
        assert float(iv.width) < 1e-20


class TestContainmentSystem:
    def test_structure_and_certificates(self):
        cs = build_containment_system([ExactReal.sqrt(2) / 2], 16, PSI_SQRT, SQRT2_LINE)
        assert cs.k == 3
        # variables (r, p, q): closeness row, ball row, height row
        assert cs.rows[0][0] == Fraction(-1)
        assert cs.rows[0][1].compare(ExactReal.sqrt(2)) == 0
        assert cs.rows[0][2].is_zero()
        assert cs.rows[1][:2] == (Fraction(0), Fraction(-1))
        assert cs.rows[2] == (Fraction(0), Fraction(0), Fraction(1))
        det = cs.det_interval(128)
        assert det.lo == det.hi == 1
        prod = ExactReal.rational(1)
        for b in cs.bounds:
            prod = prod * (b if isinstance(b, ExactReal) else ExactReal.rational(b))
        assert prod.compare(Fraction(1)) == 0
        assert cs.minkowski_applicable()

    def test_solution_is_good_rational_approximation(self):
        cs = build_containment_system([ExactReal.sqrt(2) / 2], 16, PSI_SQRT, SQRT2_LINE)
        sol = solve_linear_forms(cs)
        assert sol == (7, 5, 7)
        assert cs.check_candidate(sol)
        # unpack: 5/7 close to sqrt(2)/2 and 5*sqrt(2) close to the integer 7
        r, p, q = sol
        close = abs(ExactReal.sqrt(2) * p - ExactReal.rational(r))
        assert close.compare(Fraction(1, 8)) < 0
        err = abs(ExactReal.sqrt(2) / 2 * q - ExactReal.rational(p))
        assert err.compare(middle_bound(16, PSI_SQRT, 2, 1)) < 0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            build_containment_system([Fraction(1, 2)], 0, PSI_SQRT, SQRT2_LINE)
        with pytest.raises(ValueError):
            build_containment_system(
                [Fraction(1, 2), Fraction(1, 3)], 16, PSI_SQRT, SQRT2_LINE
            )


class TestCoveringWitness:
    def test_reference_witness(self):
        w = covering_witness([ExactReal.sqrt(2) / 2], 1000, PSI_SQRT, SQRT2_LINE)
        assert w.phat.q == 41
        assert w.phat.p == (29,)
        assert w.r == (41,)
        assert w.valid()
        assert not w.degenerate
        # the N-normalized radius is a strictly stronger ask at q < N
        assert not w.statement_radius_ok

    def test_reference_witness_inequalities_re_verified(self):
        w = covering_witness([ExactReal.sqrt(2) / 2], 1000, PSI_SQRT, SQRT2_LINE)
        q, (p,) = w.phat.q, w.phat.p
        close = abs(ExactReal.sqrt(2) * p - ExactReal.rational(w.r[0]))
        half_psi = PSI_SQRT.exact_value(1000) * Fraction(1, 2)
        assert close.compare(half_psi) < 0
        err = abs(ExactReal.sqrt(2) / 2 * q - ExactReal.rational(p))
        assert err.compare(middle_bound(1000, PSI_SQRT, 2, 1)) < 0
        assert q <= 1000

    def test_single_height(self):
        w = covering_witness([Fraction(1, 2)], 1, PSI_SQRT, SQRT2_LINE)
        assert (w.phat.q, w.phat.p, w.r) == (1, (1,), (1,))
        assert w.valid() and w.statement_radius_ok and not w.degenerate

    def test_degenerate_fallback_is_flagged(self):
        psi_small = ApproxFunction.power(Fraction(1, 2), coef=Fraction(1, 100))
        w = covering_witness([Fraction(1, 4)], 1, psi_small, SQRT2_LINE)
        assert w.phat.p == (0,)
        assert w.degenerate
        assert w.valid()

    def test_budget_exhaustion(self):
        with pytest.raises(SearchExhausted):
            covering_witness([ExactReal.sqrt(2) / 2], 1000, PSI_SQRT, SQRT2_LINE, budget=2)

    def test_rejects_wrong_arity(self):
        with pytest.raises(ValueError):
            covering_witness([Fraction(1, 2), Fraction(1, 3)], 10, PSI_SQRT, SQRT2_LINE)

    def test_validity_is_three_checks(self):
        w = CoveringWitness(
            phat=None, r=(), radius_ok=True, closeness_ok=True, height_ok=False,
            statement_radius_ok=False, degenerate=False,
        )
        assert not w.valid()
