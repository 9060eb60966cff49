"""Evaluation plans: exact mult counts, instrumentation, and the cost envelope."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mpf

from fhepoly.bsgs import composite_cost, eval_bsgs, mult_envelope, plan_bsgs
from fhepoly.composite import standard_schedule, standard_sign_composite
from fhepoly.poly import ODD, POWER, Poly, to_power_basis
from fhepoly.precision import workbits
from fhepoly.remez import remez_general
from fhepoly import reference

ODD_COUNTS = {3: 2, 5: 4, 7: 4, 13: 7, 15: 7, 27: 10, 29: 10}
GENERAL_COUNTS = {10: 5, 20: 8, 40: 12, 80: 18, 150: 25}


class TestPlans:
    def test_odd_counts(self):
        for d, count in ODD_COUNTS.items():
            assert plan_bsgs(d, ODD).nonscalar_mults == count

    def test_general_counts(self):
        for d, count in GENERAL_COUNTS.items():
            assert plan_bsgs(d).nonscalar_mults == count

    def test_depth_formula(self):
        for d in (1, 2, 3, 7, 13, 29, 150):
            assert plan_bsgs(d).depth == math.ceil(math.log2(d + 1))

    def test_trivial_degrees(self):
        assert plan_bsgs(0).nonscalar_mults == 0
        assert plan_bsgs(1).nonscalar_mults == 0
        assert plan_bsgs(1, ODD).nonscalar_mults == 0

    def test_odd_plan_rejects_even_degree(self):
        with pytest.raises(ValueError):
            plan_bsgs(8, ODD)

    @given(st.integers(min_value=2, max_value=500))
    @settings(max_examples=150, deadline=None)
    def test_envelope(self, d):
        """Every plan stays within the square-root cost envelope."""
        assert plan_bsgs(d).nonscalar_mults <= mult_envelope(d)
        if d % 2 == 1:
            assert plan_bsgs(d, ODD).nonscalar_mults <= mult_envelope(d)


class TestCompositeCost:
    def test_reference_rows(self):
        for alpha, row in reference.COST_ROWS.items():
            cost = composite_cost(row.composite_degrees)
            assert abs(cost.total_mults - row.composite_mults) <= row.mults_tolerance, alpha

    def test_depth_rows(self):
        for alpha in range(4, 15):
            spec = standard_schedule(alpha)
            assert composite_cost(spec).total_depth == spec.depth

    def test_accepts_spec_or_degrees(self):
        spec = standard_schedule(10)
        assert composite_cost(spec).total_mults == composite_cost(spec.degrees).total_mults == 16


class TestEvalBsgs:
    def test_constant_poly_zero_mults(self):
        p = Poly(POWER, (mpf(-1), mpf(1)), (mpf(3),))
        out = eval_bsgs(p, 0.7, plan_bsgs(0))
        assert out.value == 3 and out.nonscalar_mults == 0

    def test_cube_example(self):
        p = Poly(POWER, (mpf(-2), mpf(2)), (mpf(0), mpf(0), mpf(0), mpf(1)), parity=ODD)
        out = eval_bsgs(p, 2.0, plan_bsgs(3, ODD))
        assert out.value == 8 and out.nonscalar_mults == 2

    def test_plan_mismatch_rejected(self):
        p = Poly(POWER, (mpf(-1), mpf(1)), (mpf(1), mpf(1), mpf(1)))
        with pytest.raises(ValueError):
            eval_bsgs(p, 0.5, plan_bsgs(3))
        full_cubic = Poly(POWER, (mpf(-1), mpf(1)), (mpf(1), mpf(1), mpf(1), mpf(1)))
        with pytest.raises(ValueError):
            eval_bsgs(full_cubic, 0.5, plan_bsgs(3, ODD))

    def test_chebyshev_basis_rejected(self):
        from fhepoly.poly import CHEBYSHEV

        p = Poly(CHEBYSHEV, (mpf(-1), mpf(1)), (mpf(1), mpf(1)))
        with pytest.raises(ValueError):
            eval_bsgs(p, 0.5, plan_bsgs(1))

    def test_random_polys_match_direct(self):
        rng = np.random.default_rng(9)
        with workbits(340):
            for d in (2, 5, 9, 16, 27, 40, 77):
                coeffs = tuple(mpf(float(c)) for c in rng.uniform(-1, 1, d + 1))
                p = Poly(POWER, (mpf(-1), mpf(1)), coeffs)
                plan = plan_bsgs(d)
                for x in rng.uniform(-1, 1, 10):
                    out = eval_bsgs(p, float(x), plan)
                    direct = p.eval_mp(mpf(float(x)))
                    assert abs(out.value - direct) <= mpf(2) ** -220 * (1 + abs(direct))
                    assert out.nonscalar_mults == plan.nonscalar_mults

    def test_composite_stages_match_direct(self):
        """Planned evaluation of real sign stages agrees with Horner."""
        comp = standard_sign_composite(7)
        rng = np.random.default_rng(13)
        for stage in comp.stages:
            q = to_power_basis(stage, n_check=100)
            plan = plan_bsgs(q.degree, ODD)
            with workbits(comp.precision):
                for x in rng.uniform(-1, 1, 25):
                    out = eval_bsgs(q, float(x), plan)
                    direct = q.eval_mp(mpf(float(x)))
                    assert abs(out.value - direct) <= mpf(2) ** -40 * (1 + abs(direct))
