"""Composite chain construction, image certification, and closeness checks."""

import math

import mpmath
import numpy as np
import pytest
from mpmath import mpf

from fhepoly.composite import (
    ApproxSpec,
    build_sign_composite,
    certify_closeness,
    image_interval,
    schedule_depth,
    standard_schedule,
    standard_sign_composite,
)
from fhepoly.poly import SymmetricDomain
from fhepoly.precision import workbits
from fhepoly.remez import remez_sign_odd


class TestSchedules:
    @pytest.mark.parametrize(
        "alpha,zeta,degrees,depth",
        [(7, 11, (7, 7), 7), (11, 15, (7, 7, 27), 12), (14, 17, (15, 27, 29), 15)],
    )
    def test_rows(self, alpha, zeta, degrees, depth):
        spec = standard_schedule(alpha)
        assert (spec.zeta, spec.degrees, spec.depth) == (zeta, degrees, depth)
        assert spec.epsilon == mpf(zeta) * mpf(2) ** -alpha

    def test_out_of_range_rejected(self):
        for alpha in (3, 15, 0):
            with pytest.raises(ValueError):
                standard_schedule(alpha)

    def test_depth_formula_consistency(self):
        for alpha in range(4, 15):
            spec = standard_schedule(alpha)
            assert spec.depth == schedule_depth(spec.degrees)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            ApproxSpec.from_degrees((4, 7))  # even stage degree
        with pytest.raises(ValueError):
            ApproxSpec(7, 11, (7, 7), depth=9)  # wrong depth
        with pytest.raises(ValueError):
            ApproxSpec.from_degrees((7,), alpha=7)  # zeta missing


class TestBuild:
    def test_single_stage_beta_matches_remez(self):
        eps = mpf("0.25")
        comp = build_sign_composite(eps, (7,))
        res = remez_sign_odd(SymmetricDomain(eps, mpf(1)), 7)
        beta_direct = -mpmath.log(res.minimax_error, 2)
        assert abs(comp.beta - beta_direct) < 1e-5

    def test_standard_alpha7_closeness(self):
        comp = standard_sign_composite(7)
        assert float(comp.beta) >= 6
        assert comp.stage_domains[0].a == standard_schedule(7).epsilon
        assert comp.stage_domains[0].b == 1

    def test_stage_domain_nesting(self):
        comp = standard_sign_composite(11)
        # later stages contract toward one: certified errors decrease
        errs = [float(e) for e in comp.stage_errors]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        # stage i+1 was fitted on an interval matching stage i's error
        for i in range(1, len(comp.stages)):
            dom = comp.stage_domains[i]
            assert float(dom.b - 1) >= errs[i - 1] * (1 - 1e-9)

    def test_determinism(self):
        a = build_sign_composite(mpf("0.1"), (7, 7))
        b = build_sign_composite(mpf("0.1"), (7, 7))
        for pa, pb in zip(a.stages, b.stages):
            assert pa.coeffs == pb.coeffs

    def test_odd_symmetry_of_chain(self):
        comp = standard_sign_composite(7)
        xs = np.linspace(-1, 1, 1001)
        np.testing.assert_array_equal(comp.eval(-xs), -comp.eval(xs))

    def test_range_bound_on_unit_interval(self):
        """The full chain stays within 1 + 2**-(alpha-1) on [-1, 1]."""
        for alpha in (7, 11):
            comp = standard_sign_composite(alpha)
            xs = np.linspace(-1, 1, 200_001)
            assert np.abs(comp.eval(xs)).max() <= 1 + 2.0 ** -(alpha - 1)

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            build_sign_composite(mpf("1.5"), (7,))
        with pytest.raises(ValueError):
            build_sign_composite(mpf("0.1"), ())
        with pytest.raises(ValueError):
            build_sign_composite(mpf("0.1"), (6,))


class TestImageInterval:
    def test_empty_prefix_returns_base(self):
        base = SymmetricDomain(mpf("0.1"), mpf(1))
        assert image_interval((), base) is base

    def test_single_stage_matches_minimax_error(self):
        eps = mpf("0.0859375")
        base = SymmetricDomain(eps, mpf(1))
        res = remez_sign_odd(base, 7)
        img = image_interval((res.poly,), base)
        half = img.b - 1
        assert abs(half - res.minimax_error) <= res.minimax_error * 1e-5
        with workbits(300):
            assert mpf(2) - img.b == img.a  # mirrored around one

    def test_certified_against_brute_force(self):
        """Padded grid certificate must dominate a 10^6-point scan."""
        eps = mpf("0.0859375")
        base = SymmetricDomain(eps, mpf(1))
        res = remez_sign_odd(base, 7)
        img = image_interval((res.poly,), base)
        xs = np.geomspace(float(eps), 1.0, 1_000_000)
        brute = np.abs(res.poly.eval(xs) - 1.0).max()
        half = float(img.b - 1)
        assert half >= brute * (1 - 1e-12)
        assert half <= brute * (1 + 1e-4) + 1e-30


class TestCloseness:
    def test_degree_one_exact_third(self):
        comp = build_sign_composite(mpf("0.5"), (1,))
        rep = certify_closeness(comp, 1.0, n_points=10_000)
        assert rep.passed
        assert rep.max_deviation == pytest.approx(1 / 3, rel=1e-12)
        assert rep.beta_achieved == pytest.approx(math.log2(3), abs=1e-9)

    def test_alpha7_meets_target(self):
        rep = certify_closeness(standard_sign_composite(7), 6, n_points=100_000)
        assert rep.passed

    def test_infinite_target_fails(self):
        rep = certify_closeness(standard_sign_composite(7), float("inf"), n_points=1000)
        assert not rep.passed


class TestDump:
    def test_format(self):
        comp = build_sign_composite(mpf("0.25"), (3, 3))
        text = comp.dump_coefficients()
        blocks = text.strip().split("\n\n")
        assert len(blocks) == 2
        for i, block in enumerate(blocks, start=1):
            lines = block.splitlines()
            assert lines[0] == f"stage {i} degree 3"
            assert len(lines) == 1 + 4  # ascending power coefficients
            values = [float(v) for v in lines[1:]]
            assert values[0] == 0.0 and values[2] == 0.0  # odd stage

    def test_dump_matches_direct_evaluation(self):
        comp = standard_sign_composite(7)
        text = comp.dump_coefficients()
        stage1 = text.strip().split("\n\n")[0].splitlines()[1:]
        with workbits(comp.precision):
            coeffs = [mpf(v) for v in stage1]
            for x in (mpf("0.3"), mpf("0.9")):
                direct = sum(c * x**k for k, c in enumerate(coeffs))
                assert abs(direct - comp.stages[0].eval_mp(x)) < mpf(2) ** -120
