"""Operator-level error bounds, identities, and domain handling."""

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fhepoly.ops import (
    MaxApprox,
    MaxPoolApprox,
    ReluApprox,
    max_approx,
    maxpool_approx,
    relu_approx,
    verify_bound,
)
from fhepoly.composite import standard_sign_composite


class TestRelu:
    def test_zero_fixed_point(self):
        ra = relu_approx(7)
        assert ra.r(0.0) == 0.0

    def test_value_at_one(self):
        ra = relu_approx(7)
        assert abs(float(ra.r(1.0)) - 1.0) <= 2.0**-7

    def test_dense_sweep_alpha7(self):
        ra = relu_approx(7)
        xs = np.linspace(-1, 1, 100_001)
        err = np.abs(ra.r(xs) - np.maximum(xs, 0.0))
        assert err.max() <= 2.0**-7

    def test_odd_part_identity(self):
        """r(x) - r(-x) = x: the x*p(x) term is even."""
        ra = relu_approx(7)
        xs = np.linspace(-1, 1, 2001)
        np.testing.assert_allclose(ra.r(xs) - ra.r(-xs), xs, atol=1e-13)

    def test_scaled_matches_definition(self):
        ra = relu_approx(13, B=50.0)
        xs = np.linspace(-50, 50, 5001)
        unit = relu_approx(13)
        np.testing.assert_allclose(ra.r_tilde(xs), 50.0 * unit.r(xs / 50.0), rtol=0, atol=1e-11)
        assert float(ra.r_tilde(0.0)) == 0.0
        assert abs(float(ra.r_tilde(25.0)) - 25.0) <= 50.0 * 2.0**-13

    def test_domain_rejected_beyond_slack(self):
        ra = relu_approx(7)
        with pytest.raises(ValueError):
            ra.r(1.5)

    def test_slack_clamp_warns(self, caplog):
        ra = relu_approx(7)
        x = 1.0 + 2.0**-9
        with caplog.at_level(logging.WARNING, logger="fhepoly.ops"):
            val = ra.r(x)
        assert caplog.records
        assert abs(float(val) - 1.0) <= 2.0**-7

    def test_underprecise_composite_rejected(self):
        comp = standard_sign_composite(7)  # beta around 6.16
        with pytest.raises(ValueError):
            ReluApprox(comp, alpha=9)
        with pytest.raises(ValueError):
            ReluApprox(comp, alpha=7, B=0.5)


class TestMaxPair:
    def test_tie_is_exact(self):
        ma = max_approx(7)
        assert float(ma.m(0.3, 0.3)) == 0.3

    def test_example_bound(self):
        ma = max_approx(7)
        assert abs(float(ma.m(0.9, 0.1)) - 0.9) <= 2.0**-7

    @given(
        a=st.floats(0.0, 1.0, allow_nan=False),
        b=st.floats(0.0, 1.0, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_symmetry_exact(self, a, b):
        """Odd chain makes m(a, b) and m(b, a) bit-identical."""
        ma = max_approx(7)
        assert float(ma.m(a, b)) == float(ma.m(b, a))

    def test_bound_on_random_pairs(self):
        rep = verify_bound("max", alpha=7, n_samples=5000, seed=1)
        assert rep.passed


class TestMaxOfMany:
    def test_single_input_identity(self):
        ma = max_approx(7)
        assert float(ma.M([0.4])) == 0.4

    def test_all_equal_propagates(self):
        ma = max_approx(7)
        assert float(ma.M([0.5, 0.5, 0.5, 0.5])) == 0.5

    def test_odd_split_order(self):
        """n = 3 splits as (first 1, last 2), not (first 2, last 1)."""
        ma = max_approx(7)
        delta = ma.margin(3)
        rng = np.random.default_rng(5)
        xs = rng.uniform(delta, 1 - delta, 3)
        got = float(ma.M(list(xs)))
        expect = float(ma.m(xs[0], ma.m(xs[1], xs[2])))
        other = float(ma.m(ma.m(xs[0], xs[1]), xs[2]))
        assert got == expect
        assert got != other  # the two trees genuinely differ numerically

    def test_n9_bound(self):
        rep = verify_bound("maxpool", alpha=7, n=9, n_samples=2000, seed=2)
        assert rep.passed
        assert rep.bound == math.ceil(math.log2(9)) * 2.0**-7

    def test_n4_bound_is_two_ulp_not_four(self):
        rep = verify_bound("maxpool", alpha=7, n=4, n_samples=500, seed=3)
        assert rep.bound == 2 * 2.0**-7

    def test_range_stability_instrumented(self):
        ma = max_approx(7)
        rng = np.random.default_rng(11)
        delta = ma.margin(9)
        batch = rng.uniform(delta, 1 - delta, size=(500, 9))
        ma.M(list(batch.T), check_range_stability=True)

    def test_out_of_domain_rejected(self):
        ma = max_approx(7)
        with pytest.raises(ValueError):
            ma.M([0.5, 1.4])


class TestScaledPool:
    def test_b_prime_formula(self):
        op = maxpool_approx(10, n=4, B=100.0)
        assert op.B_prime == pytest.approx(100.0 / (0.5 - 2.0**-10), rel=1e-15)

    def test_single_input_exact(self):
        op = maxpool_approx(10, n=1, B=100.0)
        assert float(op.m_tilde([np.array([3.5])])[0]) == 3.5

    def test_all_equal_near_exact(self):
        op = maxpool_approx(10, n=4, B=100.0)
        out = op.m_tilde([np.full(8, -17.125)] * 4)
        np.testing.assert_allclose(out, -17.125, rtol=0, atol=1e-12)

    def test_bound_random(self):
        rep = verify_bound("maxpool_scaled", alpha=10, n=4, B=100.0, n_samples=4000, seed=4)
        assert rep.passed
        bp = 100.0 / (0.5 - 2.0**-10)
        assert rep.bound == pytest.approx(bp * 2.0**-10 * 2, rel=1e-15)

    def test_wrong_arity_rejected(self):
        op = maxpool_approx(10, n=4, B=100.0)
        with pytest.raises(ValueError):
            op.m_tilde([np.zeros(3)] * 3)

    def test_beyond_range_rejected(self):
        op = maxpool_approx(10, n=2, B=10.0)
        with pytest.raises(ValueError):
            op.m_tilde([np.array([11.5]), np.array([0.0])])


class TestVerifyBound:
    def test_relu_alpha_sweep_small(self):
        for alpha in (7, 10):
            rep = verify_bound("relu", alpha=alpha, n_points=50_000)
            assert rep.passed, rep

    def test_scaled_relu(self):
        rep = verify_bound("relu_scaled", alpha=13, B=50.0, n_points=50_000)
        assert rep.passed
        assert rep.bound == 50.0 * 2.0**-13

    def test_unknown_tag(self):
        with pytest.raises(ValueError):
            verify_bound("sigmoid", alpha=7)

    def test_maxpool_needs_n(self):
        with pytest.raises(ValueError):
            verify_bound("maxpool", alpha=7)
