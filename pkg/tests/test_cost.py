import math

import numpy as np
import pytest

from hbary import OriginClass, classify_origin, cosh_profile, counterexample_profile, custom_profile, power_profile
from hbary.cost import origin_second_derivative
from hbary.errors import AssumptionViolation, InvDerivOverflow


class TestPowerProfile:
    def test_quadratic(self):
        p = power_profile(2.0)
        assert p.h1(3.0) == pytest.approx(3.0)
        assert p.inv_deriv(3.0) == pytest.approx(3.0)
        assert p.origin_class is OriginClass.C2_AT_ZERO
        assert p.h2_at_zero == pytest.approx(1.0)

    def test_p15_inverse_is_square(self):
        p = power_profile(1.5)
        assert p.inv_deriv(0.3) == pytest.approx(0.09)
        assert p.origin_class is OriginClass.SINGULAR_AT_ZERO

    def test_p_leq_one_rejected(self):
        with pytest.raises(AssumptionViolation):
            power_profile(1.0)

    @pytest.mark.parametrize("p", [1.1, 1.5, 1.9, 2.0, 2.1, 2.5, 3.0, 4.0, 5.0])
    def test_classification_agrees_with_ladder(self, p):
        prof = power_profile(p)
        assert classify_origin(prof) is prof.origin_class

    def test_p3_extends_to_zero(self):
        prof = power_profile(3.0)
        assert prof.origin_class is OriginClass.C2_AT_ZERO
        assert origin_second_derivative(prof) == pytest.approx(0.0, abs=1e-6)


class TestCounterexampleProfile:
    def test_values(self):
        c = counterexample_profile()
        assert c.h(1.0) == pytest.approx(2.0)
        assert c.h1(0.5) == pytest.approx(2.0)
        assert c.origin_class is OriginClass.VIOLATES_H2
        assert not c.standard

    def test_inv_deriv_domain(self):
        c = counterexample_profile()
        with pytest.raises(InvDerivOverflow):
            c.inv_h1(0.5)


class TestCustomProfile:
    def test_cosh_accepted(self):
        prof = cosh_profile()
        assert prof.origin_class is OriginClass.C2_AT_ZERO
        # series: cosh''(0) = 1, confirmed by the limit ladder
        assert origin_second_derivative(prof) == pytest.approx(1.0, abs=1e-6)

    def test_linear_rejected_h3(self):
        with pytest.raises(AssumptionViolation) as err:
            custom_profile(lambda t: t, lambda t: 1.0, lambda t: 0.0)
        assert err.value.clause == "H3"

    def test_counterexample_rejected_h2(self):
        with pytest.raises(AssumptionViolation) as err:
            custom_profile(
                lambda t: t * t + t, lambda t: 2.0 * t + 1.0, lambda t: 2.0
            )
        assert err.value.clause == "H2"

    def test_inv_deriv_bisection_newton(self):
        prof = cosh_profile()
        for t in np.logspace(-5, 1.5, 40):
            s = prof.h1(t)
            assert prof.inv_deriv(s) == pytest.approx(t, rel=1e-9, abs=1e-12)


class TestDerivativeConsistency:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_h1_matches_central_difference(self, p):
        prof = power_profile(p)
        for t in np.logspace(-6, 3, 60):
            step = 1e-4 * t
            fd = (prof.h(t + step) - prof.h(t - step)) / (2.0 * step)
            assert fd == pytest.approx(prof.h1(t), rel=1e-5)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_h2_matches_central_difference_of_h1(self, p):
        prof = power_profile(p)
        for t in np.logspace(-6, 3, 60):
            step = 1e-4 * t
            fd = (prof.h1(t + step) - prof.h1(t - step)) / (2.0 * step)
            assert fd == pytest.approx(prof.h2(t), rel=1e-5)

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_inv_deriv_roundtrip(self, p):
        prof = power_profile(p)
        for t in np.logspace(-6, 3, 60):
            assert prof.inv_deriv(prof.h1(t)) == pytest.approx(t, rel=1e-10)


class TestCoercivity:
    def test_quadratic_example(self):
        p = power_profile(2.0)
        assert p.coercivity_bound(3.0) == pytest.approx(2.5)
        assert p.h(3.0) == pytest.approx(4.5)

    def test_equality_at_one(self):
        p = power_profile(1.5)
        assert p.coercivity_bound(1.0) == pytest.approx(p.h(1.0))
        assert p.h(1.0) == pytest.approx(2.0 / 3.0)

    def test_p4_example(self):
        p = power_profile(4.0)
        assert p.coercivity_bound(2.0) == pytest.approx(1.25)
        assert p.h(2.0) == pytest.approx(4.0)

    def test_t_below_one_rejected(self):
        with pytest.raises(AssumptionViolation):
            power_profile(2.0).coercivity_bound(0.5)

    @pytest.mark.parametrize("p", [1.2, 1.5, 2.0, 3.0])
    def test_bound_holds_randomly(self, p, rng):
        prof = power_profile(p)
        ts = 1.0 + rng.exponential(scale=5.0, size=1000)
        assert np.all(prof.h(ts) >= prof.coercivity_bound(1.0) + prof.h1(1.0) * (ts - 1.0) - 1e-12)


class TestHessianBlowup:
    def test_p15_log_log_slope(self):
        prof = power_profile(1.5)
        ts = np.array([10.0**-k for k in range(2, 7)])
        slope = np.polyfit(np.log(ts), np.log(prof.h2(ts)), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.05)
