import math

import numpy as np
import pytest

from qubitbath import (
    ConstantRate,
    DivisibilityClass,
    OhmicFiniteTempRate,
    OhmicZeroTempRate,
    SinusoidalRate,
    classify_divisibility,
    dephasing_factor,
    gamma_ohmic_finite_t,
    gamma_ohmic_t0,
    integrated_rate,
)
from qubitbath.rates import integrated_rate_quadrature, rate_model_from_dict


class TestOhmicZeroTempRate:
    def test_vanishes_at_time_zero(self):
        for s in (0.5, 1.0, 2.47, 3.0):
            assert gamma_ohmic_t0(0.0, s) == 0.0

    def test_s1_closed_form(self):
        # for s = 1, omega_c = 1 the rate reduces to t / (1 + t^2)
        t = np.linspace(0.0, 30.0, 301)
        assert np.abs(gamma_ohmic_t0(t, 1.0) - t / (1 + t**2)).max() < 1e-14

    def test_s3_negative_beyond_sqrt3(self):
        # sin(3 arctan t) first vanishes at t = tan(pi/3) = sqrt(3) and the
        # rate stays negative afterwards
        t = np.linspace(math.sqrt(3.0) + 1e-3, 50.0, 500)
        assert np.all(gamma_ohmic_t0(t, 3.0) < 0)
        t_before = np.linspace(1e-3, math.sqrt(3.0) - 1e-3, 200)
        assert np.all(gamma_ohmic_t0(t_before, 3.0) > 0)

    def test_nonnegative_for_s_up_to_two(self):
        t = np.linspace(0.0, 50.0, 2001)
        for s in (0.5, 1.0, 1.5, 2.0):
            assert gamma_ohmic_t0(t, s).min() >= -1e-15

    def test_some_negative_values_for_s_above_two(self):
        t = np.linspace(0.0, 50.0, 2001)
        for s in (2.1, 2.47, 3.0):
            assert gamma_ohmic_t0(t, s).min() < 0

    def test_cutoff_scaling(self):
        # gamma(t; omega_c) = omega_c * gamma(omega_c t; 1)
        t = 1.7
        wc = 2.5
        assert gamma_ohmic_t0(t, 2.47, wc) == pytest.approx(
            wc * gamma_ohmic_t0(wc * t, 2.47, 1.0)
        )

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValueError):
            gamma_ohmic_t0(1.0, 0.0)
        with pytest.raises(ValueError):
            OhmicZeroTempRate(s=2.0, omega_c=-1.0)


class TestFiniteTemperatureRate:
    def test_zero_time(self):
        for theta in (0.0, 0.5, 2.0):
            assert gamma_ohmic_finite_t(0.0, 2.47, theta=theta) == 0.0

    @pytest.mark.parametrize("s", [1.0, 2.47, 3.0])
    def test_zero_temperature_limit_matches_closed_form(self, s):
        for t in (0.1, 1.0, 3.0, 7.5, 15.0, 30.0):
            num = gamma_ohmic_finite_t(t, s, theta=0.0)
            assert num == pytest.approx(gamma_ohmic_t0(t, s), abs=1e-6)

    def test_s3_negative_value_matches(self):
        num = gamma_ohmic_finite_t(3.0, 3.0, theta=0.0)
        assert num < 0
        assert num == pytest.approx(gamma_ohmic_t0(3.0, 3.0), abs=1e-8)

    def test_thermal_enhancement(self):
        # coth > 1 for any positive temperature, so the early-time rate grows
        cold = gamma_ohmic_finite_t(0.5, 2.0, theta=0.0)
        warm = gamma_ohmic_finite_t(0.5, 2.0, theta=1.0)
        assert warm > cold > 0

    def test_sub_ohmic_with_temperature_is_finite(self):
        # s < 1 with theta > 0 has an omega^(s-1) endpoint, still integrable
        val = gamma_ohmic_finite_t(2.0, 0.5, theta=0.5)
        assert math.isfinite(val)

    def test_integrated_consistency_with_rate(self):
        model = OhmicFiniteTempRate(s=2.0, theta=0.5)
        direct = integrated_rate_quadrature(model, 2.0)
        assert model.integrated(2.0) == pytest.approx(direct, abs=5e-7)


class TestIntegratedRate:
    def test_ohmic_s1_log_form(self):
        model = OhmicZeroTempRate(s=1.0)
        for t in (0.0, 0.5, 2.0, 10.0, 100.0):
            assert integrated_rate(model, t) == pytest.approx(0.5 * math.log1p(t * t))

    def test_sinusoidal(self):
        model = SinusoidalRate(alpha=1.0)
        for t in (0.0, 1.0, math.pi, 7.0):
            assert integrated_rate(model, t) == pytest.approx(1.0 - math.cos(t))

    def test_constant(self):
        assert integrated_rate(ConstantRate(0.3), 4.0) == pytest.approx(1.2)

    @pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 2.47, 3.0])
    def test_closed_form_matches_quadrature(self, s):
        model = OhmicZeroTempRate(s=s)
        for t in (0.3, 1.0, 7.5, 30.0):
            assert integrated_rate(model, t) == pytest.approx(
                integrated_rate_quadrature(model, t), abs=1e-8
            )

    def test_additivity(self):
        from scipy.integrate import quad

        model = OhmicZeroTempRate(s=2.47)
        t1, t2 = 3.0, 11.0
        tail, _ = quad(lambda u: model.rate(u), t1, t2, epsabs=1e-12, epsrel=1e-10)
        assert integrated_rate(model, t2) == pytest.approx(
            integrated_rate(model, t1) + tail, abs=1e-9
        )

    def test_limit_finite_for_super_ohmic(self):
        model = OhmicZeroTempRate(s=2.47)
        assert model.integrated_infinity() == pytest.approx(math.gamma(1.47))
        assert model.integrated(5000.0) == pytest.approx(math.gamma(1.47), abs=1e-4)

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            integrated_rate(ConstantRate(1.0), -1.0)


class TestDephasingFactor:
    def test_zero_at_time_zero(self):
        assert dephasing_factor(OhmicZeroTempRate(s=2.0), 0.0) == 0.0

    def test_constant_half_at_one(self):
        assert dephasing_factor(ConstantRate(0.5), 1.0) == pytest.approx(1 - math.exp(-1))

    def test_saturates_below_one_for_s_above_two(self):
        model = OhmicZeroTempRate(s=2.47)
        eta_inf = 1 - math.exp(-2 * math.gamma(1.47))
        assert dephasing_factor(model, 200.0) == pytest.approx(eta_inf, abs=1e-4)
        assert dephasing_factor(model, 200.0) < 1.0

    def test_monotone_with_rate_sign(self):
        model = SinusoidalRate(alpha=1.0)
        up = np.linspace(0.1, 3.0, 30)  # rate > 0
        down = np.linspace(3.4, 6.0, 30)  # rate < 0
        eta_up = np.array([dephasing_factor(model, t) for t in up])
        eta_down = np.array([dephasing_factor(model, t) for t in down])
        assert np.all(np.diff(eta_up) > 0)
        assert np.all(np.diff(eta_down) < 0)


class TestClassifyDivisibility:
    GRID = np.linspace(0.0, 100.0, 10001)

    def test_all_positive_constants_are_cp(self):
        rate = ConstantRate(0.1)
        verdict = classify_divisibility(rate, rate, rate, self.GRID)
        assert verdict.classification is DivisibilityClass.CP_DIVISIBLE
        assert verdict.violation_windows == ()
        assert verdict.min_margin == pytest.approx(0.1)

    def test_weak_constants_with_sine_break_p(self):
        verdict = classify_divisibility(
            ConstantRate(0.1), ConstantRate(0.1), SinusoidalRate(1.0), self.GRID
        )
        assert verdict.classification is DivisibilityClass.NON_P_DIVISIBLE
        assert verdict.min_margin == pytest.approx(-0.9, abs=1e-3)
        first = verdict.violation_windows[0]
        # 0.1 + sin t < 0 on (pi + arcsin 0.1, 2 pi - arcsin 0.1)
        assert math.pi < first[0] < first[1] < 2 * math.pi
        assert first[0] == pytest.approx(math.pi + math.asin(0.1), abs=0.02)
        assert first[1] == pytest.approx(2 * math.pi - math.asin(0.1), abs=0.02)

    def test_strong_constants_with_sine_are_p_only(self):
        verdict = classify_divisibility(
            ConstantRate(1.5), ConstantRate(1.5), SinusoidalRate(1.0), self.GRID
        )
        assert verdict.classification is DivisibilityClass.P_DIVISIBLE_ONLY
        assert verdict.min_margin == pytest.approx(0.5, abs=1e-3)
        assert verdict.violation_windows  # the windows where gamma_z < 0

    def test_verdict_invariant_under_axis_permutation(self):
        rates = [ConstantRate(0.1), ConstantRate(0.2), SinusoidalRate(1.0)]
        baseline = classify_divisibility(*rates, self.GRID)
        for perm in ((1, 2, 0), (2, 0, 1), (0, 2, 1)):
            shuffled = classify_divisibility(*(rates[i] for i in perm), self.GRID)
            assert shuffled.classification is baseline.classification
            assert shuffled.min_margin == pytest.approx(baseline.min_margin)

    def test_rejects_degenerate_grids(self):
        rate = ConstantRate(0.1)
        with pytest.raises(ValueError):
            classify_divisibility(rate, rate, rate, [0.0])
        with pytest.raises(ValueError):
            classify_divisibility(rate, rate, rate, [0.0, 0.0, 1.0])


def test_rate_model_serialization_round_trip():
    models = [
        ConstantRate(0.1),
        SinusoidalRate(-0.7),
        OhmicZeroTempRate(s=2.47, omega_c=1.0),
        OhmicFiniteTempRate(s=1.0, omega_c=2.0, theta=0.3),
    ]
    for model in models:
        assert rate_model_from_dict(model.to_dict()) == model


def test_rate_model_rejects_unknown_kind():
    with pytest.raises(ValueError):
        rate_model_from_dict({"kind": "lorentzian", "width": 1.0})
