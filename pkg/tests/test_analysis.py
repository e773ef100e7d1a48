import numpy as np
import pytest

from qubitbath import (
    detect_revival,
    detect_saturation,
    extrapolate,
    fit_exp_decay_shift,
    fit_reciprocal_exp,
    vanishing_crossing,
)


def decay_shift(n, a, b, c):
    return a * np.exp(-c * (np.asarray(n, dtype=float) - 3.0)) + b * b


def reciprocal(n, a, b, c):
    return 1.0 / (a * np.exp(-c * np.asarray(n, dtype=float)) + b * b)


class TestDetectSaturation:
    def test_constant_sequence(self):
        t = np.linspace(0.0, 40.0, 401)
        report = detect_saturation(t, np.full_like(t, 0.5))
        assert report.saturated
        assert report.value == pytest.approx(0.5)
        assert report.slope_bound == 0.0
        assert report.window == (30.0, 40.0)

    def test_linear_ramp_is_not_saturated(self):
        t = np.linspace(0.0, 40.0, 401)
        report = detect_saturation(t, 0.01 * t)
        assert not report.saturated
        assert report.slope_bound == pytest.approx(0.01)

    def test_decay_to_plateau(self):
        t = np.linspace(0.0, 100.0, 2001)
        values = 0.3 + 0.7 * np.exp(-t / 3.0)
        report = detect_saturation(t, values, window=10.0, tol=1e-4)
        assert report.saturated
        assert report.value == pytest.approx(0.3, abs=1e-6)

    def test_time_shift_invariance(self):
        t = np.linspace(0.0, 60.0, 601)
        values = 0.2 + 0.5 * np.exp(-t / 2.0)
        base = detect_saturation(t, values)
        shifted = detect_saturation(t + 17.0, values)
        assert shifted.saturated == base.saturated
        assert shifted.value == pytest.approx(base.value)
        assert shifted.slope_bound == pytest.approx(base.slope_bound)

    def test_rejects_short_series(self):
        t = np.linspace(0.0, 15.0, 40)
        with pytest.raises(ValueError):
            detect_saturation(t, np.zeros_like(t), window=10.0)


class TestDetectRevival:
    def test_monotone_decay_has_no_events(self):
        t = np.linspace(0.0, 20.0, 500)
        report = detect_revival(t, np.exp(-t))
        assert report.events == ()

    def test_single_collapse_and_revival(self):
        t = np.linspace(0.0, 10.0, 1001)
        values = np.where(t < 3.0, 1.0 - t / 3.0, 0.0)
        values = np.where(t > 5.0, 0.2 * np.exp(-((t - 6.5) ** 2)), values)
        report = detect_revival(t, values, threshold=1e-3)
        assert len(report.events) == 1
        event = report.events[0]
        assert event.t_collapse < 3.1
        assert 5.0 < event.t_revival < 6.5 < event.t_revival + 2.0
        assert event.peak_value == pytest.approx(0.2, abs=1e-3)
        assert event.t_revival > event.t_collapse
        assert event.peak_value > report.threshold

    def test_two_events_with_peaks(self):
        # three bumps separated by dead zones; the first bump precedes any
        # collapse, so exactly two events are reported with the later peaks
        t = np.linspace(0.0, 30.0, 3001)
        amplitude = np.where(t < 8.0, 0.5, np.where(t < 18.0, 0.3, 0.1))
        values = np.maximum(0.0, np.sin(t * np.pi / 5.0)) * amplitude
        report = detect_revival(t, values, threshold=1e-2)
        assert len(report.events) == 2
        assert report.events[0].peak_value == pytest.approx(0.3, abs=1e-2)
        assert report.events[1].peak_value == pytest.approx(0.1, abs=1e-2)
        assert report.events[0].t_collapse == pytest.approx(5.0, abs=0.1)
        assert report.events[0].t_revival == pytest.approx(10.0, abs=0.1)

    def test_time_shift_invariance(self):
        t = np.linspace(0.0, 20.0, 800)
        values = np.abs(np.sin(t / 2.0)) * 0.3
        base = detect_revival(t, values)
        shifted = detect_revival(t + 5.0, values)
        assert len(base.events) == len(shifted.events)
        for ev_a, ev_b in zip(base.events, shifted.events):
            assert ev_b.t_revival - ev_a.t_revival == pytest.approx(5.0)

    def test_rejects_empty_series(self):
        with pytest.raises(ValueError):
            detect_revival([], [])


class TestFitExpDecayShift:
    def test_noiseless_round_trip(self):
        n = np.arange(3, 11)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.34, 0.0, 0.42))))
        assert fit.converged
        assert fit.a == pytest.approx(0.34, abs=1e-6)
        assert fit.b == pytest.approx(0.0, abs=1e-3)
        assert fit.c == pytest.approx(0.42, abs=1e-6)
        assert fit.residual < 1e-10

    def test_nonzero_offset_round_trip(self):
        n = np.arange(3, 12)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.233, 0.49, 0.156))))
        assert fit.converged
        assert fit.a == pytest.approx(0.233, abs=1e-6)
        assert fit.b == pytest.approx(0.49, abs=1e-6)
        assert fit.c == pytest.approx(0.156, abs=1e-6)

    def test_constant_data_degenerates_gracefully(self):
        n = np.arange(3, 10)
        fit = fit_exp_decay_shift([(int(k), 0.25) for k in n])
        assert fit.residual < 1e-8
        assert extrapolate(fit, 30) == pytest.approx(0.25, abs=1e-4)

    def test_residual_does_not_grow_when_adding_exact_point(self):
        n = np.arange(3, 10)
        points = list(zip(n, decay_shift(n, 0.34, 0.1, 0.42)))
        fit = fit_exp_decay_shift(points)
        extended = points + [(12, extrapolate(fit, 12))]
        refit = fit_exp_decay_shift(extended)
        assert refit.residual <= fit.residual + 1e-10

    def test_requires_four_distinct_points(self):
        with pytest.raises(ValueError):
            fit_exp_decay_shift([(3, 0.3), (4, 0.2), (5, 0.1)])
        with pytest.raises(ValueError):
            fit_exp_decay_shift([(3, 0.3), (3, 0.2), (4, 0.1), (5, 0.05)])


class TestFitReciprocalExp:
    def test_noiseless_round_trip(self):
        n = np.arange(3, 16, 2)
        fit = fit_reciprocal_exp(list(zip(n, reciprocal(n, 0.2832, 1.4195, 0.4546))))
        assert fit.converged
        assert fit.a == pytest.approx(0.2832, abs=1e-5)
        assert fit.b == pytest.approx(1.4195, abs=1e-6)
        assert fit.c == pytest.approx(0.4546, abs=1e-5)
        assert fit.residual < 1e-9

    def test_asymptote_identity(self):
        n = np.arange(3, 16, 2)
        fit = fit_reciprocal_exp(list(zip(n, reciprocal(n, 0.28, 1.42, 0.45))))
        assert fit.asymptote() == pytest.approx(1.0 / fit.b**2)
        assert extrapolate(fit, 500) == pytest.approx(fit.asymptote(), rel=1e-6)

    def test_rejects_nonpositive_values(self):
        with pytest.raises(ValueError):
            fit_reciprocal_exp([(3, 0.5), (5, 0.0), (7, 0.6), (9, 0.7)])


class TestExtrapolate:
    def test_decay_model_monotone_decreasing(self):
        n = np.arange(3, 11)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.34, 0.05, 0.42))))
        values = [extrapolate(fit, k) for k in range(3, 30)]
        assert all(x > y for x, y in zip(values, values[1:]))
        assert values[-1] > fit.b**2

    def test_reciprocal_model_increases_to_asymptote(self):
        n = np.arange(3, 14, 2)
        fit = fit_reciprocal_exp(list(zip(n, reciprocal(n, 0.28, 1.42, 0.45))))
        values = [extrapolate(fit, k) for k in range(3, 40)]
        assert all(x < y for x, y in zip(values, values[1:]))
        assert values[-1] < fit.asymptote()

    def test_anchor_point_value(self):
        n = np.arange(3, 11)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.3399, 7.0847e-5, 0.4167))))
        assert extrapolate(fit, 3) == pytest.approx(0.3399, abs=1e-6)


class TestVanishingCrossing:
    def test_known_crossing(self):
        n = np.arange(3, 11)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.3399, 7.0847e-5, 0.4167))))
        # a exp(-c (N-3)) dips below 1e-3 just before N = 17, so entanglement
        # is retained through N = 16
        assert vanishing_crossing(fit, threshold=1e-3) == 17

    def test_no_crossing_when_offset_dominates(self):
        n = np.arange(3, 11)
        fit = fit_exp_decay_shift(list(zip(n, decay_shift(n, 0.3, 0.5, 0.4))))
        assert vanishing_crossing(fit, threshold=1e-3) is None

    def test_wrong_model_rejected(self):
        n = np.arange(3, 14, 2)
        fit = fit_reciprocal_exp(list(zip(n, reciprocal(n, 0.28, 1.42, 0.45))))
        with pytest.raises(ValueError):
            vanishing_crossing(fit)
