import math

import numpy as np
import pytest

from mecatrack.analysis import (disturbance_bound, finite_time_bound,
                                lyapunov_series, settling_time,
                                total_variation)
from mecatrack.controller import ControllerGains

CASE1_V0 = 0.5 * (25.0 + 16.0 + (math.pi / 4) ** 2) + 0.5 * 1.5


def unit_gains(alpha):
    return ControllerGains(np.eye(3), np.eye(3), alpha)


class TestFiniteTimeBound:
    def test_stock_initial_conditions(self):
        cert = finite_time_bound(CASE1_V0, unit_gains(0.75))
        assert cert.beta == pytest.approx(0.875)
        assert cert.c == pytest.approx(2.0 ** 0.875, rel=1e-12)
        assert 6.398 <= cert.bound <= 6.408
        assert cert.bound == pytest.approx(6.4031, abs=2e-4)

    def test_zero_energy_zero_time(self):
        assert finite_time_bound(0.0, unit_gains(0.75)).bound == 0.0

    def test_hand_evaluated_point(self):
        g = ControllerGains(2.0 * np.eye(3), 2.0 * np.eye(3), 0.6)
        cert = finite_time_bound(1.0, g)
        assert cert.beta == pytest.approx(0.8)
        assert cert.c == pytest.approx(2.0 * 2.0 ** 0.8, rel=1e-12)
        assert cert.bound == pytest.approx(1.4359, abs=1e-4)

    def test_asymptotic_has_no_bound(self):
        cert = finite_time_bound(5.0, unit_gains(1.0))
        assert cert.bound is None
        assert not cert.finite
        assert cert.describe() == "asymptotic: no finite bound"

    def test_pose_subsystem_bound(self):
        cert = finite_time_bound(CASE1_V0, unit_gains(0.75), v1_0=20.808425)
        assert cert.pose_bound < cert.bound

    def test_decreases_with_gain(self):
        bounds = [finite_time_bound(CASE1_V0, ControllerGains(
            lam * np.eye(3), lam * np.eye(3), 0.75)).bound
            for lam in (0.5, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_uses_smaller_gain_floor(self):
        g = ControllerGains(np.diag([2.0, 2.0, 1.0]), np.diag([2.0, 2.0, 3.0]), 0.75)
        cert = finite_time_bound(CASE1_V0, g)
        assert cert.c1 == pytest.approx(2.0 ** 0.875)
        assert cert.c2 == pytest.approx(2.0 * 2.0 ** 0.875)
        assert cert.c == cert.c1
        assert 6.398 <= cert.bound <= 6.408

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            finite_time_bound(-1.0, unit_gains(0.75))


class TestDisturbanceBound:
    def test_hand_value(self):
        rb = disturbance_bound(0.1, 0.1, unit_gains(0.75))
        assert rb.bound == pytest.approx(2.0 * 0.1 ** 0.75, rel=1e-12)
        assert rb.bound == pytest.approx(0.35566, abs=1e-5)

    def test_asymptotic_value(self):
        rb = disturbance_bound(0.1, 0.1, unit_gains(1.0))
        assert rb.bound == pytest.approx(0.2, rel=1e-12)

    def test_fractional_tolerates_more_at_subunit_radii(self):
        # higher tolerated disturbance for smaller exponents
        bounds = [disturbance_bound(0.1, 0.1, unit_gains(a)).bound
                  for a in (0.6, 0.75, 0.9, 1.0)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_first_term_homogeneity(self):
        g = unit_gains(0.75)
        base = disturbance_bound(0.1, 0.1, g).bound
        scaled = disturbance_bound(0.2, 0.1, g).bound
        gain = (scaled - base) / (0.1 ** 1.75 / 0.1)
        assert gain == pytest.approx(2.0 ** 1.75 - 1.0, rel=1e-9)

    def test_rejects_nonpositive_radii(self):
        with pytest.raises(ValueError):
            disturbance_bound(0.0, 0.1, unit_gains(0.75))
        with pytest.raises(ValueError):
            disturbance_bound(0.1, -0.1, unit_gains(0.75))


def brute_force_settle(times, channel, threshold):
    """Reference oracle: scan every candidate index for permanence."""
    n = len(times)
    for k in range(n):
        if all(abs(channel[j]) <= threshold for j in range(k, n)):
            return 0.0 if k == 0 else times[k]
    return None


class TestSettlingTime:
    def test_constant_zero(self):
        rep = settling_time([0.0, 0.1, 0.2], np.zeros(3), 1e-6)
        assert rep.per_channel == (0.0,)
        assert rep.aggregate == 0.0

    def test_dip_and_reexceed_uses_last_crossing(self):
        t = np.arange(6) * 0.1
        e = np.array([1.0, 1e-9, 1.0, 1e-9, 1e-9, 1e-9])
        rep = settling_time(t, e, 1e-6)
        assert rep.per_channel[0] == pytest.approx(0.3)

    def test_never_below_threshold(self):
        rep = settling_time([0.0, 0.1], np.array([1.0, 1.0]), 1e-6)
        assert rep.per_channel == (None,)
        assert rep.aggregate is None

    def test_aggregate_is_worst_channel(self):
        t = np.arange(5) * 1.0
        series = np.zeros((5, 2))
        series[:2, 0] = 1.0
        series[:4, 1] = 1.0
        rep = settling_time(t, series, 1e-6)
        assert rep.per_channel == (2.0, 4.0)
        assert rep.aggregate == 4.0

    def test_against_brute_force_oracle(self):
        rng = np.random.default_rng(61)
        for _ in range(200):
            n = rng.integers(2, 40)
            t = np.arange(n) * 0.5
            e = rng.choice([0.0, 2.0], size=n, p=[0.7, 0.3])
            rep = settling_time(t, e, 1.0)
            assert rep.per_channel[0] == brute_force_settle(t, e, 1.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            settling_time([], np.zeros((0, 3)), 1e-6)


class TestTotalVariation:
    def test_constant_is_zero(self):
        np.testing.assert_array_equal(total_variation(np.ones((10, 3))), np.zeros(3))

    def test_hand_sum(self):
        assert total_variation(np.array([0.0, 1.0, 0.5]))[0] == pytest.approx(1.5)

    def test_against_pairwise_scan(self):
        rng = np.random.default_rng(67)
        series = rng.normal(size=(500, 3))
        expected = np.zeros(3)
        for k in range(1, 500):
            expected += np.abs(series[k] - series[k - 1])
        np.testing.assert_allclose(total_variation(series), expected, rtol=1e-12)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            total_variation(np.ones((1, 3)))


class TestLyapunovSeries:
    class _Log:
        def __init__(self, e, z):
            self.eta_err = e
            self.z2 = z

    def test_stock_initial_energy(self):
        e = np.array([[5.0, -4.0, math.pi / 4]])
        z = np.array([[1.0, 0.5, -0.5]])
        v1, v2, v = lyapunov_series(self._Log(e, z))
        assert v[0] == pytest.approx(21.5584, abs=1e-4)
        assert v1[0] + v2[0] == v[0]

    def test_zero_state(self):
        v1, v2, v = lyapunov_series(self._Log(np.zeros((3, 3)), np.zeros((3, 3))))
        assert np.all(v == 0.0)
