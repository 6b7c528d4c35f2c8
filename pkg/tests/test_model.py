from dataclasses import replace

import numpy as np
import pytest

from mecatrack.model import (ModelError, RobotParams, body_torque_from_wheel,
                             drag_map, drag_map_literal, mass_matrix,
                             rotation_matrix, rotation_matrix_deriv,
                             wheel_jacobian, wheel_pseudo_inverse,
                             wheel_torque_from_body)


@pytest.fixture
def params():
    return RobotParams(mass=10.0, yaw_inertia=0.5, wheel_inertia=0.01,
                       wheel_radius=0.1, half_length_1=0.25, half_length_2=0.25)


def random_params(rng):
    vals = rng.uniform(1e-3, 1e3, size=6)
    return RobotParams(mass=vals[0], yaw_inertia=vals[1], wheel_inertia=vals[2],
                       wheel_radius=vals[3], half_length_1=vals[4],
                       half_length_2=vals[5],
                       wheel_drag=tuple(rng.uniform(0.0, 10.0, size=4)))


class TestRotation:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(rotation_matrix(0.0), np.eye(3))

    def test_quarter_turn(self):
        expected = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(rotation_matrix(np.pi / 2), expected, atol=1e-15)

    def test_orthonormal_and_proper(self):
        rng = np.random.default_rng(7)
        for theta in rng.uniform(-20.0, 20.0, size=200):
            q = rotation_matrix(theta)
            np.testing.assert_allclose(q @ q.T, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(q) - 1.0) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ModelError):
            rotation_matrix(np.nan)
        with pytest.raises(ModelError):
            rotation_matrix_deriv(np.inf)

    def test_deriv_matches_finite_difference(self):
        rng = np.random.default_rng(3)
        d = 1e-7
        for theta in rng.uniform(-5.0, 5.0, size=50):
            fd = (rotation_matrix(theta + d) - rotation_matrix(theta - d)) / (2 * d)
            np.testing.assert_allclose(rotation_matrix_deriv(theta), fd, atol=1e-7)


class TestWheelMaps:
    def test_equal_rates_pure_sway(self, params):
        # all wheels forward: pure body-y translation at r*rate
        body = wheel_jacobian(params) @ np.ones(4)
        np.testing.assert_allclose(body, [0.0, 0.1, 0.0], atol=1e-15)

    def test_alternating_rates_pure_surge(self, params):
        body = wheel_jacobian(params) @ np.array([-1.0, 1.0, -1.0, 1.0])
        np.testing.assert_allclose(body, [0.1, 0.0, 0.0], atol=1e-15)

    def test_spin_pattern_pure_yaw(self, params):
        body = wheel_jacobian(params) @ np.array([1.0, -1.0, -1.0, 1.0])
        np.testing.assert_allclose(body, [0.0, 0.0, 0.2], atol=1e-15)

    def test_right_inverse_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            p = random_params(rng)
            prod = wheel_jacobian(p) @ wheel_pseudo_inverse(p)
            np.testing.assert_allclose(prod, np.eye(3), atol=1e-12)

    def test_unit_parameter_entries(self):
        p = RobotParams(mass=1.0, yaw_inertia=1.0, wheel_inertia=1.0,
                        wheel_radius=1.0, half_length_1=0.5, half_length_2=0.5)
        jd = wheel_pseudo_inverse(p)
        assert set(np.unique(np.abs(jd))) == {1.0}

    def test_sway_command_wheel_rates(self, params):
        rates = wheel_pseudo_inverse(params) @ np.array([0.0, 1.0, 0.0])
        np.testing.assert_allclose(rates, [10.0, 10.0, 10.0, 10.0], atol=1e-12)


class TestMassMatrix:
    def test_hand_values(self, params):
        mm = mass_matrix(params)
        gamma = 0.00125 + 0.0125 + 0.01
        assert mm[0, 0] == pytest.approx(gamma, abs=1e-15)
        assert mm[0, 1] == pytest.approx(-0.00125, abs=1e-15)
        assert mm[0, 2] == pytest.approx(0.00125, abs=1e-15)
        assert mm[0, 3] == pytest.approx(0.01125, abs=1e-15)

    def test_symmetric_exactly(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            mm = mass_matrix(random_params(rng))
            np.testing.assert_array_equal(mm, mm.T)

    def test_positive_definite(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            mm = mass_matrix(random_params(rng))
            assert np.linalg.eigvalsh(mm)[0] > 0.0


class TestDragMap:
    def test_frictionless_zero(self, params):
        p = replace(params, wheel_drag=(0.0,) * 4)
        np.testing.assert_array_equal(drag_map(p), np.zeros((3, 3)))

    def test_uniform_drag_stable(self, params):
        f = drag_map(params)
        assert np.all(np.linalg.eigvals(f).real < 0.0)
        # diagonal dominance for equal wheels
        for i in range(3):
            assert abs(f[i, i]) > np.abs(f[i]).sum() - abs(f[i, i]) - 1e-12

    def test_matches_free_decay_step(self, params):
        # one explicit step of nu_dot = F nu reproduces F nu as the increment
        f = drag_map(params)
        nu = np.array([0.3, -0.2, 0.5])
        h = 1e-6
        nu_next = nu + h * (f @ nu)
        np.testing.assert_allclose((nu_next - nu) / h, f @ nu, rtol=1e-9)

    def test_literal_variant_appends_rotation(self, params):
        theta = 0.7
        np.testing.assert_allclose(drag_map_literal(params, theta),
                                   drag_map(params) @ rotation_matrix(theta),
                                   atol=1e-15)


class TestTorqueMaps:
    def test_zero_maps_to_zero(self, params):
        np.testing.assert_array_equal(wheel_torque_from_body(np.zeros(3), params),
                                      np.zeros(4))
        np.testing.assert_array_equal(body_torque_from_wheel(np.zeros(4), params),
                                      np.zeros(3))

    def test_round_trip(self):
        # plausible robot scales; the identity degrades with cond(M) at
        # pathological parameter ratios
        rng = np.random.default_rng(19)
        for _ in range(100):
            vals = rng.uniform(0.05, 20.0, size=6)
            p = RobotParams(mass=vals[0], yaw_inertia=vals[1], wheel_inertia=vals[2],
                            wheel_radius=vals[3], half_length_1=vals[4],
                            half_length_2=vals[5])
            wrench = rng.normal(size=3)
            back = body_torque_from_wheel(wheel_torque_from_body(wrench, p), p)
            np.testing.assert_allclose(back, wrench, atol=1e-12 * max(1.0, np.abs(wrench).max()))

    def test_basis_vectors_right_inverse(self, params):
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            back = body_torque_from_wheel(wheel_torque_from_body(e, params), params)
            np.testing.assert_allclose(back, e, atol=1e-12)

    def test_pure_sway_wrench_equal_torques(self, params):
        tau = wheel_torque_from_body(np.array([0.0, 1.0, 0.0]), params)
        np.testing.assert_allclose(tau, tau[0] * np.ones(4), atol=1e-15)

    def test_equal_wheel_torques_give_pure_sway(self, params):
        wrench = body_torque_from_wheel(np.ones(4), params)
        assert wrench[0] == pytest.approx(0.0, abs=1e-12)
        assert wrench[2] == pytest.approx(0.0, abs=1e-12)


class TestParamsValidation:
    def test_rejects_nonpositive(self):
        with pytest.raises(ModelError):
            RobotParams(mass=0.0, yaw_inertia=0.5, wheel_inertia=0.01,
                        wheel_radius=0.1, half_length_1=0.25, half_length_2=0.25)
        with pytest.raises(ModelError):
            RobotParams(mass=10.0, yaw_inertia=-1.0, wheel_inertia=0.01,
                        wheel_radius=0.1, half_length_1=0.25, half_length_2=0.25)

    def test_rejects_negative_drag(self):
        with pytest.raises(ModelError):
            RobotParams(mass=10.0, yaw_inertia=0.5, wheel_inertia=0.01,
                        wheel_radius=0.1, half_length_1=0.25, half_length_2=0.25,
                        wheel_drag=(-0.01, 0.01, 0.01, 0.01))

    def test_zero_drag_allowed(self):
        p = RobotParams(mass=10.0, yaw_inertia=0.5, wheel_inertia=0.01,
                        wheel_radius=0.1, half_length_1=0.25, half_length_2=0.25,
                        wheel_drag=(0.0, 0.0, 0.0, 0.0))
        assert p.track_sum == pytest.approx(0.5)


def test_rayleigh_ritz_quadratic_bounds():
    rng = np.random.default_rng(23)
    for _ in range(500):
        a = rng.normal(size=(3, 3))
        p = a @ a.T + 1e-6 * np.eye(3)
        x = rng.normal(size=3) * rng.choice([1e-3, 1.0, 1e3])
        lam = np.linalg.eigvalsh(p)
        quad = x @ p @ x
        nx2 = x @ x
        assert lam[0] * nx2 <= quad * (1 + 1e-10) + 1e-300
        assert quad <= lam[-1] * nx2 * (1 + 1e-10) + 1e-300
