"""Rigid-body model of a four-wheeled mecanum platform.

Provides the physical parameter set, the inertial/body frame rotation, the
wheel-to-body velocity maps, the wheel-space mass matrix, and the reduced
body-frame drag map used by the closed-loop simulator.  All operations are
pure functions of their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Invalid model input (non-finite angle, bad parameter, singular matrix)."""


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the platform.

    mass            robot mass (kg)
    yaw_inertia     body inertia about the vertical axis (kg m^2)
    wheel_inertia   single wheel spin inertia (kg m^2)
    wheel_radius    wheel radius (m)
    half_length_1   longitudinal distance, center of mass to wheel axle (m)
    half_length_2   lateral distance, center of mass to wheel center (m)
    wheel_drag      viscous friction coefficient per wheel (N m s/rad)
    """

    mass: float
    yaw_inertia: float
    wheel_inertia: float
    wheel_radius: float
    half_length_1: float
    half_length_2: float
    wheel_drag: tuple[float, float, float, float] = (0.01, 0.01, 0.01, 0.01)

    def __post_init__(self):
        for name in ("mass", "yaw_inertia", "wheel_inertia", "wheel_radius",
                     "half_length_1", "half_length_2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ModelError(f"{name} must be finite and > 0, got {v!r}")
        if len(self.wheel_drag) != 4:
            raise ModelError("wheel_drag needs exactly 4 coefficients")
        for d in self.wheel_drag:
            if not (math.isfinite(d) and d >= 0.0):
                raise ModelError(f"wheel drag coefficients must be >= 0, got {d!r}")

    @property
    def track_sum(self) -> float:
        """l1 + l2, the geometric span entering the yaw rows."""
        return self.half_length_1 + self.half_length_2


@dataclass(frozen=True)
class Pose:
    """Planar pose in the inertial frame; yaw is stored unwrapped."""

    x: float
    y: float
    yaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.yaw])

    @staticmethod
    def from_array(a) -> "Pose":
        x, y, yaw = (float(v) for v in a)
        return Pose(x, y, yaw)

    def wrapped_yaw(self) -> float:
        """Yaw folded into [0, 2*pi), for presentation only."""
        return self.yaw % (2.0 * math.pi)


@dataclass(frozen=True)
class BodyVelocity:
    """Body-frame velocity: surge u, sway v, yaw rate omega."""

    u: float
    v: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.omega])

    @staticmethod
    def from_array(a) -> "BodyVelocity":
        u, v, w = (float(x) for x in a)
        return BodyVelocity(u, v, w)


@dataclass(frozen=True)
class WheelState:
    """Angular positions and rates of the four wheels (rad, rad/s)."""

    angles: np.ndarray = field(default_factory=lambda: np.zeros(4))
    rates: np.ndarray = field(default_factory=lambda: np.zeros(4))


@dataclass(frozen=True)
class WheelTorques:
    """Torques applied at the four wheels (N m)."""

    values: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def rotation_matrix(theta: float) -> np.ndarray:
    """Inertial-to-body rotation: body velocity = Q(theta) @ inertial velocity."""
    if not math.isfinite(theta):
        raise ModelError(f"yaw angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s, 0.0],
                     [-s, c, 0.0],
                     [0.0, 0.0, 1.0]])


def rotation_matrix_deriv(theta: float) -> np.ndarray:
    """dQ/dtheta; multiply by the yaw rate to get Qdot."""
    if not math.isfinite(theta):
        raise ModelError(f"yaw angle must be finite, got {theta!r}")
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[-s, c, 0.0],
                     [-c, -s, 0.0],
                     [0.0, 0.0, 0.0]])


def wheel_jacobian(params: RobotParams) -> np.ndarray:
    """3x4 map from wheel rates to body velocity."""
    r = params.wheel_radius
    k = 1.0 / params.track_sum
    return (r / 4.0) * np.array([[-1.0, 1.0, -1.0, 1.0],
                                 [1.0, 1.0, 1.0, 1.0],
                                 [k, -k, -k, k]])


def wheel_pseudo_inverse(params: RobotParams) -> np.ndarray:
    """4x3 right inverse of the wheel jacobian (J @ Jdag = I3).

    Carries the 1/r factor without which the right-inverse identity fails.
    """
    r = params.wheel_radius
    ell = params.track_sum
    return (1.0 / r) * np.array([[-1.0, 1.0, ell],
                                 [1.0, 1.0, -ell],
                                 [-1.0, 1.0, -ell],
                                 [1.0, 1.0, ell]])


def mass_matrix(params: RobotParams) -> np.ndarray:
    """Symmetric 4x4 wheel-space inertia matrix."""
    r2 = params.wheel_radius ** 2
    m1 = params.yaw_inertia * r2 / (16.0 * params.track_sum ** 2)
    m2 = params.mass * r2 / 8.0
    g = m1 + m2 + params.wheel_inertia
    d = m2 - m1
    return np.array([[g, -m1, m1, d],
                     [-m1, g, d, m1],
                     [m1, d, g, -m1],
                     [d, m1, -m1, g]])


def drag_matrix(params: RobotParams) -> np.ndarray:
    """diag(D1..D4), the wheel viscous friction matrix."""
    return np.diag(params.wheel_drag)


def drag_map(params: RobotParams) -> np.ndarray:
    """Constant body-frame drag map F = -J M^-1 D Jdag.

    The reduced velocity dynamics read nu_dot = F nu + tau_body.  A trailing
    rotation Q(theta) can be appended via :func:`drag_map_literal` for the
    pose-dependent variant.
    """
    mm = mass_matrix(params)
    try:
        minv_d_jdag = np.linalg.solve(mm, drag_matrix(params) @ wheel_pseudo_inverse(params))
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"mass matrix is singular: {exc}") from exc
    return -wheel_jacobian(params) @ minv_d_jdag


def drag_map_literal(params: RobotParams, theta: float) -> np.ndarray:
    """Pose-dependent drag variant F(theta) = F @ Q(theta)."""
    return drag_map(params) @ rotation_matrix(theta)


def wheel_torque_from_body(tau_body, params: RobotParams) -> np.ndarray:
    """Wheel torques realizing a body wrench: tau = M Jdag tau_body."""
    tau_body = np.asarray(tau_body, dtype=float)
    return mass_matrix(params) @ wheel_pseudo_inverse(params) @ tau_body


def body_torque_from_wheel(tau_wheel, params: RobotParams) -> np.ndarray:
    """Body wrench produced by wheel torques: tau_body = J M^-1 tau."""
    tau_wheel = np.asarray(tau_wheel, dtype=float)
    mm = mass_matrix(params)
    try:
        x = np.linalg.solve(mm, tau_wheel)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"mass matrix is singular: {exc}") from exc
    return wheel_jacobian(params) @ x
