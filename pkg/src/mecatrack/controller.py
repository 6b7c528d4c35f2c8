"""Finite-time backstepping tracking controller.

The pose loop commands a virtual body velocity whose fractional-power term
drives the pose error to zero in finite time for exponents in (1/2, 1); the
velocity loop shapes the body wrench around that command.  Exponent 1
recovers the plain asymptotic backstepping law as a special case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .model import ModelError, rotation_matrix, rotation_matrix_deriv

# Below this norm the fractional feedback terms are defined as zero: their
# limits vanish for exponents above 1/2, and the cutoff avoids 0/0 at the
# equilibrium the loop converges to.
SING_EPS = 1e-12


class GainError(ValueError):
    """Controller gain set violates symmetry, definiteness, or exponent range."""


def _check_spd(name: str, k: np.ndarray, problems: list):
    if k.shape != (3, 3):
        problems.append(f"{name} must be 3x3, got {k.shape}")
        return
    if not np.allclose(k, k.T, atol=1e-12):
        problems.append(f"{name} is not symmetric")
        return
    lam_min = float(np.linalg.eigvalsh(k)[0])
    if lam_min <= 0.0:
        problems.append(f"{name} is not positive definite (min eigenvalue {lam_min:g})")


@dataclass(frozen=True)
class ControllerGains:
    """Gain set (K_eta, K_z, alpha) plus optional discrete-guard caps.

    k_eta, k_z     symmetric positive definite 3x3 pose / velocity gains
    alpha          fractional exponent in (1/2, 1]; 1 is the asymptotic law
    cap_eta, cap_z saturation levels for the fractional multipliers
                   ||e||^(alpha-1); infinity leaves the law unmodified.
                   The simulator sets finite caps from the step size so the
                   discretized loop stays non-expansive near the origin.
    """

    k_eta: np.ndarray
    k_z: np.ndarray
    alpha: float
    cap_eta: float = math.inf
    cap_z: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "k_eta", np.asarray(self.k_eta, dtype=float))
        object.__setattr__(self, "k_z", np.asarray(self.k_z, dtype=float))
        validate_gains(self)

    @classmethod
    def diagonal(cls, k_eta, k_z, alpha, **kw) -> "ControllerGains":
        """Build from diagonal triples."""
        return cls(np.diag(np.asarray(k_eta, dtype=float)),
                   np.diag(np.asarray(k_z, dtype=float)), float(alpha), **kw)

    @property
    def lam_min_eta(self) -> float:
        return float(np.linalg.eigvalsh(self.k_eta)[0])

    @property
    def lam_min_z(self) -> float:
        return float(np.linalg.eigvalsh(self.k_z)[0])

    def with_alpha(self, alpha: float) -> "ControllerGains":
        return replace(self, alpha=float(alpha))

    def with_discrete_guard(self, h: float) -> "ControllerGains":
        """Cap the fractional multipliers at 1/(2 h lambda_max).

        Keeps every per-step feedback factor h*K*mu at or below one half, the
        level at which the explicit discretization of the fractional term
        stops overshooting.  The cap only reshapes the law inside a ball of
        radius (2 h lambda_max)**(1/(1-alpha)) and vanishes as h -> 0.
        """
        if h <= 0.0:
            raise GainError(f"step size must be > 0, got {h!r}")
        cap_e = 1.0 / (2.0 * h * float(np.linalg.eigvalsh(self.k_eta)[-1]))
        cap_z = 1.0 / (2.0 * h * float(np.linalg.eigvalsh(self.k_z)[-1]))
        return replace(self, cap_eta=cap_e, cap_z=cap_z)


def validate_gains(gains: ControllerGains):
    """Raise GainError listing every violated gain condition."""
    problems: list[str] = []
    _check_spd("k_eta", np.asarray(gains.k_eta, dtype=float), problems)
    _check_spd("k_z", np.asarray(gains.k_z, dtype=float), problems)
    if not (0.5 < gains.alpha <= 1.0):
        problems.append(f"alpha must lie in (1/2, 1], got {gains.alpha!r}")
    if not (gains.cap_eta > 0.0 and gains.cap_z > 0.0):
        problems.append("fractional caps must be positive")
    if problems:
        raise GainError("; ".join(problems))


@dataclass(frozen=True)
class ReferenceSample:
    """Desired pose and its first two inertial-frame derivatives at time t."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("position", "velocity", "acceleration"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @classmethod
    def stationary(cls, position=(0.0, 0.0, 0.0), t=0.0) -> "ReferenceSample":
        return cls(np.asarray(position, dtype=float), np.zeros(3), np.zeros(3), t)


@dataclass(frozen=True)
class TrackingState:
    """Error pair the closed loop drives to zero.

    eta_err   pose error in the inertial frame
    z2        body-frame velocity error relative to the virtual control
    """

    eta_err: np.ndarray
    z2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eta_err", np.asarray(self.eta_err, dtype=float))
        object.__setattr__(self, "z2", np.asarray(self.z2, dtype=float))


def fractional_weight(norm: float, alpha: float, cap: float = math.inf):
    """Multiplier form of the fractional term: ||e||^(alpha-1), saturated.

    Returns (weight, slope) where weight multiplies the error vector and
    slope is the derivative of the saturation in the raw multiplier (1 on
    the exact branch).  The saturation is C1: exact up to cap/2, then
    cap - cap^2/(4 s), approaching cap from below.
    """
    if alpha == 1.0:
        return 1.0, 1.0
    if norm < SING_EPS:
        return 0.0, 0.0
    s = norm ** (alpha - 1.0)
    if s <= 0.5 * cap:
        return s, 1.0
    return cap - cap * cap / (4.0 * s), cap * cap / (4.0 * s * s)


def _require_finite(label: str, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ModelError(f"non-finite {label}: {a!r}")


def virtual_control(eta_err, theta: float, ref: ReferenceSample,
                    gains: ControllerGains) -> np.ndarray:
    """Virtual body-velocity command of the pose loop.

    psi = Q(theta) @ (eta_d_dot - K_eta @ eta_err * ||eta_err||**(alpha-1));
    the fractional term is zero at the origin.
    """
    eta_err = np.asarray(eta_err, dtype=float)
    _require_finite("pose error", eta_err)
    w, _ = fractional_weight(float(np.linalg.norm(eta_err)), gains.alpha, gains.cap_eta)
    return rotation_matrix(theta) @ (ref.velocity - gains.k_eta @ (eta_err * w))


def virtual_control_derivative(eta_err, eta_err_dot, theta: float, theta_dot: float,
                               ref: ReferenceSample, gains: ControllerGains) -> np.ndarray:
    """Analytic time derivative of the virtual control.

    The caller supplies eta_err_dot = Q(theta).T @ nu - eta_d_dot, which is
    exact given measured body velocity and avoids differentiation noise.
    """
    eta_err = np.asarray(eta_err, dtype=float)
    eta_err_dot = np.asarray(eta_err_dot, dtype=float)
    _require_finite("pose error", eta_err)
    _require_finite("pose error rate", eta_err_dot)
    n = float(np.linalg.norm(eta_err))
    w, slope = fractional_weight(n, gains.alpha, gains.cap_eta)
    q = rotation_matrix(theta)
    qdot = rotation_matrix_deriv(theta) * theta_dot
    out = qdot @ (ref.velocity - gains.k_eta @ (eta_err * w))
    out += q @ (ref.acceleration - gains.k_eta @ (eta_err_dot * w))
    if gains.alpha < 1.0 and n >= SING_EPS:
        # chain-rule term of the weight; `slope` carries the saturation branch
        coeff = float(eta_err @ eta_err_dot) * (gains.alpha - 1.0) * n ** (gains.alpha - 3.0) * slope
        out -= q @ (gains.k_eta @ (eta_err * coeff))
    return out


def control_torque(state: TrackingState, theta: float, theta_dot: float,
                   ref: ReferenceSample, gains: ControllerGains,
                   drag: np.ndarray) -> np.ndarray:
    """Body-frame feedback wrench of the full backstepping law.

    tau = -Q.T @ eta_err - drag @ (z2 + psi) + psi_dot
          - K_z @ z2 * ||z2||**(alpha-1)
    with both fractional terms zero at their respective origins.
    """
    _require_finite("tracking state", state.eta_err, state.z2)
    q = rotation_matrix(theta)
    psi = virtual_control(state.eta_err, theta, ref, gains)
    nu = state.z2 + psi
    eta_err_dot = q.T @ nu - ref.velocity
    psi_dot = virtual_control_derivative(state.eta_err, eta_err_dot, theta,
                                         theta_dot, ref, gains)
    wz, _ = fractional_weight(float(np.linalg.norm(state.z2)), gains.alpha, gains.cap_z)
    tau = -q.T @ state.eta_err - np.asarray(drag) @ nu + psi_dot
    tau -= gains.k_z @ (state.z2 * wz)
    if not np.all(np.isfinite(tau)):
        raise ModelError("controller produced a non-finite wrench")
    return tau


def subadditive_power_holds(a1: float, a2: float, c: float) -> bool:
    """(a1 + a2)**c <= a1**c + a2**c for positive a1, a2 and c in (0, 1).

    Standalone predicate: the closed-loop convergence-time bound leans on
    this concavity property, so it is asserted directly in the test suite.
    """
    if a1 <= 0.0 or a2 <= 0.0 or not (0.0 < c < 1.0):
        raise ValueError("requires a1, a2 > 0 and c in (0, 1)")
    return (a1 + a2) ** c <= a1 ** c + a2 ** c + 1e-15 * max(a1 ** c, a2 ** c, 1.0)
