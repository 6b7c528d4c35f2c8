"""Finite-time backstepping trajectory tracking for a mecanum platform."""

__version__ = "0.1.0"

from .analysis import (FiniteTimeCertificate, LyapunovDecreaseReport,
                       RobustnessBound, SettlingReport, disturbance_bound,
                       finite_time_bound, lyapunov_decrease_report,
                       lyapunov_series, settling_time, total_variation)
from .controller import (ControllerGains, GainError, ReferenceSample,
                         TrackingState, control_torque, fractional_weight,
                         subadditive_power_holds, validate_gains,
                         virtual_control, virtual_control_derivative)
from .model import (BodyVelocity, ModelError, Pose, RobotParams, WheelState,
                    WheelTorques, body_torque_from_wheel, drag_map,
                    drag_map_literal, mass_matrix, rotation_matrix,
                    rotation_matrix_deriv, wheel_jacobian,
                    wheel_pseudo_inverse, wheel_torque_from_body)
from .sim import (ConstantDisturbance, HumpDisturbance, ScenarioSpec, SimLog,
                  SimulationError, reference, reference_for_step, run,
                  run_perturbed, step, sweep_alpha, sweep_gains)

__all__ = [name for name in dir() if not name.startswith("_")]
