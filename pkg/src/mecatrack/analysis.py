"""Convergence certificates, robustness bounds, and run metrics.

Everything here is a pure function of gains or of a recorded run; nothing
depends on simulator internals, so every summary value can be recomputed
from a persisted timeseries alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .controller import ControllerGains


@dataclass(frozen=True)
class FiniteTimeCertificate:
    """Guaranteed convergence-time bound of the closed loop.

    For exponent alpha in (1/2, 1): beta = (1 + alpha)/2 and the total error
    settles no later than bound = V0**(1-beta) / (c (1-beta)) with
    c = min(lam_min(K_eta), lam_min(K_z)) * 2**beta.  At alpha = 1 the bound
    degenerates (division by zero): the law is only asymptotic and `bound`
    is None.
    """

    alpha: float
    beta: float
    c1: float
    c2: float
    c: float
    v0: float
    bound: float | None
    pose_bound: float | None = None

    @property
    def finite(self) -> bool:
        return self.bound is not None

    def describe(self) -> str:
        if self.bound is None:
            return "asymptotic: no finite bound"
        return f"{self.bound:.4f} s"


def finite_time_bound(v0: float, gains: ControllerGains,
                      v1_0: float | None = None) -> FiniteTimeCertificate:
    """Evaluate the convergence-time certificate for initial energy v0.

    v1_0, if given, is the pose subsystem's share of the initial energy and
    yields the pose-only bound via c1 alone.
    """
    if v0 < 0.0:
        raise ValueError(f"initial Lyapunov value must be >= 0, got {v0!r}")
    alpha = gains.alpha
    beta = 0.5 * (1.0 + alpha)
    c1 = gains.lam_min_eta * 2.0 ** beta
    c2 = gains.lam_min_z * 2.0 ** beta
    c = min(c1, c2)
    if alpha >= 1.0:
        return FiniteTimeCertificate(alpha, beta, c1, c2, c, v0, None, None)
    bound = v0 ** (1.0 - beta) / (c * (1.0 - beta))
    pose = None
    if v1_0 is not None:
        if v1_0 < 0.0:
            raise ValueError(f"pose Lyapunov value must be >= 0, got {v1_0!r}")
        pose = v1_0 ** (1.0 - beta) / (c1 * (1.0 - beta))
    return FiniteTimeCertificate(alpha, beta, c1, c2, c, v0, bound, pose)


@dataclass(frozen=True)
class RobustnessBound:
    """Largest constant-disturbance norm tolerated for convergence to the
    neighborhood {||eta_err|| <= delta_eta, ||z2|| <= delta_z}."""

    delta_eta: float
    delta_z: float
    alpha: float
    bound: float


def disturbance_bound(delta_eta: float, delta_z: float,
                      gains: ControllerGains) -> RobustnessBound:
    """bound = (lam_m(K_eta) d_eta^(1+a) + lam_m(K_z) d_z^(1+a)) / d_z."""
    if delta_eta <= 0.0 or delta_z <= 0.0:
        raise ValueError("neighborhood radii must be > 0, got "
                         f"({delta_eta!r}, {delta_z!r})")
    a = gains.alpha
    num = gains.lam_min_eta * delta_eta ** (1.0 + a) + gains.lam_min_z * delta_z ** (1.0 + a)
    return RobustnessBound(delta_eta, delta_z, a, num / delta_z)


@dataclass(frozen=True)
class SettlingReport:
    """Per-channel and aggregate settling times; None means never settled."""

    threshold: float
    per_channel: tuple
    aggregate: float | None


def settling_time(times, series, threshold: float) -> SettlingReport:
    """Last-crossing settling times of a uniformly sampled error series.

    A channel settles at the first time after which |e| stays at or below
    the threshold for every remaining sample; a transient dip that later
    re-exceeds the threshold does not count.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    if times.size == 0 or series.shape[0] == 0:
        raise ValueError("settling_time needs a non-empty series")
    if series.shape[0] != times.size:
        raise ValueError(f"series length {series.shape[0]} != times length {times.size}")
    per = []
    for i in range(series.shape[1]):
        above = np.abs(series[:, i]) > threshold
        if not above.any():
            per.append(0.0)
        elif above[-1]:
            per.append(None)
        else:
            per.append(float(times[int(np.max(np.nonzero(above)[0])) + 1]))
    agg = None if any(t is None for t in per) else max(per)
    return SettlingReport(float(threshold), tuple(per), agg)


def total_variation(series) -> np.ndarray:
    """Per-channel sum of absolute successive differences."""
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    if series.shape[0] < 2:
        raise ValueError("total_variation needs at least 2 samples")
    return np.abs(np.diff(series, axis=0)).sum(axis=0)


def lyapunov_series(log):
    """Per-sample (V1, V2, V) recomputed from the logged error pair."""
    e = np.asarray(log.eta_err, dtype=float)
    z = np.asarray(log.z2, dtype=float)
    v1 = 0.5 * np.einsum("ij,ij->i", e, e)
    v2 = 0.5 * np.einsum("ij,ij->i", z, z)
    return v1, v2, v1 + v2


@dataclass(frozen=True)
class LyapunovDecreaseReport:
    """Discrete-time checks of the closed-loop energy decay."""

    max_step_increase: float
    monotone_fraction: float
    decay_fraction: float

    def monotone_within(self, tol: float) -> bool:
        return self.max_step_increase <= tol


def lyapunov_decrease_report(log, gains: ControllerGains) -> LyapunovDecreaseReport:
    """Check V(t_{k+1}) <= V(t_k) and the decay rate dV/h <= -c V**beta + slack.

    The slack 5 h max(1, ||tau||) is an O(h) allowance for the first-order
    integrator; the continuous inequality carries no such term.
    """
    _, _, v = lyapunov_series(log)
    t = np.asarray(log.t, dtype=float)
    if v.size < 2:
        raise ValueError("need at least 2 samples")
    h = float(t[1] - t[0])
    dv = np.diff(v)
    beta = 0.5 * (1.0 + gains.alpha)
    c = min(gains.lam_min_eta, gains.lam_min_z) * 2.0 ** beta
    tau_norm = np.linalg.norm(np.asarray(log.tau, dtype=float), axis=1)[:-1]
    slack = 5.0 * h * np.maximum(1.0, tau_norm)
    decay_ok = dv / h <= -c * v[:-1] ** beta + slack
    return LyapunovDecreaseReport(
        max_step_increase=float(dv.max(initial=0.0)),
        monotone_fraction=float(np.mean(dv <= 1e-9)),
        decay_fraction=float(np.mean(decay_ok)),
    )
