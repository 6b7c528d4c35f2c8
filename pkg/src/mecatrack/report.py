"""Run persistence: delimited timeseries, JSON summaries, figure rendering.

The timeseries writer is the reproducibility surface: identical runs must
produce byte-identical files, so floats are rendered with repr-exact
precision and no timestamps or machine identifiers are emitted.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .analysis import (disturbance_bound, finite_time_bound,
                       lyapunov_decrease_report, settling_time,
                       total_variation)
from .config import RunConfig, config_to_dict
from .sim import SimLog

CSV_COLUMNS = (
    "t",
    "eta_x", "eta_y", "eta_yaw",
    "etad_x", "etad_y", "etad_yaw",
    "err_x", "err_y", "err_yaw",
    "nu_u", "nu_v", "nu_w",
    "z2_u", "z2_v", "z2_w",
    "tau_x", "tau_y", "tau_yaw",
    "taud_x", "taud_y", "taud_yaw",
    "V1", "V2", "V",
)

SETTLE_THRESHOLD = 1e-6
ROBUSTNESS_RADII = (0.1, 0.1)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_timeseries(log: SimLog, path) -> Path:
    path = Path(path)
    blocks = (log.t[:, None], log.eta, log.eta_d, log.eta_err, log.nu,
              log.z2, log.tau, log.tau_d, log.v1[:, None], log.v2[:, None],
              log.v[:, None])
    table = np.hstack(blocks)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in table:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def read_timeseries(path) -> SimLog:
    """Rebuild a SimLog from a persisted timeseries (psi is not persisted
    and comes back as zeros)."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    cols = {name: np.asarray(data[name], dtype=float) for name in data.dtype.names}
    stack = lambda names: np.column_stack([cols[n] for n in names])
    return SimLog(
        t=cols["t"],
        eta=stack(("eta_x", "eta_y", "eta_yaw")),
        eta_d=stack(("etad_x", "etad_y", "etad_yaw")),
        eta_err=stack(("err_x", "err_y", "err_yaw")),
        nu=stack(("nu_u", "nu_v", "nu_w")),
        z2=stack(("z2_u", "z2_v", "z2_w")),
        psi=np.zeros((cols["t"].size, 3)),
        tau=stack(("tau_x", "tau_y", "tau_yaw")),
        tau_d=stack(("taud_x", "taud_y", "taud_yaw")),
        v1=cols["V1"], v2=cols["V2"], v=cols["V"],
    )


def _maybe(value):
    return "not settled" if value is None else value


def build_summary(log: SimLog, cfg: RunConfig) -> dict:
    """Assemble the run summary; every entry is recomputable from the
    timeseries plus the echoed config."""
    gains = cfg.gains
    se = settling_time(log.t, log.eta_err, SETTLE_THRESHOLD)
    sz = settling_time(log.t, log.z2, SETTLE_THRESHOLD)
    tv = total_variation(log.tau)
    cert = finite_time_bound(float(log.v[0]), gains, v1_0=float(log.v1[0]))
    rb = disturbance_bound(*ROBUSTNESS_RADII, gains)
    decrease = lyapunov_decrease_report(log, gains)
    perturbed = bool(np.any(log.tau_d))

    overall = None
    if se.aggregate is not None and sz.aggregate is not None:
        overall = max(se.aggregate, sz.aggregate)
    settle_before_cert = None
    if not perturbed and cert.bound is not None:
        settle_before_cert = (overall is not None
                              and overall <= cert.bound + cfg.scenario.h)

    checks = {
        "record_count": int(len(log)),
        "record_count_ok": len(log) == cfg.scenario.steps + 1,
        "lyapunov_monotone_1e-9": (None if perturbed
                                   else bool(decrease.monotone_within(1e-9))),
        "max_lyapunov_step_increase": decrease.max_step_increase,
        "decay_inequality_fraction": decrease.decay_fraction,
        "settles_before_certificate": settle_before_cert,
    }
    return {
        "tool": {"name": "mecatrack", "version": __version__},
        "settling": {
            "threshold": SETTLE_THRESHOLD,
            "pose_per_channel": [_maybe(v) for v in se.per_channel],
            "pose": _maybe(se.aggregate),
            "velocity_per_channel": [_maybe(v) for v in sz.per_channel],
            "velocity": _maybe(sz.aggregate),
            "overall": _maybe(overall),
        },
        "total_variation": {
            "per_channel": [float(v) for v in tv],
            "total": float(tv.sum()),
        },
        "certificate": {
            "alpha": cert.alpha, "beta": cert.beta,
            "c1": cert.c1, "c2": cert.c2, "c": cert.c,
            "v0": cert.v0,
            "bound_s": "no finite bound" if cert.bound is None else cert.bound,
            "pose_bound_s": ("no finite bound" if cert.pose_bound is None
                             else cert.pose_bound),
        },
        "disturbance_tolerance": {
            "delta_eta": rb.delta_eta, "delta_z": rb.delta_z, "bound": rb.bound,
        },
        "checks": checks,
        "note": cfg.note,
        "config": config_to_dict(cfg),
    }


def write_summary(summary: dict, path) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def render_run_figures(log: SimLog, outdir, stem: str) -> list[Path]:
    """Render the standard run figures next to the delimited output."""
    outdir = Path(outdir)
    paths = []

    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for i, lbl in enumerate(("x", "y", "yaw")):
        axes[0].plot(log.t, log.eta_err[:, i], label=f"err {lbl}")
        axes[1].plot(log.t, log.z2[:, i], label=f"z2 {lbl}")
    axes[0].set_ylabel("pose error")
    axes[1].set_ylabel("velocity error")
    axes[1].set_xlabel("time (s)")
    for ax in axes:
        ax.legend(loc="best", fontsize=8)
        ax.grid(True, alpha=0.4)
    paths.append(_save(fig, outdir / f"{stem}_errors.png"))

    fig, ax = plt.subplots(figsize=(8, 4))
    for i, lbl in enumerate(("x", "y", "yaw")):
        ax.plot(log.t, log.tau[:, i], label=f"tau {lbl}")
    if np.any(log.tau_d):
        ax.plot(log.t, np.linalg.norm(log.tau_d, axis=1), "k--", lw=1,
                label="|tau_d|")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("body wrench (N, N m)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.4)
    paths.append(_save(fig, outdir / f"{stem}_torques.png"))

    fig, ax = plt.subplots(figsize=(8, 4))
    floor = 1e-18
    ax.semilogy(log.t, np.maximum(log.v1, floor), label="V1")
    ax.semilogy(log.t, np.maximum(log.v2, floor), label="V2")
    ax.semilogy(log.t, np.maximum(log.v, floor), label="V")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("Lyapunov value")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.4)
    paths.append(_save(fig, outdir / f"{stem}_lyapunov.png"))

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(log.eta_d[:, 0], log.eta_d[:, 1], "k--", lw=1, label="reference")
    ax.plot(log.eta[:, 0], log.eta[:, 1], lw=1.5, label="robot")
    ax.plot(log.eta[0, 0], log.eta[0, 1], "o", ms=6, label="start")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.axis("equal")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.4)
    paths.append(_save(fig, outdir / f"{stem}_path.png"))
    return paths


def render_alpha_sweep_figure(rows, outdir, stem: str) -> Path:
    alphas = [r.alpha for r in rows]
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    settle = [np.nan if r.settle_all is None else r.settle_all for r in rows]
    axes[0].plot(alphas, settle, "o-")
    axes[0].set_ylabel("settling time (s)")
    axes[1].plot(alphas, [r.tv_total for r in rows], "o-")
    axes[1].set_ylabel("total variation")
    axes[2].plot(alphas, [r.disturbance_margin_normalized for r in rows], "o-")
    axes[2].set_ylabel("normalized tolerated |tau_d|")
    axes[2].set_xlabel("exponent alpha")
    for ax in axes:
        ax.grid(True, alpha=0.4)
    return _save(fig, Path(outdir) / f"{stem}_alpha_sweep.png")


def render_gain_sweep_figure(rows, outdir, stem: str) -> Path:
    l1s = sorted({r.lambda1 for r in rows})
    l2s = sorted({r.lambda2 for r in rows})
    tgrid = np.full((len(l2s), len(l1s)), np.nan)
    vgrid = np.full_like(tgrid, np.nan)
    for r in rows:
        i, j = l2s.index(r.lambda2), l1s.index(r.lambda1)
        tgrid[i, j] = np.nan if r.settle_all is None else r.settle_all
        vgrid[i, j] = r.tv_total
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, grid, title in ((axes[0], tgrid, "settling time (s)"),
                            (axes[1], vgrid, "total variation")):
        im = ax.pcolormesh(l1s, l2s, grid, shading="nearest")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("lambda1 (pose gain)")
        ax.set_ylabel("lambda2 (velocity gain)")
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, Path(outdir) / f"{stem}_gain_sweep.png")


def render_compare_figure(table_rows, outdir, stem: str) -> Path:
    alphas = [row["alpha"] for row in table_rows]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for key, label in (("settle_pose", "pose"), ("settle_velocity", "velocity")):
        vals = [np.nan if isinstance(row[key], str) else row[key]
                for row in table_rows]
        axes[0].plot(alphas, vals, "o-", label=label)
    axes[0].set_xlabel("alpha")
    axes[0].set_ylabel("settling time (s)")
    axes[0].legend(fontsize=8)
    for i, lbl in enumerate(("x", "y", "yaw")):
        axes[1].plot(alphas, [row["tv"][i] for row in table_rows], "o-",
                     label=f"tau {lbl}")
    axes[1].set_xlabel("alpha")
    axes[1].set_ylabel("total variation")
    axes[1].legend(fontsize=8)
    for ax in axes:
        ax.grid(True, alpha=0.4)
    fig.tight_layout()
    return _save(fig, Path(outdir) / f"{stem}_compare.png")


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
