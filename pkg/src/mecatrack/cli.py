"""Command-line front end.

Subcommands: run, compare, sweep, validate.  Flag values override config
fields (precedence: flag > config > default); MECATRACK_OUTDIR overrides the
output directory between flag and config.  Exit codes: 0 ok, 2 config error,
3 gain validation error, 4 simulation abort.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import report, sim
from .analysis import settling_time, total_variation
from .config import (ConfigError, OutputOptions, RunConfig,
                     apply_scenario_preset, default_config, load_config)
from .controller import GainError
from .sim import SimulationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GAINS = 3
EXIT_SIM = 4


def _parse_grid(text: str) -> list[float]:
    """Accept 'a,b,c' lists or 'start:stop:step' ranges (stop inclusive)."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:step")
        start, stop, stepv = (float(p) for p in parts)
        if stepv <= 0 or stop < start:
            raise ConfigError(f"bad grid range {text!r}")
        n = int(round((stop - start) / stepv))
        return [round(start + i * stepv, 12) for i in range(n + 1)]
    return [float(p) for p in text.split(",") if p.strip()]


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if getattr(args, "scenario", None):
        cfg = apply_scenario_preset(cfg, args.scenario)
    if getattr(args, "alpha", None) is not None:
        cfg = replace(cfg, gains=cfg.gains.with_alpha(args.alpha))
    if getattr(args, "duration", None) is not None:
        cfg = replace(cfg, scenario=replace(cfg.scenario, duration=args.duration))
    outdir = getattr(args, "out_dir", None) or os.environ.get("MECATRACK_OUTDIR") \
        or cfg.output.directory
    figures = cfg.output.figures and not getattr(args, "no_figures", False)
    return replace(cfg, output=OutputOptions(directory=str(outdir), figures=figures))


def _stem(args, default: str) -> str:
    if getattr(args, "stem", None):
        return args.stem
    if getattr(args, "scenario", None):
        return args.scenario
    return default


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"config ok: scenario={cfg.scenario.kind} alpha={cfg.gains.alpha} "
          f"h={cfg.scenario.h} duration={cfg.scenario.duration}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _load(args)
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    log = sim.run(cfg.scenario, cfg.robot, cfg.gains, **cfg.integrator.run_kwargs())
    stem = _stem(args, "run")
    csv_path = report.write_timeseries(log, outdir / f"{stem}.csv")
    summary = report.build_summary(log, cfg)
    summary_path = report.write_summary(summary, outdir / f"{stem}.summary.json")
    written = [csv_path, summary_path]
    if cfg.output.figures:
        written += report.render_run_figures(log, outdir, stem)
    s = summary["settling"]
    print(f"settling: pose={s['pose']} velocity={s['velocity']} "
          f"(threshold {s['threshold']:g})")
    print(f"certificate: {summary['certificate']['bound_s']}")
    print(f"total variation: {summary['total_variation']['per_channel']}")
    if cfg.note:
        print(f"note: {cfg.note}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    alphas = _parse_grid(args.alphas)
    if not alphas:
        raise ConfigError("compare needs at least one alpha")
    seen, unique = set(), []
    for a in alphas:
        if a in seen:
            print(f"warning: duplicate alpha {a} ignored", file=sys.stderr)
            continue
        seen.add(a)
        unique.append(a)
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    for a in unique:
        gains = cfg.gains.with_alpha(a)
        log = sim.run(cfg.scenario, cfg.robot, gains, **cfg.integrator.run_kwargs())
        se = settling_time(log.t, log.eta_err, report.SETTLE_THRESHOLD)
        sz = settling_time(log.t, log.z2, report.SETTLE_THRESHOLD)
        tv = total_variation(log.tau)
        rows.append({
            "alpha": a,
            "settle_pose": "not settled" if se.aggregate is None else se.aggregate,
            "settle_velocity": "not settled" if sz.aggregate is None else sz.aggregate,
            "tv": [float(v) for v in tv],
        })
    stem = _stem(args, "compare")
    header = f"{'alpha':>6} {'settle_eta':>12} {'settle_z2':>12} " \
             f"{'TV_x':>10} {'TV_y':>10} {'TV_yaw':>10}"
    print(header)
    for r in rows:
        fmt = lambda v: f"{v:>12.4f}" if isinstance(v, float) else f"{v:>12}"
        print(f"{r['alpha']:>6.3f} {fmt(r['settle_pose'])} {fmt(r['settle_velocity'])} "
              f"{r['tv'][0]:>10.3f} {r['tv'][1]:>10.3f} {r['tv'][2]:>10.3f}")
    table_path = outdir / f"{stem}_compare.json"
    with open(table_path, "w", encoding="utf-8") as fh:
        json.dump({"rows": rows, "scenario": cfg.scenario.kind}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {table_path}")
    if cfg.output.figures:
        print(f"wrote {report.render_compare_figure(rows, outdir, stem)}")
    return EXIT_OK


def _trend_violations(values, increasing: bool) -> int:
    vals = [v for v in values if v is not None]
    bad = 0
    for a, b in zip(vals, vals[1:]):
        if increasing and b < a - 1e-12:
            bad += 1
        if not increasing and b > a + 1e-12:
            bad += 1
    return bad


def cmd_sweep(args) -> int:
    cfg = _load(args)
    outdir = Path(cfg.output.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = _stem(args, "sweep")
    kw = cfg.integrator.run_kwargs()
    if args.kind == "alpha":
        grid = _parse_grid(args.alphas)
        if not grid:
            raise ConfigError("alpha sweep needs a non-empty grid")
        rows = sim.sweep_alpha(cfg.scenario, cfg.robot, cfg.gains, grid, **kw)
        csv_path = outdir / f"{stem}_alpha_sweep.csv"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "settle_pose", "settle_velocity", "settle_all",
                        "tv_x", "tv_y", "tv_yaw", "tv_total",
                        "disturbance_margin", "disturbance_margin_normalized"])
            for r in rows:
                w.writerow([r.alpha, r.settle_pose, r.settle_vel, r.settle_all,
                            *r.tv, r.tv_total, r.disturbance_margin,
                            r.disturbance_margin_normalized])
        trends = {
            "tv_total_nondecreasing_violations":
                _trend_violations([r.tv_total for r in rows], increasing=True),
            "settling_nondecreasing_violations":
                _trend_violations([r.settle_all for r in rows], increasing=True),
            "margin_nonincreasing_violations":
                _trend_violations([r.disturbance_margin for r in rows],
                                  increasing=False),
        }
        print(f"alpha sweep: {len(rows)} rows; trends: {trends}")
        with open(outdir / f"{stem}_alpha_sweep.json", "w", encoding="utf-8") as fh:
            json.dump({"trends": trends}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {csv_path}")
        if cfg.output.figures:
            print(f"wrote {report.render_alpha_sweep_figure(rows, outdir, stem)}")
        return EXIT_OK

    l1 = _parse_grid(args.lambda1)
    l2 = _parse_grid(args.lambda2)
    if not l1 or not l2:
        raise ConfigError("gain sweep needs non-empty lambda1 and lambda2 grids")
    rows = sim.sweep_gains(cfg.scenario, cfg.robot, cfg.gains.alpha, l1, l2, **kw)
    csv_path = outdir / f"{stem}_gain_sweep.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda1", "lambda2", "settle_all",
                    "tv_x", "tv_y", "tv_yaw", "tv_total"])
        for r in rows:
            w.writerow([r.lambda1, r.lambda2, r.settle_all, *r.tv, r.tv_total])
    print(f"gain sweep: {len(rows)} rows")
    print(f"wrote {csv_path}")
    if cfg.output.figures:
        print(f"wrote {report.render_gain_sweep_figure(rows, outdir, stem)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mecatrack",
        description="Finite-time backstepping tracking for a mecanum platform: "
                    "simulate, compare exponents, sweep gains.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        p.add_argument("--config", help="JSON config file (packaged defaults otherwise)")
        if scenario:
            p.add_argument("--scenario", choices=("case1", "case2", "case3"),
                           help="named scenario preset")
        p.add_argument("--alpha", type=float, help="override the exponent")
        p.add_argument("--duration", type=float, help="override the horizon (s)")
        p.add_argument("--out-dir", help="output directory "
                                         "(or MECATRACK_OUTDIR, or config)")
        p.add_argument("--stem", help="basename for output files")
        p.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")

    p_run = sub.add_parser("run", help="simulate one scenario and persist results")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="side-by-side metrics across exponents")
    common(p_cmp)
    p_cmp.add_argument("--alphas", default="0.75,1.0",
                       help="comma list or start:stop:step (default 0.75,1.0)")
    p_cmp.set_defaults(func=cmd_compare)

    p_sw = sub.add_parser("sweep", help="grid studies over alpha or gain scales")
    common(p_sw)
    p_sw.add_argument("--kind", choices=("alpha", "gains"), default="alpha")
    p_sw.add_argument("--alphas", default="0.6:1.0:0.05")
    p_sw.add_argument("--lambda1", default="1.0,1.5,2.0,2.5,3.0")
    p_sw.add_argument("--lambda2", default="1.0,1.5,2.0,2.5,3.0")
    p_sw.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="check a config file and exit")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except GainError as exc:
        print(f"gain validation error: {exc}", file=sys.stderr)
        return EXIT_GAINS
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
