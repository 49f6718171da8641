"""Command-line driver: ``sealsim equilibrium|run|phase|critical-angle``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import PRESETS, ScenarioSpec, SweepSpec, parse_config
from .dynamics import (
    AllContact,
    FilmModel,
    NoBracket,
    NoneContact,
    closure_distance,
    critical_angle,
    find_equilibrium,
    period_curves,
    run_transient,
)
from .model import ConfigError, RotorMotion

log = logging.getLogger("sealsim")

EXIT_OK, EXIT_ERROR, EXIT_CONTACT = 0, 1, 2
WORKERS_ENV = "SEALSIM_WORKERS"


def _need(spec, kind, command):
    if not isinstance(spec, kind):
        raise ConfigError(f"command '{command}' needs a {'sweep' if kind is SweepSpec else 'scenario'} config")
    return spec


def cmd_equilibrium(spec: ScenarioSpec, out: Path) -> dict:
    cfg = spec.config
    film = FilmModel(cfg)
    h_eq = find_equilibrium(cfg, film)
    force = film.force(h_eq, 0.0, 0.0) if cfg.alpha != 0.0 else 0.0
    residual = cfg.k_z * (h_eq - 1.0) - cfg.alpha * force
    report = {"h_s_eq": h_eq, "residual": residual, "force": force, "beta": cfg.beta}
    io.write_json(out / "equilibrium.json", report)
    print(f"h_s_eq = {h_eq:.12f}  residual = {residual:.3e}  F = {force:.10f}")
    return report


def cmd_run(spec: ScenarioSpec, out: Path):
    """Run one scenario and write its time series and pressure snapshots."""
    snap_dir = out / "snapshots"
    snaps = list(spec.snapshot_times)
    best = {}

    def on_step(rec, film):
        if snaps and film.field is not None:
            for ts in snaps:
                if abs(rec.t - ts) < 1e-9:
                    snap_dir.mkdir(parents=True, exist_ok=True)
                    io.write_vtk(snap_dir / f"pressure_t{ts:.6f}.vtk", film.field, f"pressure t={rec.t!r}")
        if spec.snapshot_min_g and film.field is not None and rec.g < best.get("g", math.inf):
            best.update(g=rec.g, t=rec.t, field=film.field)

    result = run_transient(spec.config, spec.motion, spec.t_end, callbacks=[on_step], stop_times=snaps)
    recs = result.records
    kept = recs[:: spec.record_stride]
    if kept[-1] is not recs[-1]:
        kept.append(recs[-1])
    io.write_timeseries(out / "timeseries.csv", kept)
    if "field" in best:
        snap_dir.mkdir(parents=True, exist_ok=True)
        io.write_vtk(snap_dir / "pressure_min_g.vtk", best["field"], f"pressure t={best['t']!r} g={best['g']!r}")
    summary = {"h_s_eq": result.h_eq, "g_min": result.g_min, "steps": len(recs) - 1, "t_final": recs[-1].t}
    if result.contact is not None:
        io.write_json(out / "contact.json", result.contact)
        summary["contact"] = result.contact
    io.write_json(out / "summary.json", summary)
    return result


def cmd_phase(spec: ScenarioSpec, out: Path):
    """Write ``(g, dg/dt)`` per forcing period and period-to-period closure."""
    motion = spec.motion
    period = motion.period
    n = spec.n_periods or max(1, int(round(spec.t_end / period)))
    stops = [k * period for k in range(1, n)]
    result = run_transient(spec.config, motion, n * period, stop_times=stops)
    curves = period_curves(result, motion, period)
    with (out / "phase.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period", "phase", "g", "dg_dt"])
        for k, (ph, g, dg) in enumerate(curves, start=1):
            for row in zip(ph, g, dg):
                w.writerow([k] + [repr(float(v)) for v in row])
    rows = []
    for k, cur in enumerate(curves, start=1):
        ends = math.hypot(cur[1][-1] - cur[1][0], cur[2][-1] - cur[2][0])
        prev = closure_distance(cur, curves[k - 2]) if k > 1 else math.nan
        rows.append({"period": k, "closure_to_previous": prev, "end_gap": ends, "discontinuous": k == 1 and ends > 1e-6, "g_min": float(np.min(cur[1]))})
    with (out / "closure.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["period"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    if result.contact is not None:
        io.write_json(out / "contact.json", result.contact)
    return result, rows


def _one_eps(args):
    eps, spec = args
    trail = []
    try:
        beta = critical_angle(eps, spec.config, spec.n_periods, spec.beta_lo, spec.beta_hi, spec.decimals, trail)
        status = "ok"
    except (AllContact, NoneContact, NoBracket) as exc:
        beta, status = math.nan, f"{type(exc).__name__}: {exc}"
    return eps, beta, status, trail


def cmd_critical_angle(spec: SweepSpec, out: Path, workers: int = 1):
    jobs = [(e, spec) for e in spec.eps_values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_eps, jobs))
    else:
        results = [_one_eps(j) for j in jobs]
    with (out / "critical_angles.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "beta_crit", "status", "n_probes"])
        for eps, beta, status, trail in results:
            w.writerow([repr(eps), "nan" if math.isnan(beta) else f"{beta:.{spec.decimals}f}", status, len(trail)])
    audit = {repr(eps): [p for p in trail] for eps, _, _, trail in results}
    io.write_json(out / "bisection_audit.json", audit)
    for eps, beta, status, _ in results:
        print(f"eps = {eps:g}  beta_crit = {beta:.{spec.decimals}f}  [{status}]")
    return results


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sealsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("equilibrium", "run", "phase", "critical-angle"):
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="TOML config file")
        s.add_argument("--out", type=Path, required=True, help="output directory")
        s.add_argument("--preset", choices=PRESETS, help="built-in base scenario")
        s.add_argument("--deterministic", action="store_true", help="single worker, reproducible output")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config is None and args.preset is None:
            raise ConfigError("either --config or --preset is required")
        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        spec = parse_config(args.config, args.preset, out_dir=out)
        workers = 1 if args.deterministic else max(1, int(os.environ.get(WORKERS_ENV, "1")))
        if args.command == "equilibrium":
            if isinstance(spec, SweepSpec):
                spec = ScenarioSpec(spec.name, spec.config, RotorMotion.stationary(), 1.0)
            cmd_equilibrium(spec, out)
            return EXIT_OK
        if args.command == "run":
            result = cmd_run(_need(spec, ScenarioSpec, "run"), out)
            return EXIT_CONTACT if result.contact is not None else EXIT_OK
        if args.command == "phase":
            result, _ = cmd_phase(_need(spec, ScenarioSpec, "phase"), out)
            return EXIT_CONTACT if result.contact is not None else EXIT_OK
        cmd_critical_angle(_need(spec, SweepSpec, "critical-angle"), out, workers)
        return EXIT_OK
    except (ConfigError, OSError, RuntimeError, ArithmeticError, ValueError) as exc:
        print(f"sealsim: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
