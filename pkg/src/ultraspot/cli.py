"""Command-line entry point: simulate, detect, calibrate, scan, montecarlo, verify."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from . import __version__
from .errors import UltraspotError
from .estimator import PipelineConfig
from .footprint import DEFAULT_MOUNTS, FootprintThresholds, ReferencePattern, RssiFootprint, calibrate_reference
from .likelihood import LikelihoodConfig, ScanModel, calibrate_scan_model, grid_scan
from .estimator import TimingErrors
from .sim import (ScenarioConfig, ScenarioResult, SimTrace, evaluate, generate_trajectory, hold_last,
                  measured_initial_distance, monte_carlo, run_pipeline, scan_window, simulate)
from .traceio import dumps, emit_report, load_trace, table_text, to_arrays, trace_records, write_trace

log = logging.getLogger("ultraspot")

PIPELINE_KEYS = {"approach_distance_m", "trigger_s", "warmup_lead_ns", "window", "clamp_m",
                 "pass_hysteresis_m"}


def ring_mounts(n: int, radius_m: float = 0.3 * math.sqrt(2.0)) -> tuple:
    """``n`` mounts evenly around the airframe starting at 45 deg; the 4-device case is the default rectangle."""
    if n == 4:
        return tuple(map(tuple, DEFAULT_MOUNTS.tolist()))
    ang = np.radians(45.0 + 360.0 * np.arange(n) / n)
    return tuple((float(radius_m * math.cos(a)), float(radius_m * math.sin(a)), 0.0) for a in ang)


def load_config(args) -> tuple:
    """(ScenarioConfig, PipelineConfig) from --config plus flag overrides."""
    raw: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    pipe_raw = raw.pop("pipeline", {}) or {}
    unknown = set(pipe_raw) - PIPELINE_KEYS
    if unknown:
        raise UltraspotError(f"unknown pipeline keys: {sorted(unknown)}")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.scenario is not None:
        raw["scenario"] = args.scenario
    if args.devices is not None:
        if args.devices < 1:
            raise UltraspotError("--devices must be >= 1")
        raw["device_mounts"] = ring_mounts(args.devices)
        raw.pop("shadow_profiles", None)
    cfg = ScenarioConfig.from_dict(raw)
    pcfg = PipelineConfig(scenario=cfg.scenario, d0_m=cfg.d0_m, **pipe_raw)
    return cfg, pcfg


def _trace_from_file(path: str, cfg: ScenarioConfig):
    arrays = to_arrays(load_trace(path, cfg.n_devices), cfg.n_devices)
    traj = generate_trajectory(cfg)
    n = min(len(arrays.t_ns), len(traj.t_ns))
    if n and not np.array_equal(arrays.t_ns[:n], traj.t_ns[:n]):
        log.warning("trace timestamps differ from the configured flight; ground truth may not apply")
    nan = np.full(arrays.phase_rad.shape, np.nan)
    return SimTrace(cfg, traj, nan, nan, nan, arrays.phase_rad, arrays.rssi_dbm, arrays.packet_ok,
                    measured_initial_distance(cfg)), arrays


def _out_dir(args, default: str) -> str:
    return args.out or default


def cmd_simulate(args) -> int:
    cfg, _ = load_config(args)
    trace = simulate(cfg)
    out = args.out or "trace.jsonl"
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    write_trace(trace_records(trace), out)
    print(out)
    return 0


def _detect(args):
    cfg, pcfg = load_config(args)
    trace, arrays = _trace_from_file(args.trace, cfg)
    if args.reference:
        with open(args.reference, encoding="utf-8") as fh:
            ref = ReferencePattern.from_dict(json.load(fh)["reference_pattern"])
        pcfg = replace(pcfg, reference=ref)
    run = run_pipeline(cfg, arrays.t_ns, arrays.phase_rad, arrays.rssi_dbm, arrays.packet_ok,
                       trace.d0_measured_m, pcfg)
    if len(trace.trajectory.t_ns) < len(arrays.t_ns):
        return cfg, trace, run, {}, None
    baselines, errors = evaluate(trace, run)
    return cfg, trace, run, baselines, errors


def cmd_detect(args) -> int:
    _, _, run, _, errors = _detect(args)
    paths = emit_report(_out_dir(args, "detect_out"), args.format, events=run.events,
                        errors=[errors] if errors is not None else [])
    for p in paths:
        print(p)
    return 0


def _window_slice(t_ns, start_s: Optional[float], end_s: Optional[float]) -> np.ndarray:
    t = np.asarray(t_ns) / 1e9
    keep = np.ones(t.shape, dtype=bool)
    if start_s is not None:
        keep &= t >= start_s
    if end_s is not None:
        keep &= t <= end_s
    return keep


def cmd_calibrate(args) -> int:
    cfg, pcfg = load_config(args)
    trace, arrays = _trace_from_file(args.trace, cfg)
    run = run_pipeline(cfg, arrays.t_ns, arrays.phase_rad, arrays.rssi_dbm, arrays.packet_ok,
                       trace.d0_measured_m, pcfg)
    keep = _window_slice(arrays.t_ns, args.t_start, args.t_end)
    rssi = hold_last(arrays.rssi_dbm, arrays.packet_ok)
    out: dict = {}
    if cfg.n_devices == 4:
        fps = [RssiFootprint(int(t), tuple(r)) for t, r in zip(arrays.t_ns[keep], rssi[keep])]
        dist = float(np.mean(run.fused_distance_m[keep])) if keep.any() else float("nan")
        try:
            out["reference_pattern"] = calibrate_reference(fps, dist, FootprintThresholds()).to_dict()
        except UltraspotError as exc:
            # scan model is still useful without a pose reference
            log.warning("no reference pattern: %s", exc)
    if cfg.scenario == 1:
        res = ScenarioResult(trace, run.fused_distance_m, run.device_track_m, run.devices_used, run.events,
                             run.timing, None, {}, None, run.transitions)
        win = scan_window(res, max_range_m=args.max_range)
        spot = math.sqrt(cfg.d0_m ** 2 - cfg.a_m ** 2)
        model = calibrate_scan_model(win, spot, cfg.a_m, rssi_ref_dbm=cfg.rssi_ref_dbm,
                                     rssi_ref_distance_m=cfg.rssi_ref_distance_m,
                                     path_loss_exponent=cfg.path_loss_exponent)
        out["scan_model"] = {"sigma_rssi_db": list(model.sigma_rssi_db),
                             "sigma_dist_m": list(model.sigma_dist_m), "rho": model.rho}
    path = args.out or "calibration.json"
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(out))
        fh.write("\n")
    print(path)
    return 0


def cmd_scan(args) -> int:
    cfg, pcfg = load_config(args)
    trace, arrays = _trace_from_file(args.trace, cfg)
    run = run_pipeline(cfg, arrays.t_ns, arrays.phase_rad, arrays.rssi_dbm, arrays.packet_ok,
                       trace.d0_measured_m, pcfg)
    res = ScenarioResult(trace, run.fused_distance_m, run.device_track_m, run.devices_used, run.events,
                         run.timing, None, {}, None, run.transitions)
    win = scan_window(res, max_range_m=args.max_range)
    common = dict(rssi_ref_dbm=cfg.rssi_ref_dbm, rssi_ref_distance_m=cfg.rssi_ref_distance_m,
                  path_loss_exponent=cfg.path_loss_exponent)
    if args.model:
        with open(args.model, encoding="utf-8") as fh:
            m = json.load(fh)["scan_model"]
        model = ScanModel(cfg.a_m, tuple(m["sigma_rssi_db"]), tuple(m["sigma_dist_m"]), m.get("rho", 0.0),
                          **common)
    else:
        model = ScanModel(cfg.a_m, (3.0,) * cfg.n_devices, (0.05,) * cfg.n_devices, **common)
    result = grid_scan(win, model, LikelihoodConfig(eta=args.eta, grid_step_m=args.grid_step))
    paths = emit_report(_out_dir(args, "scan_out"), args.format, scan=result)
    est_path = os.path.join(_out_dir(args, "scan_out"), "estimates.json")
    with open(est_path, "w", encoding="utf-8") as fh:
        fh.write(dumps(result.estimates_m))
        fh.write("\n")
    for p in paths + [est_path]:
        print(p)
    return 0


def cmd_montecarlo(args) -> int:
    cfg, _ = load_config(args)
    rep = monte_carlo(cfg, args.runs, workers=args.workers)
    out = _out_dir(args, "montecarlo_out")
    os.makedirs(out, exist_ok=True)
    header = ("seed",) + tuple(TimingErrors.FIELDS) + ("all_dropped_fraction",)
    runs_path = os.path.join(out, f"runs.{args.format}")
    with open(runs_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table_text(header, rep.rows(), args.format))
    summary = {"n_runs": args.runs, "median": rep.median, "percentiles": rep.percentiles,
               "median_ci95": rep.median_ci95,
               "all_dropped_fraction": float(np.mean(rep.all_dropped_fraction))}
    sum_path = os.path.join(out, "summary.json")
    with open(sum_path, "w", encoding="utf-8") as fh:
        fh.write(dumps(summary))
        fh.write("\n")
    print(runs_path)
    print(sum_path)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_checks

    seed = args.seed if args.seed is not None else 0
    results = run_checks(seed)
    rows = [(r.name, r.passed, r.observed, r.target, r.tolerance) for r in results]
    text = table_text(("check", "passed", "observed", "target", "tolerance"), rows, args.format)
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config (JSON)")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--scenario", type=int, choices=(1, 2))
    common.add_argument("--devices", type=int, help="number of ranging devices (default 4)")
    common.add_argument("--format", choices=("csv", "jsonl"), default="csv")

    p = argparse.ArgumentParser(prog="ultraspot", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="config -> JSONL trace")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("detect", parents=[common], help="trace -> events and timing errors")
    s.add_argument("trace")
    s.add_argument("--reference", help="calibration JSON holding a reference_pattern")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("calibrate", parents=[common], help="trace window -> reference pattern and scan model")
    s.add_argument("trace")
    s.add_argument("--t-start", type=float, help="window start, s")
    s.add_argument("--t-end", type=float, help="window end, s")
    s.add_argument("--max-range", type=float, default=20.0, help="scan-model samples below this range, m")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("scan", parents=[common], help="trace -> likelihood map")
    s.add_argument("trace")
    s.add_argument("--model", help="calibration JSON holding a scan_model")
    s.add_argument("--grid-step", type=float, default=0.1)
    s.add_argument("--eta", type=float, default=1.0)
    s.add_argument("--max-range", type=float, default=20.0)
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("montecarlo", parents=[common], help="config + N seeds -> statistics")
    s.add_argument("--runs", type=int, default=100)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_montecarlo)

    s = sub.add_parser("verify", parents=[common], help="diversity and loss-model Monte Carlo checks")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UltraspotError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
