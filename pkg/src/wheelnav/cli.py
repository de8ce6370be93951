"""Command-line front end.

Subcommands: simulate, detect, filter, evaluate, pipeline.  See README
for worked examples; every run exits 0 only on full success.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import scenarios
from .detectors import MotionFlags, evaluate_detector
from .io_csv import (read_flags_csv, read_imu_csv, read_pose_csv,
                     write_flags_csv, write_imu_csv, write_pose_csv,
                     write_scores_csv)
from .metrics import TrajectoryRecord, compute_metrics
from .pipeline import RunConfig, build_detector, run_pipeline
from .simulate import (Arc, ImuCorruption, Ramp, Rock, Skid, SpeedRamp, Stop,
                       Straight, TrajectorySpec, corrupt, generate_truth)

_SEGMENT_KINDS = {
    "stop": Stop, "straight": Straight, "arc": Arc, "ramp": Ramp,
    "rock": Rock, "speed_ramp": SpeedRamp, "skid": Skid,
}

_PRESETS = {
    "stationary": scenarios.stationary,
    "mixed_60s": scenarios.mixed_drive_60s,
    "no_stop_7min": scenarios.no_stop_drive,
    "consistency_40s": scenarios.consistency_drive_40s,
}


def _spec_from_json(payload: dict) -> tuple[TrajectorySpec, ImuCorruption]:
    segments = []
    for raw in payload["segments"]:
        raw = dict(raw)
        kind = raw.pop("kind")
        if kind not in _SEGMENT_KINDS:
            raise ValueError(f"unknown segment kind {kind!r}")
        segments.append(_SEGMENT_KINDS[kind](**raw))
    spec = TrajectorySpec(segments=tuple(segments),
                          rate_hz=payload.get("rate_hz", 100.0),
                          seed=payload.get("seed", 0))
    corr = ImuCorruption(**payload.get("corruption", {}))
    return spec, corr


def _cmd_simulate(args) -> int:
    if args.spec:
        with open(args.spec) as fh:
            spec, corr = _spec_from_json(json.load(fh))
    else:
        spec = _PRESETS[args.preset]()
        corr = ImuCorruption(seed=args.seed, **(
            scenarios.SENSOR_NOISE if args.sensor_noise else {}))
    truth = generate_truth(spec)
    samples = corrupt(truth, corr)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_imu_csv(out / "imu.csv", samples)
    write_pose_csv(out / "truth.csv", TrajectoryRecord(
        t=truth.t, position=truth.position_w, rotation=truth.rotation))
    write_flags_csv(out / "flags.csv", truth.t, truth.flags_list())
    print(f"wrote {len(samples)} samples over {truth.t[-1]:.2f} s to {out}")
    return 0


def _cmd_detect(args) -> int:
    samples = read_imu_csv(args.imu)
    detector = build_detector(args.detector, args.flags)
    flags = []
    scores = []
    for s in samples:
        flags.append(detector.step(s))
        if args.scores_out and hasattr(detector, "last_scores"):
            scores.append(detector.last_scores.copy())
    write_flags_csv(args.out, np.array([s.timestamp for s in samples]), flags)
    if args.scores_out:
        if not scores:
            raise ValueError("--scores-out requires a network detector")
        write_scores_csv(args.scores_out, np.array(scores))
    if args.truth_flags:
        _, truth = read_flags_csv(args.truth_flags)
        for name, rep in evaluate_detector(flags, truth).items():
            star = "" if rep.precision_defined else " (no detections)"
            print(f"{name}: precision={rep.precision:.4f}{star} "
                  f"recall={rep.recall:.4f} tp={rep.tp} fp={rep.fp} "
                  f"tn={rep.tn} fn={rep.fn}")
    return 0


def _cmd_filter(args) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config)
    print(f"trajectory written to {result.output_dir / 'trajectory.csv'}")
    return 0


def _cmd_evaluate(args) -> int:
    est = read_pose_csv(args.est)
    gt = read_pose_csv(args.gt)
    report = compute_metrics(est, gt, max_gap=args.max_gap)
    print(report.as_text(), end="")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps(dataclasses.asdict(report), indent=2))
    return 0


def _cmd_pipeline(args) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config)
    if result.report is not None:
        print(result.report.as_text(), end="")
    else:
        print(f"no ground truth given; artifacts in {result.output_dir}")
    return 0


def _config_from_args(args) -> RunConfig:
    if args.config:
        config = RunConfig.from_json(args.config)
    else:
        config = RunConfig(imu_path="", output_dir="out")
    overrides = {}
    for name in ("imu", "truth", "flags", "detector", "out", "seed"):
        value = getattr(args, name, None)
        if value is not None:
            key = {"imu": "imu_path", "truth": "truth_path",
                   "flags": "flags_path", "out": "output_dir"}.get(name, name)
            overrides[key] = value
    if getattr(args, "no_lat_up", False):
        overrides["use_lat_up"] = False
    config = dataclasses.replace(config, **overrides)
    if not config.imu_path:
        raise ValueError("an IMU csv is required (--imu or config file)")
    return config


def _add_run_arguments(sub) -> None:
    sub.add_argument("--config", help="RunConfig JSON file")
    sub.add_argument("--imu", help="input IMU csv")
    sub.add_argument("--truth", help="ground-truth pose csv (enables metrics)")
    sub.add_argument("--flags", help="ground-truth flags csv (oracle detector)")
    sub.add_argument("--detector", help="oracle | amvd | network:<weights>")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--no-lat-up", action="store_true",
                     help="disable lateral/vertical pseudo-measurements")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wheelnav",
        description="IMU-only dead reckoning with motion-profile updates")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="generate a synthetic drive")
    sim.add_argument("--preset", choices=sorted(_PRESETS), default="mixed_60s")
    sim.add_argument("--spec", help="trajectory + corruption JSON file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--sensor-noise", action="store_true",
                     help="apply sensor-grade noise + road vibration")
    sim.set_defaults(func=_cmd_simulate)

    det = subs.add_parser("detect", help="run a detector over an IMU csv")
    det.add_argument("--imu", required=True)
    det.add_argument("--detector", required=True)
    det.add_argument("--flags", help="flags csv for the oracle detector")
    det.add_argument("--out", required=True, help="output flags csv")
    det.add_argument("--scores-out", help="raw score csv (network detector)")
    det.add_argument("--truth-flags", help="reference flags csv to score against")
    det.set_defaults(func=_cmd_detect)

    flt = subs.add_parser("filter", help="filter an IMU csv into a trajectory")
    _add_run_arguments(flt)
    flt.set_defaults(func=_cmd_filter)

    ev = subs.add_parser("evaluate", help="trajectory error metrics")
    ev.add_argument("--est", required=True)
    ev.add_argument("--gt", required=True)
    ev.add_argument("--max-gap", type=float, default=None)
    ev.add_argument("--json-out")
    ev.set_defaults(func=_cmd_evaluate)

    pipe = subs.add_parser("pipeline", help="simulator/log -> detector -> "
                                            "filter -> metrics")
    _add_run_arguments(pipe)
    pipe.set_defaults(func=_cmd_pipeline)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
