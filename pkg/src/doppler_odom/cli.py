"""Command-line interface.

Subcommands: simulate, odom, calibrate, evaluate. Any config key can be
overridden per-invocation with `--set key=value`; `--seed` overrides both
the simulator and RANSAC seeds at once.

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 no scan could be processed, 5 calibration precondition failed,
6 trajectories do not overlap.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .calibration import (
    CalibrationRun,
    calibrate_rotation_step1,
    calibrate_rotation_step2,
    calibrate_sx,
    run_from_scans,
)
from .config import (
    OBJECT_HELP,
    SCHEMA,
    SEGMENT_HELP,
    Config,
    build_config,
    load_config,
    parse_raw,
    save_config,
)
from .dataset_io import (
    SCAN_HEADER,
    VELOCITY_HEADER,
    read_scans,
    read_trajectory,
    read_velocity_csv,
    read_yaw_rate_csv,
    write_estimates,
    write_labels,
    write_scans,
    write_trajectory,
)
from .errors import (
    AmbiguousDirection,
    DegenerateManeuver,
    DopplerOdomError,
    EmptyTrajectory,
    InsufficientExcitation,
    InsufficientMotion,
    NoOverlap,
    NoReference,
    NonMonotonicTimestamp,
    ParseError,
    ValidationError,
)
from .evaluation import MODES, relative_pose_error
from .geometry import Pose, rotation_angle
from .kinematics import VehicleGeometry
from .pipeline import GapRecord, run_sequence
from .simulator import simulate_sequence

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_SCANS = 4
EXIT_PRECONDITION = 5
EXIT_NO_OVERLAP = 6

_PRECONDITION_ERRORS = (
    InsufficientMotion,
    AmbiguousDirection,
    InsufficientExcitation,
    NoReference,
    DegenerateManeuver,
)


def _fail(code: int, exc: Exception) -> int:
    if isinstance(exc, _PRECONDITION_ERRORS):
        # name the violated precondition, not just its symptom
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def _config_epilog() -> str:
    lines = ["config keys (also usable with --set key=value):"]
    for key, (default, help_text) in SCHEMA.items():
        lines.append(f"  {key:28s} default {default:>6s}  {help_text}")
    lines.append(f"  {SEGMENT_HELP}")
    lines.append(f"  {OBJECT_HELP}")
    return "\n".join(lines)


def _load_config_with_overrides(args) -> Config:
    raw = {}
    if args.config is not None:
        with open(args.config) as fh:
            raw = parse_raw(fh.read(), str(args.config))
    for item in args.set or []:
        if "=" not in item:
            raise ValidationError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        override = parse_raw(f"{key.strip()} = {value.strip()}", "<--set>")
        raw.update(override)
    if getattr(args, "ransac_threshold", None) is not None:
        raw["ransac.inlier_threshold"] = repr(args.ransac_threshold)
    if args.seed is not None:
        raw["ransac.seed"] = str(args.seed)
        raw["sim.seed"] = str(args.seed)
    return build_config(raw)


def cmd_simulate(args) -> int:
    try:
        config = _load_config_with_overrides(args)
    except (OSError, ParseError, ValidationError) as exc:
        return _fail(EXIT_CONFIG, exc)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        scans, truth, labels = simulate_sequence(
            config.profile, config.vehicle, config.scene
        )
        write_scans(scans, out_dir / "scans.csv")
        write_trajectory(truth, out_dir / "truth_tum.txt")
        write_labels(scans, labels, out_dir / "labels.csv")
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    print(
        f"wrote {len(scans)} scans over {len(config.profile.segments)} segments "
        f"to {out_dir}"
    )
    return 0


def cmd_odom(args) -> int:
    try:
        config = _load_config_with_overrides(args)
    except (OSError, ParseError, ValidationError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        scans = list(read_scans(args.scans))
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (ParseError, NonMonotonicTimestamp) as exc:
        return _fail(EXIT_IO, exc)
    if not scans:
        return _fail(EXIT_NO_SCANS, ValidationError("scan file contains no scans"))

    if len(scans) > 1:
        dt = float(np.median(np.diff([s.timestamp for s in scans])))
    else:
        dt = 0.1
    initial = Pose.identity(scans[0].timestamp - dt)
    try:
        trajectory, results = run_sequence(scans, config.vehicle, config.ransac, initial)
    except NonMonotonicTimestamp as exc:
        return _fail(EXIT_IO, exc)

    gaps = [r for r in results if isinstance(r, GapRecord)]
    if len(gaps) == len(results):
        print(f"error: none of the {len(results)} scans produced an estimate",
              file=sys.stderr)
        for gap in gaps[:5]:
            print(f"  t={gap.timestamp}: {gap.reason}", file=sys.stderr)
        return EXIT_NO_SCANS

    try:
        write_trajectory(trajectory, args.out)
        if args.estimates is not None:
            write_estimates(results, args.estimates)
    except OSError as exc:
        return _fail(EXIT_IO, exc)

    times = [r.compute_time_ms for r in results if not isinstance(r, GapRecord)]
    inliers = [r.n_inliers for r in results if not isinstance(r, GapRecord)]
    print(f"processed {len(results)} scans, {len(gaps)} gaps")
    print(
        f"compute time per scan: mean {np.mean(times):.3f} ms, "
        f"max {np.max(times):.3f} ms ({_kernels.BACKEND} kernel)"
    )
    print(f"inliers per scan: mean {np.mean(inliers):.1f}")
    print(
        "ransac: "
        f"max_iterations={config.ransac.max_iterations} "
        f"inlier_threshold={config.ransac.inlier_threshold} "
        f"min_inliers={config.ransac.min_inliers} "
        f"seed={config.ransac.seed}"
    )
    for gap in gaps:
        print(f"gap at t={gap.timestamp}: {gap.reason}")
    return 0


def _read_calibration_input(path, config: Config) -> CalibrationRun:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
    if header == SCAN_HEADER:
        return run_from_scans(read_scans(path), config.ransac)
    if header == VELOCITY_HEADER:
        times, velocities = read_velocity_csv(path)
        return CalibrationRun(times, velocities)
    raise ParseError(
        f"expected a scan CSV ({SCAN_HEADER!r}) or velocity CSV ({VELOCITY_HEADER!r})",
        str(path),
        1,
    )


def cmd_calibrate(args) -> int:
    try:
        config = _load_config_with_overrides(args)
    except (OSError, ParseError, ValidationError) as exc:
        return _fail(EXIT_CONFIG, exc)
    try:
        run = _read_calibration_input(args.input, config)
        if args.reference is not None:
            ref_t, ref_w = read_yaw_rate_csv(args.reference)
            run = CalibrationRun(run.times, run.velocities, ref_t, ref_w)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (ParseError, NonMonotonicTimestamp, ValidationError) as exc:
        return _fail(EXIT_IO, exc)

    vehicle = config.vehicle
    try:
        if args.mode == "rotation1":
            result = calibrate_rotation_step1(run)
            rotation = result.rotation_vs
            print(
                f"forward-axis rotation: {np.degrees(rotation_angle(rotation)):.4f} deg "
                f"from {result.samples_used} samples, lateral rms "
                f"{result.residual_rms:.4f} m/s"
            )
        elif args.mode == "rotation2":
            result = calibrate_rotation_step2(run, vehicle.rotation_vs)
            rotation = result.rotation_vs
            print(
                f"roll-completed rotation from {result.samples_used} samples, "
                f"vertical rms {result.residual_rms:.4f} m/s"
            )
        else:
            s_x = calibrate_sx(run, vehicle.rotation_vs)
            print(f"s_x = {s_x:.6f} m")
            new_position = vehicle.sensor_position.copy()
            new_position[0] = s_x
            rotation = vehicle.rotation_vs
            try:
                vehicle = VehicleGeometry(
                    rotation, new_position, vehicle.half_wheelbase
                )
            except DopplerOdomError as exc:
                return _fail(EXIT_PRECONDITION, exc)
    except _PRECONDITION_ERRORS as exc:
        return _fail(EXIT_PRECONDITION, exc)

    if args.mode in ("rotation1", "rotation2"):
        vehicle = VehicleGeometry(
            rotation, vehicle.sensor_position, vehicle.half_wheelbase
        )
    updated = Config(vehicle, config.ransac, config.scene, config.profile)
    try:
        save_config(updated, args.out)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    print(f"wrote {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    try:
        estimate = read_trajectory(args.estimate)
        reference = read_trajectory(args.reference)
    except OSError as exc:
        return _fail(EXIT_IO, exc)
    except (ParseError, NonMonotonicTimestamp) as exc:
        return _fail(EXIT_IO, exc)
    try:
        report = relative_pose_error(estimate, reference, args.mode)
    except (NoOverlap, EmptyTrajectory) as exc:
        return _fail(EXIT_NO_OVERLAP, exc)
    except ValidationError as exc:
        return _fail(EXIT_CONFIG, exc)
    if args.out is not None:
        try:
            report.write_csv(args.out)
        except OSError as exc:
            return _fail(EXIT_IO, exc)
    print(report.format_summary())
    return 0


def _add_config_arguments(parser: argparse.ArgumentParser, with_threshold=False):
    parser.add_argument("--config", type=Path, default=None, help="config file path")
    parser.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (repeatable); see the key list below",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="override both sim.seed and ransac.seed"
    )
    if with_threshold:
        parser.add_argument(
            "--ransac-threshold",
            type=float,
            default=None,
            help="shorthand for --set ransac.inlier_threshold=...",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doppler-odom",
        description="3D vehicle odometry from single Doppler scans",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    epilog = _config_epilog()
    formatter = argparse.RawDescriptionHelpFormatter

    p_sim = sub.add_parser(
        "simulate",
        help="generate synthetic scans with ground truth",
        epilog=epilog,
        formatter_class=formatter,
    )
    p_sim.add_argument("out_dir", type=Path, help="directory for scans.csv, truth_tum.txt, labels.csv")
    _add_config_arguments(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_odom = sub.add_parser(
        "odom",
        help="run odometry over a scan file",
        epilog=epilog,
        formatter_class=formatter,
    )
    p_odom.add_argument("scans", type=Path, help="scan CSV input")
    p_odom.add_argument("out", type=Path, help="estimated trajectory (TUM) output")
    p_odom.add_argument(
        "--estimates", type=Path, default=None, help="optional per-scan estimate CSV"
    )
    _add_config_arguments(p_odom, with_threshold=True)
    p_odom.set_defaults(func=cmd_odom)

    p_cal = sub.add_parser(
        "calibrate",
        help="recover mounting extrinsics from maneuvers",
        epilog=epilog,
        formatter_class=formatter,
    )
    p_cal.add_argument(
        "mode", choices=("rotation1", "rotation2", "sx"), help="calibration step"
    )
    p_cal.add_argument("input", type=Path, help="scan CSV or velocity CSV of the maneuver")
    p_cal.add_argument("out", type=Path, help="updated config output path")
    p_cal.add_argument(
        "--reference", type=Path, default=None, help="yaw-rate CSV (required for sx)"
    )
    _add_config_arguments(p_cal)
    p_cal.set_defaults(func=cmd_calibrate)

    p_eval = sub.add_parser(
        "evaluate",
        help="relative pose error of an estimate against a reference",
    )
    p_eval.add_argument("estimate", type=Path, help="estimated trajectory (TUM)")
    p_eval.add_argument("reference", type=Path, help="reference trajectory (TUM)")
    p_eval.add_argument("--mode", choices=MODES, default="per-frame")
    p_eval.add_argument("--out", type=Path, default=None, help="per-pair error CSV")
    p_eval.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DopplerOdomError as exc:
        # Anything not mapped more specifically is a configuration problem.
        return _fail(EXIT_CONFIG, exc)


if __name__ == "__main__":
    sys.exit(main())
