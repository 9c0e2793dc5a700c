"""File formats: scan CSV, TUM trajectories, and small auxiliary CSVs.

Scan CSV: header `timestamp,x,y,z,doppler,power`; consecutive rows sharing a
timestamp form one scan; scan timestamps must be non-decreasing row to row
and strictly increasing scan to scan.

Trajectory files use the TUM line format `timestamp tx ty tz qx qy qz qw`
with quaternions normalized and canonicalized to qw >= 0.

All numeric fields are written with full round-trip precision, and every
reader rejects NaN/Inf with a line-numbered error.
"""

from __future__ import annotations

from typing import Iterable, Iterator, List

import numpy as np

from .ego_velocity import Scan
from .errors import NonMonotonicTimestamp, ParseError
from .geometry import Pose, quaternion_to_rotation, rotation_to_quaternion

SCAN_HEADER = "timestamp,x,y,z,doppler,power"
VELOCITY_HEADER = "timestamp,vx,vy,vz"
YAW_RATE_HEADER = "timestamp,omega_z"
LABEL_HEADER = "timestamp,point_index,is_dynamic"

Trajectory = List[Pose]


def format_float(x: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def _parse_float(text: str, path: str, line: int, what: str = "value") -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"bad {what} {text!r}", path, line) from None
    if not np.isfinite(value):
        raise ParseError(f"{what} must be finite, got {text!r}", path, line)
    return value


def write_scans(scans: Iterable[Scan], path) -> None:
    """Write scans as one flat CSV, points in scan order."""
    with open(path, "w") as fh:
        fh.write(SCAN_HEADER + "\n")
        for scan in scans:
            ts = format_float(scan.timestamp)
            for i in range(len(scan)):
                fh.write(
                    f"{ts},{format_float(scan.positions[i, 0])},"
                    f"{format_float(scan.positions[i, 1])},"
                    f"{format_float(scan.positions[i, 2])},"
                    f"{format_float(scan.doppler[i])},"
                    f"{format_float(scan.power[i])}\n"
                )


def read_scans(path) -> Iterator[Scan]:
    """Stream scans from a CSV file (see module docstring for the format)."""
    spath = str(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != SCAN_HEADER:
            raise ParseError(f"expected header {SCAN_HEADER!r}, got {header!r}", spath, 1)
        current_ts = None
        rows: list[tuple[float, float, float, float, float]] = []

        def emit(ts, rows):
            return Scan(
                ts,
                np.array([r[:3] for r in rows], dtype=np.float64).reshape(len(rows), 3),
                np.array([r[3] for r in rows]),
                np.array([r[4] for r in rows]),
            )

        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            parts = raw.rstrip("\n").split(",")
            if len(parts) != 6:
                raise ParseError(f"expected 6 fields, got {len(parts)}", spath, lineno)
            ts = _parse_float(parts[0], spath, lineno, "timestamp")
            values = [
                _parse_float(parts[i], spath, lineno, name)
                for i, name in ((1, "x"), (2, "y"), (3, "z"), (4, "doppler"), (5, "power"))
            ]
            if current_ts is None:
                current_ts = ts
            elif ts != current_ts:
                if ts < current_ts:
                    raise NonMonotonicTimestamp(
                        f"{spath}:{lineno}: timestamp {ts!r} goes backwards from {current_ts!r}"
                    )
                yield emit(current_ts, rows)
                current_ts = ts
                rows = []
            rows.append(tuple(values))
        if rows:
            yield emit(current_ts, rows)


def write_trajectory(trajectory: Iterable[Pose], path) -> None:
    """Write poses in TUM format, timestamps at nanosecond precision."""
    with open(path, "w") as fh:
        for pose in trajectory:
            q = rotation_to_quaternion(pose.rotation)
            fields = [f"{pose.timestamp:.9f}"]
            fields += [format_float(v) for v in pose.position]
            fields += [format_float(v) for v in q]
            fh.write(" ".join(fields) + "\n")


def read_trajectory(path) -> Trajectory:
    """Read a TUM trajectory; timestamps must be strictly increasing."""
    spath = str(path)
    poses: Trajectory = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise ParseError(f"expected 8 fields, got {len(parts)}", spath, lineno)
            vals = [_parse_float(p, spath, lineno) for p in parts]
            ts = vals[0]
            if poses and ts <= poses[-1].timestamp:
                raise NonMonotonicTimestamp(
                    f"{spath}:{lineno}: timestamp {ts!r} does not increase"
                )
            rotation = quaternion_to_rotation(np.array(vals[4:8]))
            poses.append(Pose(rotation, np.array(vals[1:4]), ts))
    return poses


def _read_columns(path, header: str, n_fields: int):
    """Shared reader for small `timestamp,...` CSVs; returns rows as floats."""
    spath = str(path)
    rows = []
    with open(path) as fh:
        first = fh.readline().rstrip("\n")
        if first != header:
            raise ParseError(f"expected header {header!r}, got {first!r}", spath, 1)
        for lineno, raw in enumerate(fh, start=2):
            if not raw.strip():
                continue
            parts = raw.rstrip("\n").split(",")
            if len(parts) != n_fields:
                raise ParseError(f"expected {n_fields} fields, got {len(parts)}", spath, lineno)
            rows.append([_parse_float(p, spath, lineno) for p in parts])
    return np.array(rows, dtype=np.float64).reshape(len(rows), n_fields)


def write_velocity_csv(times, velocities, path) -> None:
    with open(path, "w") as fh:
        fh.write(VELOCITY_HEADER + "\n")
        for t, v in zip(times, velocities):
            fh.write(
                f"{format_float(t)},{format_float(v[0])},"
                f"{format_float(v[1])},{format_float(v[2])}\n"
            )


def read_velocity_csv(path):
    """Returns (times (N,), velocities (N, 3))."""
    data = _read_columns(path, VELOCITY_HEADER, 4)
    return data[:, 0], data[:, 1:4]


def write_yaw_rate_csv(times, rates, path) -> None:
    with open(path, "w") as fh:
        fh.write(YAW_RATE_HEADER + "\n")
        for t, w in zip(times, rates):
            fh.write(f"{format_float(t)},{format_float(w)}\n")


def read_yaw_rate_csv(path):
    """Returns (times (N,), yaw rates (N,))."""
    data = _read_columns(path, YAW_RATE_HEADER, 2)
    return data[:, 0], data[:, 1]


def write_labels(scans: Iterable[Scan], labels, path) -> None:
    """Write per-point dynamic labels aligned with write_scans output."""
    with open(path, "w") as fh:
        fh.write(LABEL_HEADER + "\n")
        for scan, mask in zip(scans, labels):
            ts = format_float(scan.timestamp)
            for i, flag in enumerate(mask):
                fh.write(f"{ts},{i},{1 if flag else 0}\n")


ESTIMATE_HEADER = (
    "timestamp,vx,vy,vz,wx,wy,wz,n_inliers,n_dynamic,"
    "cov_vxx,cov_vxy,cov_vxz,cov_vyy,cov_vyz,cov_vzz,"
    "cov_wyy,cov_wyz,cov_wzz,time_ms"
)


def write_estimates(estimates, path) -> None:
    """Write per-scan MotionEstimates (gap records are skipped)."""
    from .pipeline import MotionEstimate

    with open(path, "w") as fh:
        fh.write(ESTIMATE_HEADER + "\n")
        for est in estimates:
            if not isinstance(est, MotionEstimate):
                continue
            cv = est.cov_velocity
            cw = est.cov_omega
            fields = [
                format_float(est.timestamp),
                *(format_float(v) for v in est.velocity),
                *(format_float(w) for w in est.omega),
                str(est.n_inliers),
                str(est.n_dynamic),
                format_float(cv[0, 0]),
                format_float(cv[0, 1]),
                format_float(cv[0, 2]),
                format_float(cv[1, 1]),
                format_float(cv[1, 2]),
                format_float(cv[2, 2]),
                format_float(cw[1, 1]),
                format_float(cw[1, 2]),
                format_float(cw[2, 2]),
                format_float(est.compute_time_ms),
            ]
            fh.write(",".join(fields) + "\n")
