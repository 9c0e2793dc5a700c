"""Line-oriented `key = value` configuration with dotted keys.

Blank lines and `#` comments are ignored. Unknown keys are errors; missing
keys take the documented defaults. The same keys work as `--set key=value`
overrides on the command line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .ego_velocity import RansacParams
from .errors import ParseError, SingularGeometry, ValidationError
from .geometry import quaternion_to_rotation, rotation_to_quaternion
from .kinematics import VehicleGeometry
from .simulator import DynamicObjectSpec, MotionProfile, SceneSpec, TwistSegment
from .dataset_io import format_float

# key -> (default value as text, help line). Defaults marked None are
# computed while building (they depend on other keys).
SCHEMA: dict[str, tuple[str | None, str]] = {
    "vehicle.qx": ("0", "sensor-to-vehicle rotation quaternion, x"),
    "vehicle.qy": ("0", "sensor-to-vehicle rotation quaternion, y"),
    "vehicle.qz": ("0", "sensor-to-vehicle rotation quaternion, z"),
    "vehicle.qw": ("1", "sensor-to-vehicle rotation quaternion, w"),
    "vehicle.s_x": ("0.4", "sensor position in the vehicle frame, x (m)"),
    "vehicle.s_y": ("0", "sensor position in the vehicle frame, y (m)"),
    "vehicle.s_z": ("0", "sensor position in the vehicle frame, z (m)"),
    "vehicle.m": ("0.25", "half wheelbase: rear axle to pitch ICR (m)"),
    "ransac.max_iterations": ("100", "minimal samples drawn per scan"),
    "ransac.inlier_threshold": ("0.2", "inlier bound on radial residual (m/s)"),
    "ransac.min_inliers": ("10", "fewest inliers accepted as consensus"),
    "ransac.seed": ("0", "RANSAC sampling seed"),
    "sim.scan_rate": ("10", "simulated scans per second (Hz)"),
    "sim.static_points": ("300", "static world points per scan"),
    "sim.world_extent": ("30", "half-extent of the static point box (m)"),
    "sim.noise_sigma": ("0", "Doppler noise standard deviation (m/s)"),
    "sim.power_min": ("0.5", "lower bound of uniform signal power"),
    "sim.power_max": ("2", "upper bound of uniform signal power"),
    "sim.seed": ("0", "simulator seed"),
    "sim.allow_model_violations": ("0", "1 permits profiles with roll rate"),
}

# Indexed keys: values are space-separated numbers.
SEGMENT_KEY = re.compile(r"^sim\.segment\.(\d+)$")
OBJECT_KEY = re.compile(r"^sim\.object\.(\d+)$")
SEGMENT_HELP = "sim.segment.N = duration vx vy vz wx wy wz (vehicle-frame twist)"
OBJECT_HELP = "sim.object.N = cx cy cz extent vx vy vz count (world-frame object)"


@dataclass
class Config:
    """Everything a command needs: geometry, estimator knobs, and the scene."""

    vehicle: VehicleGeometry
    ransac: RansacParams
    scene: SceneSpec
    profile: MotionProfile


def parse_raw(text: str, path: str = "<config>") -> dict[str, str]:
    """Parse `key = value` lines into a dict, rejecting unknown keys."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", path, lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not (key in SCHEMA or SEGMENT_KEY.match(key) or OBJECT_KEY.match(key)):
            raise ParseError(f"unknown key {key!r}", path, lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", path, lineno)
        raw[key] = value
    return raw


def _get_float(raw, key) -> float:
    text = raw.get(key, SCHEMA[key][0])
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"{key} must be a number, got {text!r}") from None
    if not np.isfinite(value):
        raise ValidationError(f"{key} must be finite")
    return value


def _get_int(raw, key) -> int:
    text = raw.get(key, SCHEMA[key][0])
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"{key} must be an integer, got {text!r}") from None


def _indexed_values(raw: dict[str, str], pattern: re.Pattern, what: str):
    found = {}
    for key, value in raw.items():
        match = pattern.match(key)
        if match:
            found[int(match.group(1))] = (key, value)
    if not found:
        return []
    if sorted(found) != list(range(len(found))):
        raise ValidationError(f"{what} indices must be contiguous from 0, got {sorted(found)}")
    return [found[i] for i in range(len(found))]


def _parse_numbers(key: str, value: str, count: int) -> list[float]:
    parts = value.split()
    if len(parts) != count:
        raise ValidationError(f"{key} needs {count} numbers, got {len(parts)}")
    out = []
    for p in parts:
        try:
            x = float(p)
        except ValueError:
            raise ValidationError(f"{key}: bad number {p!r}") from None
        if not np.isfinite(x):
            raise ValidationError(f"{key}: values must be finite")
        out.append(x)
    return out


def build_config(raw: dict[str, str]) -> Config:
    """Assemble a Config from raw key/value text, applying defaults."""
    q = np.array([_get_float(raw, f"vehicle.q{c}") for c in "xyzw"])
    if np.linalg.norm(q) == 0.0:
        raise ValidationError("vehicle.q* quaternion must be nonzero")
    sensor_position = np.array(
        [_get_float(raw, f"vehicle.s_{c}") for c in "xyz"]
    )
    try:
        vehicle = VehicleGeometry(
            quaternion_to_rotation(q), sensor_position, _get_float(raw, "vehicle.m")
        )
    except SingularGeometry as exc:
        raise ValidationError(f"vehicle geometry invariant violated: {exc}") from exc

    ransac = RansacParams(
        max_iterations=_get_int(raw, "ransac.max_iterations"),
        inlier_threshold=_get_float(raw, "ransac.inlier_threshold"),
        min_inliers=_get_int(raw, "ransac.min_inliers"),
        seed=_get_int(raw, "ransac.seed"),
    )

    objects = []
    for key, value in _indexed_values(raw, OBJECT_KEY, "sim.object"):
        vals = _parse_numbers(key, value, 8)
        count = int(vals[7])
        if count != vals[7]:
            raise ValidationError(f"{key}: point count must be an integer")
        objects.append(
            DynamicObjectSpec(
                center=tuple(vals[0:3]),
                extent=vals[3],
                velocity=tuple(vals[4:7]),
                point_count=count,
            )
        )

    scene = SceneSpec(
        static_point_count=_get_int(raw, "sim.static_points"),
        world_extent=_get_float(raw, "sim.world_extent"),
        dynamic_objects=tuple(objects),
        doppler_noise_sigma=_get_float(raw, "sim.noise_sigma"),
        power_range=(_get_float(raw, "sim.power_min"), _get_float(raw, "sim.power_max")),
        seed=_get_int(raw, "sim.seed"),
    )

    segment_rows = _indexed_values(raw, SEGMENT_KEY, "sim.segment")
    if segment_rows:
        segments = []
        for key, value in segment_rows:
            vals = _parse_numbers(key, value, 7)
            segments.append(
                TwistSegment(vals[0], tuple(vals[1:4]), tuple(vals[4:7]))
            )
    else:
        # Demo default: straight, flat turn, then a gentle hill, consistent
        # with the configured half wheelbase.
        m = vehicle.half_wheelbase
        segments = [
            TwistSegment(4.0, (1.5, 0.0, 0.0), (0.0, 0.0, 0.0)),
            TwistSegment(3.0, (1.5, 0.0, 0.0), (0.0, 0.0, 0.5)),
            TwistSegment(3.0, (1.5, 0.0, 0.2 * m), (0.0, 0.2, 0.0)),
        ]
    profile = MotionProfile(
        segments=tuple(segments),
        scan_rate=_get_float(raw, "sim.scan_rate"),
        allow_model_violations=bool(_get_int(raw, "sim.allow_model_violations")),
    )
    return Config(vehicle, ransac, scene, profile)


def config_to_raw(config: Config) -> dict[str, str]:
    """Serialize a Config back to raw key/value text."""
    q = rotation_to_quaternion(config.vehicle.rotation_vs)
    s = config.vehicle.sensor_position
    raw = {
        "vehicle.qx": format_float(q[0]),
        "vehicle.qy": format_float(q[1]),
        "vehicle.qz": format_float(q[2]),
        "vehicle.qw": format_float(q[3]),
        "vehicle.s_x": format_float(s[0]),
        "vehicle.s_y": format_float(s[1]),
        "vehicle.s_z": format_float(s[2]),
        "vehicle.m": format_float(config.vehicle.half_wheelbase),
        "ransac.max_iterations": str(config.ransac.max_iterations),
        "ransac.inlier_threshold": format_float(config.ransac.inlier_threshold),
        "ransac.min_inliers": str(config.ransac.min_inliers),
        "ransac.seed": str(config.ransac.seed),
        "sim.scan_rate": format_float(config.profile.scan_rate),
        "sim.static_points": str(config.scene.static_point_count),
        "sim.world_extent": format_float(config.scene.world_extent),
        "sim.noise_sigma": format_float(config.scene.doppler_noise_sigma),
        "sim.power_min": format_float(config.scene.power_range[0]),
        "sim.power_max": format_float(config.scene.power_range[1]),
        "sim.seed": str(config.scene.seed),
        "sim.allow_model_violations": "1" if config.profile.allow_model_violations else "0",
    }
    for i, seg in enumerate(config.profile.segments):
        values = [seg.duration, *seg.velocity, *seg.omega]
        raw[f"sim.segment.{i}"] = " ".join(format_float(v) for v in values)
    for i, obj in enumerate(config.scene.dynamic_objects):
        values = [*obj.center, obj.extent, *obj.velocity]
        raw[f"sim.object.{i}"] = (
            " ".join(format_float(v) for v in values) + f" {obj.point_count}"
        )
    return raw


def load_config(path) -> Config:
    """Load a config file; missing keys default, unknown keys error."""
    with open(path) as fh:
        text = fh.read()
    return build_config(parse_raw(text, str(path)))


def save_config(config: Config, path) -> None:
    """Write every key explicitly so the file round-trips exactly."""
    raw = config_to_raw(config)
    with open(path, "w") as fh:
        for key, value in raw.items():
            fh.write(f"{key} = {value}\n")


def default_config() -> Config:
    return build_config({})
