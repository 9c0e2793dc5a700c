"""Synthetic scan generation with exact ground truth.

The world is rebuilt fresh around the sensor every scan (no persistent map):
static points are drawn uniformly in a box centered on the sensor, and each
dynamic object contributes a cluster of points sharing one world velocity.
The Doppler reading of a point is the relative velocity projected on the
sensor-to-point direction, so approaching targets read negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ego_velocity import Scan
from .errors import ValidationError
from .geometry import Pose, as_vec3, left_jacobian_so3, so3_exp
from .kinematics import VehicleGeometry

# Static points are re-drawn until they clear this range (m), keeping the
# direction rows well defined.
MIN_RANGE = 0.5


@dataclass(frozen=True)
class TwistSegment:
    """Constant body-frame motion held for a duration.

    `velocity` is the vehicle-origin velocity (m/s) and `omega` the rotation
    rate (rad/s), both in the vehicle frame.
    """

    duration: float
    velocity: tuple[float, float, float]
    omega: tuple[float, float, float]

    def __post_init__(self):
        if not (self.duration > 0.0 and math.isfinite(self.duration)):
            raise ValidationError("segment duration must be positive and finite")
        as_vec3(self.velocity, "segment velocity")
        as_vec3(self.omega, "segment omega")


def consistent_segment(
    duration: float,
    forward_speed: float,
    omega_y: float = 0.0,
    omega_z: float = 0.0,
    half_wheelbase: float = 0.25,
) -> TwistSegment:
    """Segment whose twist satisfies the single-track model.

    The origin rides the rear axle (no lateral velocity) and climbs at the
    rate the pitch ICR implies: v = (forward_speed, 0, omega_y * m).
    """
    return TwistSegment(
        duration,
        (forward_speed, 0.0, omega_y * half_wheelbase),
        (0.0, omega_y, omega_z),
    )


@dataclass(frozen=True)
class MotionProfile:
    """Piecewise-constant-twist trajectory sampled at a fixed scan rate.

    Segment boundaries must align with scan boundaries (duration * scan_rate
    integral). Roll rate must be zero unless `allow_model_violations` is set;
    violating twists are useful for stress tests but break the kinematic
    model the estimator assumes.
    """

    segments: tuple[TwistSegment, ...]
    scan_rate: float = 10.0
    allow_model_violations: bool = False

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValidationError("profile needs at least one segment")
        if not (self.scan_rate > 0.0 and math.isfinite(self.scan_rate)):
            raise ValidationError("scan_rate must be positive and finite")
        for i, seg in enumerate(self.segments):
            n = seg.duration * self.scan_rate
            if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
                raise ValidationError(
                    f"segment {i} duration {seg.duration} does not align with "
                    f"the {self.scan_rate} Hz scan boundary"
                )
            if seg.omega[0] != 0.0 and not self.allow_model_violations:
                raise ValidationError(
                    f"segment {i} has nonzero roll rate; set "
                    "allow_model_violations to simulate it anyway"
                )

    def scan_counts(self) -> list[int]:
        return [int(round(seg.duration * self.scan_rate)) for seg in self.segments]


@dataclass(frozen=True)
class DynamicObjectSpec:
    """A cluster of `point_count` returns moving rigidly at `velocity` (world)."""

    center: tuple[float, float, float]
    extent: float
    velocity: tuple[float, float, float]
    point_count: int

    def __post_init__(self):
        as_vec3(self.center, "object center")
        as_vec3(self.velocity, "object velocity")
        if not (self.extent > 0.0 and math.isfinite(self.extent)):
            raise ValidationError("object extent must be positive and finite")
        if self.point_count < 1:
            raise ValidationError("object point_count must be >= 1")


@dataclass(frozen=True)
class SceneSpec:
    """What the sensor sees and how noisy it is."""

    static_point_count: int = 300
    world_extent: float = 30.0
    dynamic_objects: tuple[DynamicObjectSpec, ...] = ()
    doppler_noise_sigma: float = 0.0
    power_range: tuple[float, float] = (0.5, 2.0)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "dynamic_objects", tuple(self.dynamic_objects))
        if self.static_point_count < 0:
            raise ValidationError("static_point_count must be >= 0")
        if not (self.world_extent > MIN_RANGE):
            raise ValidationError(f"world_extent must exceed {MIN_RANGE} m")
        if self.doppler_noise_sigma < 0.0:
            raise ValidationError("doppler_noise_sigma must be >= 0")
        lo, hi = self.power_range
        if not (0.0 < lo <= hi):
            raise ValidationError("power_range must satisfy 0 < min <= max")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


def simulate_scan(
    pose: Pose,
    origin_velocity,
    omega,
    geometry: VehicleGeometry,
    scene: SceneSpec,
    timestamp: float,
    rng: np.random.Generator | None = None,
):
    """Generate one scan from the vehicle's pose and instantaneous twist.

    Args:
        pose: vehicle pose in the world at `timestamp`.
        origin_velocity: vehicle-origin velocity, vehicle frame (m/s).
        omega: rotation rate, vehicle frame (rad/s).
        rng: generator to consume; a fresh one seeded from the scene is used
            when omitted.

    Returns:
        (scan, dynamic_labels): the scan in the sensor frame and a boolean
        array marking which points belong to dynamic objects.
    """
    if rng is None:
        rng = np.random.default_rng(scene.seed)
    origin_velocity = as_vec3(origin_velocity, "origin_velocity")
    omega = as_vec3(omega, "omega")

    r_vw = pose.rotation
    sensor_pos = pose.position + r_vw @ geometry.sensor_position
    r_sw = r_vw @ geometry.rotation_vs
    v_sensor_world = r_vw @ (origin_velocity + np.cross(omega, geometry.sensor_position))

    points_world = []
    velocities_world = []
    labels = []

    if scene.static_point_count:
        e = scene.world_extent
        pts = sensor_pos + rng.uniform(-e, e, (scene.static_point_count, 3))
        # Re-draw anything inside the sensor's minimum range.
        for _ in range(64):
            close = np.linalg.norm(pts - sensor_pos, axis=1) < MIN_RANGE
            if not close.any():
                break
            pts[close] = sensor_pos + rng.uniform(-e, e, (int(close.sum()), 3))
        points_world.append(pts)
        velocities_world.append(np.zeros((scene.static_point_count, 3)))
        labels.append(np.zeros(scene.static_point_count, dtype=bool))

    for obj in scene.dynamic_objects:
        center = np.asarray(obj.center, dtype=np.float64)
        pts = center + rng.uniform(-obj.extent, obj.extent, (obj.point_count, 3))
        points_world.append(pts)
        velocities_world.append(np.tile(np.asarray(obj.velocity), (obj.point_count, 1)))
        labels.append(np.ones(obj.point_count, dtype=bool))

    if points_world:
        pts = np.vstack(points_world)
        vels = np.vstack(velocities_world)
        dynamic = np.concatenate(labels)
    else:
        pts = np.zeros((0, 3))
        vels = np.zeros((0, 3))
        dynamic = np.zeros(0, dtype=bool)

    offsets = pts - sensor_pos
    ranges = np.linalg.norm(offsets, axis=1)
    units = offsets / ranges[:, None] if len(pts) else offsets
    doppler = np.einsum("ij,ij->i", vels - v_sensor_world, units)
    power = rng.uniform(scene.power_range[0], scene.power_range[1], len(pts))
    noise = rng.normal(0.0, scene.doppler_noise_sigma, len(pts))

    scan = Scan(timestamp, offsets @ r_sw, doppler + noise, power)
    return scan, dynamic


def simulate_sequence(profile: MotionProfile, geometry: VehicleGeometry, scene: SceneSpec):
    """Simulate a whole trajectory.

    The vehicle starts at the identity pose at t = 0 and scans arrive at the
    end of each interval, carrying the twist that was active over it. Ground
    truth uses the same closed-form constant-twist step the integrator uses,
    so a noiseless run round-trips exactly.

    Returns:
        (scans, truth, labels): scans per interval, truth poses at t = 0 and
        every scan timestamp, and per-scan dynamic-label arrays.
    """
    dt = 1.0 / profile.scan_rate
    pose = Pose.identity(0.0)
    truth = [pose]
    scans = []
    labels = []
    index = 0
    for seg, count in zip(profile.segments, profile.scan_counts()):
        velocity = np.asarray(seg.velocity, dtype=np.float64)
        omega = np.asarray(seg.omega, dtype=np.float64)
        step = left_jacobian_so3(omega * dt) @ (velocity * dt)
        rot_step = so3_exp(omega, dt)
        for _ in range(count):
            t = (index + 1) * dt
            pose = Pose(
                pose.rotation @ rot_step,
                pose.position + pose.rotation @ step,
                t,
            )
            rng = np.random.default_rng([scene.seed, index])
            scan, dyn = simulate_scan(pose, velocity, omega, geometry, scene, t, rng=rng)
            scans.append(scan)
            labels.append(dyn)
            truth.append(pose)
            index += 1
    return scans, truth, labels
