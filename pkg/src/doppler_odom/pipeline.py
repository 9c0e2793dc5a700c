"""Per-scan motion estimation and pose integration."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ego_velocity import RansacParams, Scan, estimate_velocity_ransac
from .errors import (
    DegenerateGeometry,
    EmptyScan,
    InsufficientPoints,
    NoConsensus,
    NonMonotonicTimestamp,
    SingularGeometry,
    ZeroRange,
)
from .geometry import ROTATION_TOL, Pose, left_jacobian_so3, orthonormalize, so3_exp
from .kinematics import VehicleGeometry, vehicle_motion, vehicle_origin_velocity

# Per-scan failures that mean "skip this scan", as opposed to a broken stream.
_SCAN_FAILURES = (
    EmptyScan,
    ZeroRange,
    InsufficientPoints,
    DegenerateGeometry,
    NoConsensus,
    SingularGeometry,
)


@dataclass
class MotionEstimate:
    """Full per-scan motion solution in the vehicle frame.

    `velocity` is the sensor point's velocity expressed in the vehicle frame;
    `origin_velocity` is the rear-axle-center velocity actually integrated.
    `dynamic_mask` flags scan points rejected as moving objects.
    """

    timestamp: float
    velocity: np.ndarray
    omega: np.ndarray
    cov_velocity: np.ndarray
    cov_omega: np.ndarray
    origin_velocity: np.ndarray
    dynamic_mask: np.ndarray
    compute_time_ms: float

    @property
    def n_inliers(self) -> int:
        return int((~self.dynamic_mask).sum())

    @property
    def n_dynamic(self) -> int:
        return int(self.dynamic_mask.sum())


@dataclass
class GapRecord:
    """A scan that produced no estimate; the pose was held instead."""

    timestamp: float
    reason: str


@dataclass
class OdometryState:
    """Accumulated pose; the timestamp of the last integrated estimate."""

    pose: Pose

    @property
    def last_timestamp(self) -> float:
        return self.pose.timestamp


def process_scan(
    scan: Scan, geometry: VehicleGeometry, params: RansacParams
) -> MotionEstimate:
    """Estimate full vehicle motion from a single scan.

    Raises whatever the underlying velocity estimation raises; see
    estimate_velocity_ransac.
    """
    start = time.perf_counter()
    est = estimate_velocity_ransac(scan, params)
    motion = vehicle_motion(est.velocity, est.covariance, geometry)
    v_origin = vehicle_origin_velocity(motion.velocity, motion.omega, geometry)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    return MotionEstimate(
        timestamp=scan.timestamp,
        velocity=motion.velocity,
        omega=motion.omega,
        cov_velocity=motion.cov_velocity,
        cov_omega=motion.cov_omega,
        origin_velocity=v_origin,
        dynamic_mask=~est.inlier_mask,
        compute_time_ms=elapsed_ms,
    )


def integrate(state: OdometryState, est: MotionEstimate) -> OdometryState:
    """Advance the pose by one estimate.

    The estimate's velocity and rotation rate are treated as constant over
    (last_timestamp, est.timestamp], and the pose update is the closed-form
    constant-twist motion, so splitting an interval is exactly consistent.

    Raises:
        NonMonotonicTimestamp: estimate not strictly after the state.
    """
    dt = est.timestamp - state.last_timestamp
    if dt <= 0.0:
        raise NonMonotonicTimestamp(
            f"estimate at {est.timestamp!r} does not advance past {state.last_timestamp!r}"
        )
    r_prev = state.pose.rotation
    rotation = r_prev @ so3_exp(est.omega, dt)
    if np.abs(rotation.T @ rotation - np.eye(3)).max() > ROTATION_TOL:
        rotation = orthonormalize(rotation)
    step = left_jacobian_so3(est.omega * dt) @ (est.origin_velocity * dt)
    position = state.pose.position + r_prev @ step
    return OdometryState(Pose(rotation, position, est.timestamp))


def run_sequence(scans, geometry: VehicleGeometry, params: RansacParams, initial: Pose):
    """Run odometry over a scan sequence.

    Per-scan estimation failures produce a GapRecord and hold the last pose
    at the failed scan's timestamp; only a malformed stream (timestamps not
    strictly increasing) aborts.

    Returns:
        (trajectory, results): trajectory has the initial pose plus one pose
        per scan; results holds a MotionEstimate or GapRecord per scan.
    """
    state = OdometryState(initial)
    trajectory = [initial]
    results: list[MotionEstimate | GapRecord] = []
    for scan in scans:
        if scan.timestamp <= state.last_timestamp:
            raise NonMonotonicTimestamp(
                f"scan at {scan.timestamp!r} does not advance past {state.last_timestamp!r}"
            )
        try:
            est = process_scan(scan, geometry, params)
        except _SCAN_FAILURES as exc:
            reason = f"{type(exc).__name__}: {exc}"
            results.append(GapRecord(scan.timestamp, reason))
            held = Pose(state.pose.rotation, state.pose.position, scan.timestamp)
            state = OdometryState(held)
        else:
            results.append(est)
            state = integrate(state, est)
        trajectory.append(state.pose)
    return trajectory, results
