"""Extrinsic calibration from driving maneuvers.

The mount rotation is recovered in two steps: a straight-line run pins the
forward axis, then planar driving with turns pins the roll about it. The
sensor's longitudinal offset s_x comes from a steady circle matched against
a reference yaw-rate series. All estimators consume per-scan sensor-frame
velocities; samples slower than SPEED_GATE are ignored throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousDirection,
    DegenerateManeuver,
    InsufficientExcitation,
    InsufficientMotion,
    NoReference,
    ValidationError,
)
from .geometry import rot_x, rotation_between

SPEED_GATE = 0.2  # m/s
SPEED_CEILING = 1e3  # m/s, sanity bound on input velocities
MIN_STRAIGHT_SAMPLES = 50
# Directions more than 60 deg off the principal axis cannot be sign-folded
# confidently; too many of them means the run was not straight.
CONFLICT_COS = 0.5
CONFLICT_FRACTION = 0.10
# Mean-square lateral velocity needed before roll is considered observable.
# (Second moment, not central variance: a steady circle has constant lateral
# velocity yet excites roll perfectly well.)
LATERAL_EXCITATION_MIN = 0.01  # (m/s)^2
ALIGN_TOL = 0.05  # s
YAW_RATE_CV_LIMIT = 0.2


@dataclass
class CalibrationRun:
    """Timestamped sensor-frame velocities, optionally with a yaw-rate reference."""

    times: np.ndarray
    velocities: np.ndarray
    reference_times: np.ndarray | None = None
    reference_yaw_rate: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.velocities = np.asarray(self.velocities, dtype=np.float64)
        if self.velocities.shape != (len(self.times), 3):
            raise ValidationError(
                f"velocities must be (N, 3) matching times, got {self.velocities.shape}"
            )
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.velocities))):
            raise ValidationError("calibration run must be finite")
        if len(self.velocities) and np.linalg.norm(self.velocities, axis=1).max() >= SPEED_CEILING:
            raise ValidationError(
                f"calibration speeds must stay below {SPEED_CEILING} m/s; "
                "check units of the input"
            )
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValidationError("calibration timestamps must be strictly increasing")
        if (self.reference_times is None) != (self.reference_yaw_rate is None):
            raise ValidationError("reference times and yaw rates must come together")
        if self.reference_times is not None:
            self.reference_times = np.asarray(self.reference_times, dtype=np.float64)
            self.reference_yaw_rate = np.asarray(self.reference_yaw_rate, dtype=np.float64)
            if self.reference_yaw_rate.shape != self.reference_times.shape:
                raise ValidationError("reference arrays must have matching shape")
            if len(self.reference_times) > 1 and np.any(np.diff(self.reference_times) <= 0.0):
                raise ValidationError("reference timestamps must be strictly increasing")


@dataclass
class ExtrinsicRotationResult:
    """A recovered sensor-to-vehicle rotation and how well it fit."""

    rotation_vs: np.ndarray
    residual_rms: float
    samples_used: int


def _gated(run: CalibrationRun):
    speeds = np.linalg.norm(run.velocities, axis=1)
    mask = speeds >= SPEED_GATE
    return run.velocities[mask], speeds[mask]


def calibrate_rotation_step1(run: CalibrationRun) -> ExtrinsicRotationResult:
    """Forward-axis alignment from a straight-line run.

    Unit motion directions are sign-folded onto their principal axis (the
    run may contain forward and reverse driving), oriented so the majority
    drives positive. The mean folded velocity defines the forward axis, and
    the minimal rotation taking it onto vehicle +X is returned; that leaves
    roll about X for step 2.

    Raises:
        InsufficientMotion: fewer than MIN_STRAIGHT_SAMPLES above the gate.
        AmbiguousDirection: more than 10% of directions conflict with the axis.
    """
    velocities, speeds = _gated(run)
    if len(velocities) < MIN_STRAIGHT_SAMPLES:
        raise InsufficientMotion(
            f"need {MIN_STRAIGHT_SAMPLES} samples faster than {SPEED_GATE} m/s, "
            f"got {len(velocities)}"
        )
    directions = velocities / speeds[:, None]
    scatter = directions.T @ directions
    eigvals, eigvecs = np.linalg.eigh(scatter)
    axis = eigvecs[:, int(np.argmax(eigvals))]
    dots = directions @ axis
    if float(np.sum(np.sign(dots))) < 0.0:
        axis = -axis
        dots = -dots
    conflicts = np.abs(dots) < CONFLICT_COS
    if conflicts.mean() > CONFLICT_FRACTION:
        raise AmbiguousDirection(
            f"{conflicts.mean():.0%} of motion directions stray more than 60 deg "
            "from the dominant axis; the run is not straight enough"
        )
    signs = np.where(dots >= 0.0, 1.0, -1.0)
    mean_velocity = (signs[:, None] * velocities).mean(axis=0)
    forward = mean_velocity / np.linalg.norm(mean_velocity)
    rotation = rotation_between(forward, np.array([1.0, 0.0, 0.0]))
    aligned = velocities @ rotation.T
    residual = float(np.sqrt(np.mean(aligned[:, 1] ** 2 + aligned[:, 2] ** 2)))
    return ExtrinsicRotationResult(rotation, residual, len(velocities))


def calibrate_rotation_step2(
    run: CalibrationRun, partial: np.ndarray
) -> ExtrinsicRotationResult:
    """Roll about +X from planar driving with turns.

    With the partial rotation applied, planar motion should have zero
    vertical velocity; the remaining roll alpha minimizes
    sum((R_x(alpha) v)_z^2), a sinusoid in 2*alpha solved in closed form.
    The pi-ambiguity of the objective is resolved toward an upright mount
    (|alpha| <= pi/2).

    Raises:
        InsufficientMotion: too few samples above the speed gate.
        InsufficientExcitation: mean-square lateral velocity below threshold.
    """
    velocities, _ = _gated(run)
    if len(velocities) < MIN_STRAIGHT_SAMPLES:
        raise InsufficientMotion(
            f"need {MIN_STRAIGHT_SAMPLES} samples faster than {SPEED_GATE} m/s, "
            f"got {len(velocities)}"
        )
    w = velocities @ partial.T
    lateral_ms = float(np.mean(w[:, 1] ** 2))
    if lateral_ms < LATERAL_EXCITATION_MIN:
        raise InsufficientExcitation(
            f"mean-square lateral velocity {lateral_ms:.4f} (m/s)^2 is below "
            f"{LATERAL_EXCITATION_MIN}; drive with more turning"
        )
    a = float(np.sum(w[:, 1] ** 2))
    b = float(np.sum(w[:, 1] * w[:, 2]))
    c = float(np.sum(w[:, 2] ** 2))
    # J(alpha) = a sin^2 + 2 b sin cos + c cos^2; critical points at
    # 0.5*atan2(-2b, a - c) and a quarter turn away.
    alpha = 0.5 * math.atan2(-2.0 * b, a - c)
    candidates = [alpha, alpha + 0.5 * math.pi]

    def objective(x):
        s, co = math.sin(x), math.cos(x)
        return a * s * s + 2.0 * b * s * co + c * co * co

    best = min(candidates, key=objective)
    # The objective has period pi; pick the branch with the mount upright.
    while best > 0.5 * math.pi:
        best -= math.pi
    while best <= -0.5 * math.pi:
        best += math.pi
    rotation = rot_x(best) @ partial
    aligned = velocities @ rotation.T
    residual = float(np.sqrt(np.mean(aligned[:, 2] ** 2)))
    return ExtrinsicRotationResult(rotation, residual, len(velocities))


def calibrate_sx(run: CalibrationRun, rotation_vs: np.ndarray) -> float:
    """Longitudinal sensor offset from a steady circle with a yaw-rate reference.

    Vehicle-frame lateral velocities v_y are time-aligned (nearest neighbor
    within 50 ms) to reference yaw rates w, and s_x is the argmin of
    sum((v_y / s_x - w)^2), i.e. sum(v_y^2) / sum(v_y * w).

    Raises:
        NoReference: no reference series, or no samples align in time.
        InsufficientMotion: too few aligned samples above the speed gate.
        DegenerateManeuver: yaw rate not steady (CV >= 0.2) or no turning.
    """
    if run.reference_times is None:
        raise NoReference("calibrating s_x needs a reference yaw-rate series")
    speeds = np.linalg.norm(run.velocities, axis=1)
    keep = speeds >= SPEED_GATE
    times = run.times[keep]
    velocities = run.velocities[keep]

    ref_t = run.reference_times
    idx = np.searchsorted(ref_t, times)
    lo = np.clip(idx - 1, 0, len(ref_t) - 1)
    hi = np.clip(idx, 0, len(ref_t) - 1)
    pick = np.where(
        np.abs(ref_t[hi] - times) < np.abs(ref_t[lo] - times), hi, lo
    )
    aligned = np.abs(ref_t[pick] - times) <= ALIGN_TOL
    if not aligned.any():
        raise NoReference("reference yaw-rate series never overlaps the run in time")
    velocities = velocities[aligned]
    yaw = run.reference_yaw_rate[pick[aligned]]
    if len(velocities) < MIN_STRAIGHT_SAMPLES:
        raise InsufficientMotion(
            f"need {MIN_STRAIGHT_SAMPLES} aligned samples, got {len(velocities)}"
        )

    mean_yaw = float(np.mean(yaw))
    if abs(mean_yaw) < 1e-6:
        raise DegenerateManeuver("reference yaw rate averages to zero; drive a circle")
    cv = float(np.std(yaw) / abs(mean_yaw))
    if cv >= YAW_RATE_CV_LIMIT:
        raise DegenerateManeuver(
            f"yaw rate varies too much for a steady circle (CV {cv:.2f} >= {YAW_RATE_CV_LIMIT})"
        )

    lateral = (velocities @ rotation_vs.T)[:, 1]
    denominator = float(np.sum(lateral * yaw))
    if abs(denominator) < 1e-9:
        raise DegenerateManeuver("lateral velocity does not correlate with yaw rate")
    return float(np.sum(lateral**2) / denominator)


def run_from_scans(scans, params) -> CalibrationRun:
    """Estimate per-scan velocities to build a CalibrationRun.

    Scans that fail estimation are skipped; calibration tolerates gaps.
    """
    from .ego_velocity import estimate_velocity_ransac
    from .errors import DopplerOdomError

    times = []
    velocities = []
    for scan in scans:
        try:
            est = estimate_velocity_ransac(scan, params)
        except DopplerOdomError:
            continue
        times.append(scan.timestamp)
        velocities.append(est.velocity)
    return CalibrationRun(
        np.array(times), np.array(velocities).reshape(len(times), 3)
    )
