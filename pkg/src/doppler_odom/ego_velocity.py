"""Sensor ego-velocity from the Doppler readings of a single scan.

Each point contributes one linear equation: the negated Doppler reading
equals the unit direction row dotted with the sensor velocity. Static world
points satisfy it; moving objects do not and are rejected by RANSAC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateGeometry,
    EmptyScan,
    InsufficientPoints,
    NoConsensus,
    ValidationError,
)
from .geometry import as_vec3, direction_rows

# cond(A^T W A) above this means the directions are too close to a plane
# through the sensor to pin down all three velocity components. Directions
# within about 0.1 deg of a common plane land near 1.6e5 regardless of the
# point count, so 1e5 cleanly separates that boundary.
CONDITION_LIMIT = 1e5

# Stop scoring RANSAC candidates once one explains this fraction of the scan.
EARLY_EXIT_RATIO = 0.95


@dataclass
class DopplerPoint:
    """One return: sensor-frame position (m), radial speed (m/s), power.

    Doppler sign convention: approaching targets are negative.
    """

    position: np.ndarray
    doppler: float
    power: float

    def __post_init__(self):
        self.position = as_vec3(self.position, "position")
        self.doppler = float(self.doppler)
        self.power = float(self.power)


@dataclass
class Scan:
    """All returns sharing one timestamp, stored as parallel arrays."""

    timestamp: float
    positions: np.ndarray
    doppler: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        self.timestamp = float(self.timestamp)
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        self.doppler = np.ascontiguousarray(self.doppler, dtype=np.float64)
        self.power = np.ascontiguousarray(self.power, dtype=np.float64)
        n = self.positions.shape[0]
        if self.positions.ndim != 2 or self.positions.shape[1] != 3:
            raise ValidationError(f"positions must be (N, 3), got {self.positions.shape}")
        if self.doppler.shape != (n,) or self.power.shape != (n,):
            raise ValidationError("doppler and power must match the point count")
        if not (
            np.all(np.isfinite(self.positions))
            and np.all(np.isfinite(self.doppler))
            and np.all(np.isfinite(self.power))
        ):
            raise ValidationError("scan fields must be finite")
        if np.any(self.power < 0.0):
            raise ValidationError("power must be non-negative")
        if n and np.any(np.linalg.norm(self.positions, axis=1) == 0.0):
            raise ValidationError("scan contains a point at the sensor origin")

    def __len__(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def from_points(cls, timestamp: float, points) -> "Scan":
        pts = list(points)
        return cls(
            timestamp,
            np.array([p.position for p in pts]).reshape(len(pts), 3),
            np.array([p.doppler for p in pts]),
            np.array([p.power for p in pts]),
        )

    def point(self, i: int) -> DopplerPoint:
        return DopplerPoint(self.positions[i].copy(), self.doppler[i], self.power[i])


@dataclass
class LinearSystem:
    """Stacked per-point equations: directions @ v = targets, weighted."""

    directions: np.ndarray
    targets: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class RansacParams:
    """Knobs for the per-scan robust fit."""

    max_iterations: int = 100
    inlier_threshold: float = 0.2
    min_inliers: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not (self.inlier_threshold > 0.0 and math.isfinite(self.inlier_threshold)):
            raise ValidationError("inlier_threshold must be positive and finite")
        if self.min_inliers < 3:
            raise ValidationError("min_inliers must be >= 3")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


@dataclass
class SensorVelocityEstimate:
    """Sensor-frame velocity with its covariance and the static/dynamic split."""

    velocity: np.ndarray
    covariance: np.ndarray
    inlier_mask: np.ndarray
    residual_rms: float

    @property
    def n_inliers(self) -> int:
        return int(self.inlier_mask.sum())


def build_system(scan: Scan) -> LinearSystem:
    """Assemble the weighted linear system for one scan.

    Row i is the unit direction to point i, the target is the negated
    Doppler reading, and weights are signal powers normalized to mean 1.

    Raises:
        EmptyScan: if the scan has no points.
        ZeroRange: if a point sits at the sensor origin.
    """
    if len(scan) == 0:
        raise EmptyScan("cannot build a system from an empty scan")
    rows = direction_rows(scan.positions)
    targets = -scan.doppler
    mean_power = scan.power.mean()
    # All-zero power leaves zero weights; the solve will then reject the
    # system as degenerate rather than divide by zero here.
    weights = scan.power / mean_power if mean_power > 0.0 else np.zeros(len(scan))
    return LinearSystem(np.ascontiguousarray(rows), targets, weights)


def solve_weighted_lsq(system: LinearSystem) -> np.ndarray:
    """Weighted least-squares velocity for a linear system.

    Solves via a QR-based least-squares on the sqrt-weight scaled rows
    rather than forming an explicit inverse.

    Raises:
        InsufficientPoints: fewer than 3 rows.
        DegenerateGeometry: cond(A^T W A) exceeds CONDITION_LIMIT.
    """
    n = system.targets.shape[0]
    if n < 3:
        raise InsufficientPoints(f"need at least 3 points to solve, got {n}")
    ata = system.directions.T @ (system.directions * system.weights[:, None])
    cond = np.linalg.cond(ata)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateGeometry(
            f"directions are near-coplanar (cond {cond:.3e} > {CONDITION_LIMIT:.0e}); "
            "velocity is unobservable along the plane normal"
        )
    sw = np.sqrt(system.weights)
    solution, _, _, _ = np.linalg.lstsq(
        system.directions * sw[:, None], system.targets * sw, rcond=None
    )
    return solution


def residuals(system: LinearSystem, velocity: np.ndarray) -> np.ndarray:
    """Per-point radial residuals: directions @ velocity - targets."""
    d = system.directions
    # Written elementwise to match the kernel arithmetic exactly, so inlier
    # masks recomputed here agree with the counts the kernels saw.
    return d[:, 0] * velocity[0] + d[:, 1] * velocity[1] + d[:, 2] * velocity[2] - system.targets


def estimate_covariance(
    system: LinearSystem, velocity: np.ndarray, inlier_mask: np.ndarray
) -> np.ndarray:
    """Velocity covariance from inlier residual spread.

    C_v = (rho^T W rho / (N_in - 3)) * (A^T W A)^-1 over inlier rows only.

    Raises:
        InsufficientPoints: fewer than 4 inliers.
        DegenerateGeometry: inlier directions near-coplanar.
    """
    mask = np.asarray(inlier_mask, dtype=bool)
    n_in = int(mask.sum())
    if n_in <= 3:
        raise InsufficientPoints(f"covariance needs >= 4 inliers, got {n_in}")
    a = system.directions[mask]
    w = system.weights[mask]
    rho = residuals(LinearSystem(a, system.targets[mask], w), velocity)
    ata = a.T @ (a * w[:, None])
    cond = np.linalg.cond(ata)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise DegenerateGeometry(
            f"inlier directions are near-coplanar (cond {cond:.3e}); "
            "covariance is unbounded along the plane normal"
        )
    scale = float(rho @ (w * rho)) / (n_in - 3)
    cov = scale * np.linalg.inv(ata)
    return (cov + cov.T) / 2.0


def _draw_triples(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Draw `count` index triples with distinct members, vectorized."""
    u = rng.random((count, 3))
    i0 = (u[:, 0] * n).astype(np.int64)
    i1 = (u[:, 1] * (n - 1)).astype(np.int64)
    i1 += i1 >= i0
    i2 = (u[:, 2] * (n - 2)).astype(np.int64)
    lo = np.minimum(i0, i1)
    hi = np.maximum(i0, i1)
    i2 += i2 >= lo
    i2 += i2 >= hi
    return np.ascontiguousarray(np.stack([i0, i1, i2], axis=1))


def estimate_velocity_ransac(scan: Scan, params: RansacParams) -> SensorVelocityEstimate:
    """Robust sensor-velocity estimate for one scan.

    Minimal samples of 3 distinct points propose candidate velocities via an
    exact (unweighted) solve; the candidate keeping the most points within
    `inlier_threshold` wins, with ties broken by lower inlier residual RMS.
    The winner is refined by a weighted least-squares fit over its inliers.
    Points outside the threshold are flagged dynamic in `inlier_mask`.

    All sample indices are drawn from the seeded generator up front, so the
    result is bit-for-bit reproducible for a given (scan, params).

    Raises:
        InsufficientPoints: scan smaller than max(3, min_inliers).
        DegenerateGeometry: directions do not span 3D (no usable minimal
            sample, or the inlier refit is ill-conditioned).
        NoConsensus: best candidate supported by fewer than min_inliers.
    """
    n = len(scan)
    if n < max(3, params.min_inliers):
        raise InsufficientPoints(
            f"RANSAC needs at least {max(3, params.min_inliers)} points, got {n}"
        )
    system = build_system(scan)
    rng = np.random.default_rng(params.seed)
    samples = _draw_triples(rng, params.max_iterations, n)
    early_exit_count = int(math.ceil(EARLY_EXIT_RATIO * n))

    best_index, candidate, _ = _kernels.ransac_select(
        system.directions, system.targets, samples, params.inlier_threshold, early_exit_count
    )
    if best_index < 0:
        raise DegenerateGeometry(
            "every minimal sample was singular; scan directions do not span 3D"
        )

    rho = residuals(system, candidate)
    inlier_mask = np.abs(rho) <= params.inlier_threshold
    n_in = int(inlier_mask.sum())
    if n_in < params.min_inliers:
        raise NoConsensus(
            f"best candidate explains {n_in} points, below min_inliers={params.min_inliers}"
        )

    subset = LinearSystem(
        system.directions[inlier_mask],
        system.targets[inlier_mask],
        system.weights[inlier_mask],
    )
    velocity = solve_weighted_lsq(subset)
    covariance = estimate_covariance(system, velocity, inlier_mask)
    rho_in = residuals(subset, velocity)
    rms = float(np.sqrt(np.mean(rho_in**2)))
    return SensorVelocityEstimate(velocity, covariance, inlier_mask, rms)
