"""Frames, spherical directions, and SO(3)/SE(3) primitives.

Vectors are float64 numpy arrays of shape (3,), rotation matrices are (3, 3)
and map child-frame coordinates into the parent frame. Rotation matrices are
used everywhere internally; quaternions appear only at file boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError, ZeroRange

# Orthonormality drift tolerated on a rotation matrix before it is rejected
# (validation) or renormalized (integration).
ROTATION_TOL = 1e-9

# Below this rotation angle (rad) closed-form Rodrigues terms are replaced by
# their series expansions.
SMALL_ANGLE = 1e-8


def as_vec3(v, name: str = "vector") -> np.ndarray:
    """Return `v` as a finite float64 array of shape (3,)."""
    out = np.asarray(v, dtype=np.float64)
    if out.shape != (3,):
        raise ValidationError(f"{name} must have shape (3,), got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name} must be finite, got {out}")
    return out


def validate_rotation(rotation: np.ndarray, name: str = "rotation") -> np.ndarray:
    """Check R^T R = I and det R = +1 within ROTATION_TOL."""
    rot = np.asarray(rotation, dtype=np.float64)
    if rot.shape != (3, 3):
        raise ValidationError(f"{name} must have shape (3, 3), got {rot.shape}")
    if not np.all(np.isfinite(rot)):
        raise ValidationError(f"{name} must be finite")
    err = np.abs(rot.T @ rot - np.eye(3)).max()
    if err > ROTATION_TOL:
        raise ValidationError(f"{name} is not orthonormal (max |R^T R - I| = {err:.3e})")
    det = np.linalg.det(rot)
    if abs(det - 1.0) > ROTATION_TOL:
        raise ValidationError(f"{name} must have det +1, got {det!r}")
    return rot


def orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (via SVD)."""
    u, _, vt = np.linalg.svd(rotation)
    rot = u @ vt
    if np.linalg.det(rot) < 0.0:
        rot = (u * np.array([1.0, 1.0, -1.0])) @ vt
    return rot


@dataclass(frozen=True)
class SphericalDirection:
    """Azimuth/elevation (rad) and range (m) of a point seen from the sensor.

    Azimuth is measured in the XY plane from +X toward +Y and lies in
    (-pi, pi]; elevation is measured from the XY plane toward +Z and lies in
    [-pi/2, pi/2]. At the poles the azimuth is fixed to 0.
    """

    azimuth: float
    elevation: float
    range_m: float


def cartesian_to_spherical(point) -> SphericalDirection:
    """Convert a sensor-frame point to a SphericalDirection.

    Raises:
        ZeroRange: if the point coincides with the sensor origin.
    """
    p = as_vec3(point, "point")
    r = float(np.linalg.norm(p))
    if r == 0.0:
        raise ZeroRange("point at the sensor origin has no direction")
    elevation = math.asin(min(1.0, max(-1.0, p[2] / r)))
    if math.hypot(p[0], p[1]) == 0.0:
        azimuth = 0.0
    else:
        azimuth = math.atan2(p[1], p[0])
        if azimuth == -math.pi:
            azimuth = math.pi
    return SphericalDirection(azimuth, elevation, r)


def direction_row(d: SphericalDirection) -> np.ndarray:
    """Unit row [cos(az) cos(el), sin(az) cos(el), sin(el)]."""
    ca, sa = math.cos(d.azimuth), math.sin(d.azimuth)
    ce, se = math.cos(d.elevation), math.sin(d.elevation)
    return np.array([ca * ce, sa * ce, se])


def direction_rows(positions: np.ndarray) -> np.ndarray:
    """Unit direction rows for an (N, 3) array of sensor-frame points.

    Equals stacking direction_row(cartesian_to_spherical(p)) per point: the
    direction row is exactly the unit vector from the sensor to the point.

    Raises:
        ZeroRange: if any point sits at the sensor origin.
    """
    pts = np.asarray(positions, dtype=np.float64)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms == 0.0)[0])
        raise ZeroRange(f"point {bad} is at the sensor origin")
    return pts / norms[:, None]


def skew(v) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def so3_exp(omega, dt: float = 1.0) -> np.ndarray:
    """Rotation matrix for turning at rate `omega` (rad/s) for `dt` seconds.

    Uses the Rodrigues formula, switching to a second-order series below
    SMALL_ANGLE to stay accurate for tiny rotations.
    """
    w = as_vec3(omega, "omega") * dt
    angle = float(np.linalg.norm(w))
    k = skew(w)
    if angle < SMALL_ANGLE:
        return np.eye(3) + k + 0.5 * (k @ k)
    ku = k / angle
    return np.eye(3) + math.sin(angle) * ku + (1.0 - math.cos(angle)) * (ku @ ku)


def left_jacobian_so3(w) -> np.ndarray:
    """Integral of exp(s * skew(w)) for s in [0, 1].

    Maps a body-frame velocity to the exact translation accrued over one unit
    of time under a constant twist.
    """
    w = as_vec3(w, "rotation vector")
    angle = float(np.linalg.norm(w))
    k = skew(w)
    if angle < SMALL_ANGLE:
        return np.eye(3) + 0.5 * k + (k @ k) / 6.0
    a2 = angle * angle
    return (
        np.eye(3)
        + ((1.0 - math.cos(angle)) / a2) * k
        + ((angle - math.sin(angle)) / (a2 * angle)) * (k @ k)
    )


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic angle (rad) of a rotation matrix.

    Uses atan2 of the skew part against the trace; unlike the plain arccos
    form this keeps full precision for angles near 0 and pi.
    """
    c = (float(np.trace(rotation)) - 1.0) / 2.0
    axis_sin = 0.5 * np.array([
        rotation[2, 1] - rotation[1, 2],
        rotation[0, 2] - rotation[2, 0],
        rotation[1, 0] - rotation[0, 1],
    ])
    return math.atan2(float(np.linalg.norm(axis_sin)), c)


def rotation_between(a, b) -> np.ndarray:
    """Minimal rotation taking unit direction `a` onto unit direction `b`."""
    a = as_vec3(a, "a")
    b = as_vec3(b, "b")
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = float(np.linalg.norm(axis))
    c = float(a @ b)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        # Antiparallel: rotate pi about any axis orthogonal to a.
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        axis /= np.linalg.norm(axis)
        return so3_exp(axis * math.pi)
    k = skew(axis)
    return np.eye(3) + k + (k @ k) * ((1.0 - c) / (s * s))


def rot_x(angle: float) -> np.ndarray:
    """Rotation about the +X axis."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rigid_point_velocity(velocity, omega, point, origin) -> np.ndarray:
    """Velocity of `point` on a rigid body.

    The body translates with `velocity` at `origin` and rotates with `omega`;
    all quantities share one frame.
    """
    velocity = as_vec3(velocity, "velocity")
    omega = as_vec3(omega, "omega")
    point = as_vec3(point, "point")
    origin = as_vec3(origin, "origin")
    return velocity + np.cross(omega, point - origin)


@dataclass
class Pose:
    """Rigid transform placing the body in the world at `timestamp`."""

    rotation: np.ndarray
    position: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.rotation = validate_rotation(self.rotation)
        self.position = as_vec3(self.position, "position")
        self.timestamp = float(self.timestamp)

    @classmethod
    def identity(cls, timestamp: float = 0.0) -> "Pose":
        return cls(np.eye(3), np.zeros(3), timestamp)


def quaternion_to_rotation(q) -> np.ndarray:
    """Rotation matrix from quaternion (qx, qy, qz, qw); normalizes first."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValidationError(f"quaternion must have shape (4,), got {q.shape}")
    n = float(np.linalg.norm(q))
    if not np.isfinite(n) or n == 0.0:
        raise ValidationError("quaternion must be finite and nonzero")
    x, y, z, w = q / n
    return np.array(
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
            [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
            [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
        ]
    )


def rotation_to_quaternion(rotation: np.ndarray) -> np.ndarray:
    """Quaternion (qx, qy, qz, qw) with qw >= 0 for a rotation matrix."""
    r = np.asarray(rotation, dtype=np.float64)
    t = float(np.trace(r))
    if t > 0.0:
        s = math.sqrt(t + 1.0) * 2.0
        w = 0.25 * s
        x = (r[2, 1] - r[1, 2]) / s
        y = (r[0, 2] - r[2, 0]) / s
        z = (r[1, 0] - r[0, 1]) / s
    elif r[0, 0] > r[1, 1] and r[0, 0] > r[2, 2]:
        s = math.sqrt(1.0 + r[0, 0] - r[1, 1] - r[2, 2]) * 2.0
        w = (r[2, 1] - r[1, 2]) / s
        x = 0.25 * s
        y = (r[0, 1] + r[1, 0]) / s
        z = (r[0, 2] + r[2, 0]) / s
    elif r[1, 1] > r[2, 2]:
        s = math.sqrt(1.0 + r[1, 1] - r[0, 0] - r[2, 2]) * 2.0
        w = (r[0, 2] - r[2, 0]) / s
        x = (r[0, 1] + r[1, 0]) / s
        y = 0.25 * s
        z = (r[1, 2] + r[2, 1]) / s
    else:
        s = math.sqrt(1.0 + r[2, 2] - r[0, 0] - r[1, 1]) * 2.0
        w = (r[1, 0] - r[0, 1]) / s
        x = (r[0, 2] + r[2, 0]) / s
        y = (r[1, 2] + r[2, 1]) / s
        z = 0.25 * s
    q = np.array([x, y, z, w])
    q /= np.linalg.norm(q)
    if q[3] < 0.0:
        q = -q
    return q
