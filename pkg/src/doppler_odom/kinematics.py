"""Single-track kinematics: angular velocity from one linear velocity.

The vehicle frame sits at the center of the rear axle with X forward, Y along
the axle, Z up. Two instantaneous-center-of-rotation constraints make the
full rotation rate observable from the sensor's linear velocity alone: the
vertical-axis ICR lies on the axle line (x = 0) and the pitch-axis ICR at
x = m, half the wheelbase. Roll rate is taken as zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularGeometry
from .geometry import as_vec3, rigid_point_velocity, validate_rotation

# Lever arms below this (m) leave a rotation rate unobservable.
MIN_LEVER = 1e-3


@dataclass
class VehicleGeometry:
    """Sensor mounting and wheelbase parameters.

    Attributes:
        rotation_vs: maps sensor-frame vectors into the vehicle frame.
        sensor_position: sensor origin in the vehicle frame (m).
        half_wheelbase: distance from the rear axle to the pitch ICR (m).
    """

    rotation_vs: np.ndarray
    sensor_position: np.ndarray
    half_wheelbase: float

    def __post_init__(self):
        self.rotation_vs = validate_rotation(self.rotation_vs, "rotation_vs")
        self.sensor_position = as_vec3(self.sensor_position, "sensor_position")
        self.half_wheelbase = float(self.half_wheelbase)
        self.validate()

    def validate(self):
        """Raise SingularGeometry if any observability invariant is violated."""
        s_x = float(self.sensor_position[0])
        m = self.half_wheelbase
        if m <= 0.0:
            raise SingularGeometry(f"half_wheelbase must be positive, got {m!r}")
        if abs(s_x) <= MIN_LEVER:
            raise SingularGeometry(
                f"|s_x| must exceed {MIN_LEVER} m for yaw rate to be observable, got {s_x!r}"
            )
        if abs(m - s_x) <= MIN_LEVER:
            raise SingularGeometry(
                f"|m - s_x| must exceed {MIN_LEVER} m for pitch rate to be "
                f"observable, got {m - s_x!r}"
            )


@dataclass
class VehicleMotion:
    """Vehicle-frame sensor velocity and body rotation rate with covariances."""

    velocity: np.ndarray
    omega: np.ndarray
    cov_velocity: np.ndarray
    cov_omega: np.ndarray


def to_vehicle_frame(
    velocity: np.ndarray, covariance: np.ndarray, geometry: VehicleGeometry
):
    """Rotate a sensor-frame velocity and its covariance into the vehicle frame."""
    r = geometry.rotation_vs
    v = r @ velocity
    cov = r @ covariance @ r.T
    return v, (cov + cov.T) / 2.0


def angular_velocity(velocity_vehicle: np.ndarray, geometry: VehicleGeometry) -> np.ndarray:
    """Body rotation rate implied by the sensor's vehicle-frame velocity.

    omega = (0, v_z / (m - s_x), v_y / s_x); roll rate is zero by assumption.

    Raises:
        SingularGeometry: if the geometry invariants are violated.
    """
    geometry.validate()
    s_x = float(geometry.sensor_position[0])
    m = geometry.half_wheelbase
    v = velocity_vehicle
    return np.array([0.0, v[2] / (m - s_x), v[1] / s_x])


def propagate_covariance(cov_vehicle: np.ndarray, geometry: VehicleGeometry) -> np.ndarray:
    """Angular-velocity covariance C_w = J C_v J^T for the linear map above.

    J has rows (0,0,0), (0,0,1/(m-s_x)), (0,1/s_x,0), so the roll row and
    column are exactly zero.
    """
    geometry.validate()
    s_x = float(geometry.sensor_position[0])
    m = geometry.half_wheelbase
    j = np.zeros((3, 3))
    j[1, 2] = 1.0 / (m - s_x)
    j[2, 1] = 1.0 / s_x
    cov = j @ cov_vehicle @ j.T
    return (cov + cov.T) / 2.0


def vehicle_origin_velocity(
    velocity_vehicle: np.ndarray, omega: np.ndarray, geometry: VehicleGeometry
) -> np.ndarray:
    """Velocity of the vehicle-frame origin given the sensor's velocity."""
    return rigid_point_velocity(
        velocity_vehicle, omega, np.zeros(3), geometry.sensor_position
    )


def vehicle_motion(
    velocity: np.ndarray, covariance: np.ndarray, geometry: VehicleGeometry
) -> VehicleMotion:
    """Chain frame change, rotation-rate recovery, and covariance propagation."""
    v, cov_v = to_vehicle_frame(velocity, covariance, geometry)
    omega = angular_velocity(v, geometry)
    cov_w = propagate_covariance(cov_v, geometry)
    return VehicleMotion(v, omega, cov_v, cov_w)
