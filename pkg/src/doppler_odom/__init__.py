"""Doppler-only 3D vehicle odometry.

A single scan from a Doppler-capable range sensor constrains the sensor's
full linear velocity; mounting it off the rear axle of a ground vehicle
makes the rotation rates observable too. This package estimates per-scan
motion with covariances, integrates poses, simulates scenes, calibrates
mounting extrinsics, and evaluates trajectories.
"""

from . import _kernels
from .calibration import (
    CalibrationRun,
    ExtrinsicRotationResult,
    calibrate_rotation_step1,
    calibrate_rotation_step2,
    calibrate_sx,
)
from .config import Config, default_config, load_config, save_config
from .ego_velocity import (
    DopplerPoint,
    LinearSystem,
    RansacParams,
    Scan,
    SensorVelocityEstimate,
    build_system,
    estimate_covariance,
    estimate_velocity_ransac,
    residuals,
    solve_weighted_lsq,
)
from .errors import *  # noqa: F401,F403
from .evaluation import RpeReport, relative_pose_error
from .geometry import (
    Pose,
    SphericalDirection,
    cartesian_to_spherical,
    direction_row,
    direction_rows,
    left_jacobian_so3,
    rigid_point_velocity,
    rotation_angle,
    so3_exp,
)
from .kinematics import (
    VehicleGeometry,
    VehicleMotion,
    angular_velocity,
    propagate_covariance,
    to_vehicle_frame,
    vehicle_motion,
    vehicle_origin_velocity,
)
from .pipeline import (
    GapRecord,
    MotionEstimate,
    OdometryState,
    integrate,
    process_scan,
    run_sequence,
)
from .simulator import (
    DynamicObjectSpec,
    MotionProfile,
    SceneSpec,
    TwistSegment,
    consistent_segment,
    simulate_scan,
    simulate_sequence,
)

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Which RANSAC kernel is active: 'native' (compiled) or 'numpy'."""
    return _kernels.BACKEND
