"""Shared helpers for the test suite."""

import numpy as np
import pytest

from doppler_odom import Scan, VehicleGeometry


def random_rotation(rng):
    """Uniform random rotation matrix from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_directions(rng, n, full_sphere=True):
    """Unit direction vectors, uniformly distributed."""
    v = rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    if not full_sphere:
        v[:, 2] = np.abs(v[:, 2])
    return v


def scan_for_velocity(velocity, directions, rng=None, noise_sigma=0.0,
                      power=None, timestamp=0.0, ranges=None):
    """Build a scan whose Doppler readings match a static scene seen by a
    sensor moving at `velocity` (approaching targets read negative)."""
    velocity = np.asarray(velocity, dtype=float)
    directions = np.asarray(directions, dtype=float)
    n = len(directions)
    if ranges is None:
        ranges = np.full(n, 10.0)
    positions = directions * np.asarray(ranges, dtype=float)[:, None]
    doppler = -(directions @ velocity)
    if noise_sigma > 0.0:
        doppler = doppler + rng.normal(0.0, noise_sigma, n)
    if power is None:
        power = np.ones(n)
    return Scan(timestamp=timestamp, positions=positions,
                doppler=np.asarray(doppler, dtype=float),
                power=np.asarray(power, dtype=float))


@pytest.fixture
def default_geometry():
    return VehicleGeometry(
        rotation_vs=np.eye(3),
        sensor_position=np.array([0.4, 0.0, 0.0]),
        half_wheelbase=0.25,
    )
