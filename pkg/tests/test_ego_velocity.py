import numpy as np
import pytest

from doppler_odom import (
    DegenerateGeometry,
    EmptyScan,
    InsufficientPoints,
    NoConsensus,
    RansacParams,
    Scan,
    ValidationError,
    build_system,
    estimate_covariance,
    estimate_velocity_ransac,
    residuals,
    solve_weighted_lsq,
)
from doppler_odom.ego_velocity import CONDITION_LIMIT

from conftest import random_directions, scan_for_velocity


def coplanar_scan(n=60, tilt=0.0, rng=None, velocity=(1.0, 0.0, 0.0)):
    """Scan whose directions all lie within `tilt` radians of the XY plane."""
    if rng is None:
        rng = np.random.default_rng(0)
    az = rng.uniform(-np.pi, np.pi, n)
    el = rng.uniform(-tilt, tilt, n) if tilt > 0 else np.zeros(n)
    d = np.column_stack([np.cos(az) * np.cos(el), np.sin(az) * np.cos(el),
                         np.sin(el)])
    return scan_for_velocity(velocity, d)


# ---------------------------------------------------------------- Scan type

def test_scan_validation():
    with pytest.raises(ValidationError):
        Scan(0.0, np.zeros((2, 2)), np.zeros(2), np.ones(2))
    with pytest.raises(ValidationError):
        Scan(0.0, np.ones((2, 3)), np.zeros(3), np.ones(2))
    with pytest.raises(ValidationError):
        Scan(0.0, np.array([[1.0, 0, 0], [np.nan, 0, 0]]), np.zeros(2), np.ones(2))
    with pytest.raises(ValidationError):
        Scan(0.0, np.ones((2, 3)), np.zeros(2), np.array([1.0, -0.5]))
    with pytest.raises(ValidationError):
        Scan(0.0, np.array([[1.0, 0, 0], [0, 0, 0]]), np.zeros(2), np.ones(2))


def test_scan_from_points_round_trip():
    from doppler_odom import DopplerPoint
    pts = [DopplerPoint(np.array([1.0, 2.0, 3.0]), -0.5, 1.2),
           DopplerPoint(np.array([4.0, 5.0, 6.0]), 0.25, 0.8)]
    scan = Scan.from_points(0.5, pts)
    assert len(scan) == 2
    back = scan.point(1)
    np.testing.assert_array_equal(back.position, [4.0, 5.0, 6.0])
    assert back.doppler == 0.25 and back.power == 0.8


# ---------------------------------------------------------------- system build

def test_build_system_three_four_five():
    scan = Scan(0.0, np.array([[0.0, 3.0, 4.0]]), np.array([0.5]), np.array([2.0]))
    sys = build_system(scan)
    np.testing.assert_allclose(sys.directions[0], [0.0, 0.6, 0.8], atol=1e-15)
    assert sys.targets[0] == -0.5
    assert sys.weights[0] == 1.0  # single point normalizes to mean 1


def test_build_system_weight_normalization():
    rng = np.random.default_rng(5)
    scan = scan_for_velocity([1.0, 0.0, 0.0], random_directions(rng, 40),
                             power=rng.uniform(0.1, 5.0, 40))
    sys = build_system(scan)
    assert np.mean(sys.weights) == pytest.approx(1.0, abs=1e-12)


def test_build_system_empty_scan():
    scan = Scan(0.0, np.zeros((0, 3)), np.zeros(0), np.zeros(0))
    with pytest.raises(EmptyScan):
        build_system(scan)


# ---------------------------------------------------------------- weighted lsq

def test_solve_all_zero_doppler():
    rng = np.random.default_rng(7)
    scan = scan_for_velocity([0.0, 0.0, 0.0], random_directions(rng, 30))
    v = solve_weighted_lsq(build_system(scan))
    np.testing.assert_array_equal(v, [0.0, 0.0, 0.0])


def test_solve_recovers_known_velocity():
    rng = np.random.default_rng(8)
    scan = scan_for_velocity([1.3, -0.4, 0.2], random_directions(rng, 100),
                             power=rng.uniform(0.5, 2.0, 100))
    v = solve_weighted_lsq(build_system(scan))
    np.testing.assert_allclose(v, [1.3, -0.4, 0.2], atol=1e-10)


def test_solve_weighting_changes_solution():
    # two populations with conflicting dopplers: weights must matter
    d = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0], [1.0, 0, 0]])
    pos = d * 10.0
    doppler = np.array([-1.0, 0.0, 0.0, -3.0])
    heavy = Scan(0.0, pos, doppler, np.array([1.0, 1.0, 1.0, 9.0]))
    light = Scan(0.0, pos, doppler, np.array([9.0, 1.0, 1.0, 1.0]))
    vx_heavy = solve_weighted_lsq(build_system(heavy))[0]
    vx_light = solve_weighted_lsq(build_system(light))[0]
    assert vx_heavy == pytest.approx(2.8, abs=1e-12)  # (1*1 + 9*3) / 10
    assert vx_light == pytest.approx(1.2, abs=1e-12)  # (9*1 + 1*3) / 10


def test_solve_insufficient_points():
    scan = Scan(0.0, np.array([[1.0, 0, 0], [0, 1.0, 0]]), np.zeros(2), np.ones(2))
    with pytest.raises(InsufficientPoints):
        solve_weighted_lsq(build_system(scan))


def test_solve_exactly_coplanar_degenerate():
    with pytest.raises(DegenerateGeometry):
        solve_weighted_lsq(build_system(coplanar_scan(tilt=0.0)))


def test_solve_near_coplanar_degenerate():
    # directions within 0.1 degree of a plane must be refused
    rng = np.random.default_rng(9)
    tilt = np.deg2rad(0.1)
    with pytest.raises(DegenerateGeometry):
        solve_weighted_lsq(build_system(coplanar_scan(tilt=tilt, rng=rng)))


def test_solve_well_spread_passes_condition_gate():
    rng = np.random.default_rng(10)
    scan = scan_for_velocity([0.5, 0.5, 0.5], random_directions(rng, 50))
    sys = build_system(scan)
    ata = sys.directions.T @ (sys.weights[:, None] * sys.directions)
    assert np.linalg.cond(ata) < CONDITION_LIMIT
    solve_weighted_lsq(sys)  # should not raise


# ---------------------------------------------------------------- residuals

def test_residuals_exact_solution_zero():
    rng = np.random.default_rng(11)
    scan = scan_for_velocity([0.7, -0.1, 0.3], random_directions(rng, 40))
    sys = build_system(scan)
    rho = residuals(sys, np.array([0.7, -0.1, 0.3]))
    np.testing.assert_allclose(rho, 0.0, atol=1e-14)


def test_residuals_zero_velocity_is_minus_targets():
    rng = np.random.default_rng(12)
    scan = scan_for_velocity([1.0, 2.0, -0.5], random_directions(rng, 25))
    sys = build_system(scan)
    np.testing.assert_array_equal(residuals(sys, np.zeros(3)), -sys.targets)


def test_residuals_linear_in_velocity():
    rng = np.random.default_rng(13)
    scan = scan_for_velocity([0.3, 0.3, 0.3], random_directions(rng, 30))
    sys = build_system(scan)
    v = rng.normal(size=3)
    delta = rng.normal(size=3)
    change = residuals(sys, v + delta) - residuals(sys, v)
    np.testing.assert_allclose(change, sys.directions @ delta, atol=1e-12)


def test_weighted_normal_equations_stationarity():
    # at the weighted solution, A^T W rho = 0
    rng = np.random.default_rng(14)
    scan = scan_for_velocity([1.1, 0.4, -0.2], random_directions(rng, 60),
                             rng=rng, noise_sigma=0.1,
                             power=rng.uniform(0.2, 3.0, 60))
    sys = build_system(scan)
    v = solve_weighted_lsq(sys)
    grad = sys.directions.T @ (sys.weights * residuals(sys, v))
    np.testing.assert_allclose(grad, 0.0, atol=1e-10)


# ---------------------------------------------------------------- covariance

def test_covariance_perfect_fit_is_zero():
    rng = np.random.default_rng(15)
    scan = scan_for_velocity([1.0, 0.5, 0.2], random_directions(rng, 20))
    sys = build_system(scan)
    v = solve_weighted_lsq(sys)
    cov = estimate_covariance(sys, v, np.ones(20, dtype=bool))
    np.testing.assert_allclose(cov, np.zeros((3, 3)), atol=1e-22)


def test_covariance_orthogonal_axes_closed_form():
    # 3 points on +X, 2 on +Y, 2 on +Z with per-axis zero-mean residuals:
    # C = (sum e^2 / (n-3)) * diag(1/3, 1/2, 1/2)
    d = np.array([[1, 0, 0], [1, 0, 0], [1, 0, 0],
                  [0, 1, 0], [0, 1, 0], [0, 0, 1], [0, 0, 1]], dtype=float)
    e = np.array([0.03, -0.01, -0.02, 0.05, -0.05, -0.04, 0.04])
    v_true = np.array([1.0, 2.0, 3.0])
    doppler = -(d @ v_true + e)
    scan = Scan(0.0, d * 10.0, doppler, np.ones(7))
    sys = build_system(scan)
    v = solve_weighted_lsq(sys)
    np.testing.assert_allclose(v, v_true, atol=1e-12)
    cov = estimate_covariance(sys, v, np.ones(7, dtype=bool))
    expected = (e @ e / 4.0) * np.diag([1 / 3, 1 / 2, 1 / 2])
    np.testing.assert_allclose(cov, expected, atol=1e-15)
    np.testing.assert_allclose(np.diag(cov), [0.0008, 0.0012, 0.0012], atol=1e-15)


def test_covariance_needs_four_inliers():
    rng = np.random.default_rng(16)
    scan = scan_for_velocity([1.0, 0.0, 0.0], random_directions(rng, 10))
    sys = build_system(scan)
    mask = np.zeros(10, dtype=bool)
    mask[:3] = True
    with pytest.raises(InsufficientPoints):
        estimate_covariance(sys, np.array([1.0, 0.0, 0.0]), mask)


def test_covariance_monte_carlo_consistency():
    """Empirical spread of the estimator matches the reported covariance."""
    rng = np.random.default_rng(17)
    d = random_directions(rng, 120)
    v_true = np.array([1.0, -0.3, 0.15])
    sigma = 0.05
    trials = 600
    estimates = np.empty((trials, 3))
    covs = np.empty((trials, 3, 3))
    for t in range(trials):
        scan = scan_for_velocity(v_true, d, rng=rng, noise_sigma=sigma)
        sys = build_system(scan)
        v = solve_weighted_lsq(sys)
        estimates[t] = v
        covs[t] = estimate_covariance(sys, v, np.ones(len(d), dtype=bool))
    emp = np.cov(estimates.T)
    mean_cov = covs.mean(axis=0)
    np.testing.assert_allclose(np.diag(emp), np.diag(mean_cov), rtol=0.30)


# ---------------------------------------------------------------- RANSAC

def test_ransac_all_consistent():
    rng = np.random.default_rng(18)
    scan = scan_for_velocity([1.0, 0.0, 0.0], random_directions(rng, 50))
    est = estimate_velocity_ransac(scan, RansacParams())
    np.testing.assert_allclose(est.velocity, [1.0, 0.0, 0.0], atol=1e-12)
    assert est.inlier_mask.all()
    assert est.n_inliers == 50
    assert est.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_ransac_excludes_constructed_outliers():
    # 80 static points seen at v=(2,0,0); 20 points carry an extra radial
    # offset of 2 m/s, noiseless, threshold 0.1
    rng = np.random.default_rng(19)
    d = random_directions(rng, 100)
    v = np.array([2.0, 0.0, 0.0])
    doppler = -(d @ v)
    doppler[80:] += 2.0
    scan = Scan(0.0, d * 10.0, doppler, np.ones(100))
    est = estimate_velocity_ransac(
        scan, RansacParams(inlier_threshold=0.1, seed=1))
    expected = np.ones(100, dtype=bool)
    expected[80:] = False
    np.testing.assert_array_equal(est.inlier_mask, expected)
    assert np.abs(est.velocity - v).max() < 1e-9


def test_ransac_no_consensus():
    # incompatible doppler per point; min_inliers cannot be met
    rng = np.random.default_rng(20)
    d = random_directions(rng, 30)
    doppler = rng.uniform(-50.0, 50.0, 30)
    scan = Scan(0.0, d * 10.0, doppler, np.ones(30))
    with pytest.raises(NoConsensus):
        estimate_velocity_ransac(
            scan, RansacParams(inlier_threshold=0.01, min_inliers=20))


def test_ransac_coplanar_raises_degenerate():
    with pytest.raises(DegenerateGeometry):
        estimate_velocity_ransac(coplanar_scan(), RansacParams())
    rng = np.random.default_rng(21)
    with pytest.raises(DegenerateGeometry):
        estimate_velocity_ransac(
            coplanar_scan(tilt=np.deg2rad(0.1), rng=rng), RansacParams())


def test_ransac_insufficient_points():
    scan = Scan(0.0, np.array([[1.0, 0, 0], [0, 1.0, 0]]), np.zeros(2), np.ones(2))
    with pytest.raises(InsufficientPoints):
        estimate_velocity_ransac(scan, RansacParams())


def test_ransac_seed_determinism():
    rng = np.random.default_rng(22)
    d = random_directions(rng, 200)
    v = np.array([1.5, -0.5, 0.3])
    doppler = -(d @ v) + rng.normal(0, 0.05, 200)
    doppler[:50] += rng.uniform(2, 4, 50) * rng.choice([-1.0, 1.0], 50)
    scan = Scan(0.0, d * 10.0, doppler, np.ones(200))
    a = estimate_velocity_ransac(scan, RansacParams(seed=7))
    b = estimate_velocity_ransac(scan, RansacParams(seed=7))
    np.testing.assert_array_equal(a.velocity, b.velocity)
    np.testing.assert_array_equal(a.inlier_mask, b.inlier_mask)
    assert a.residual_rms == b.residual_rms


def test_ransac_zero_power_points_still_counted():
    rng = np.random.default_rng(23)
    d = random_directions(rng, 40)
    v = np.array([1.0, 0.2, -0.1])
    power = np.ones(40)
    power[:10] = 0.0
    scan = scan_for_velocity(v, d, power=power)
    est = estimate_velocity_ransac(scan, RansacParams())
    assert est.inlier_mask.all()
    np.testing.assert_allclose(est.velocity, v, atol=1e-10)


def test_ransac_params_validation():
    with pytest.raises(ValidationError):
        RansacParams(max_iterations=0)
    with pytest.raises(ValidationError):
        RansacParams(inlier_threshold=0.0)
    with pytest.raises(ValidationError):
        RansacParams(min_inliers=2)
    with pytest.raises(ValidationError):
        RansacParams(seed=-1)


def test_ransac_refit_is_weighted():
    # outlier-free scan with uneven powers: final velocity must equal the
    # weighted solve over all inliers
    rng = np.random.default_rng(24)
    d = random_directions(rng, 80)
    power = rng.uniform(0.1, 4.0, 80)
    scan = scan_for_velocity([0.8, -0.6, 0.25], d, rng=rng, noise_sigma=0.02,
                             power=power)
    est = estimate_velocity_ransac(scan, RansacParams(inlier_threshold=0.5))
    assert est.inlier_mask.all()
    direct = solve_weighted_lsq(build_system(scan))
    np.testing.assert_array_equal(est.velocity, direct)
