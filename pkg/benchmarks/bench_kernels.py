"""Benchmark the RANSAC selection kernel across backends.

Runs the candidate-scoring kernel on synthetic scans of several sizes with
both the compiled backend (when built) and the NumPy fallback, checks they
agree, and reports per-call timings plus the end-to-end per-scan cost of
the full motion estimate.

Usage:
    python benchmarks/bench_kernels.py [--sizes 100 300 1000 3000]
        [--samples 100] [--repeats 30]
"""

import argparse
import statistics
import time

import numpy as np

from doppler_odom import RansacParams, Scan, VehicleGeometry, build_system, process_scan
from doppler_odom._kernels import BACKEND, available_backends
from doppler_odom._kernels import _fallback
from doppler_odom.ego_velocity import EARLY_EXIT_RATIO, _draw_triples


def make_case(rng, n, n_samples, outlier_frac=0.3, sigma=0.05):
    """Synthetic kernel inputs shaped like a real scan's."""
    d = rng.normal(0.0, 1.0, (n, 3))
    d /= np.linalg.norm(d, axis=1)[:, None]
    v_true = np.array([2.0, -0.4, 0.15])
    doppler = -(d @ v_true) + rng.normal(0.0, sigma, n)
    n_out = int(outlier_frac * n)
    doppler[:n_out] += rng.uniform(2.0, 4.0, n_out) * rng.choice([-1.0, 1.0], n_out)
    scan = Scan(1.0, d * 15.0, doppler, rng.uniform(0.5, 2.0, n))
    system = build_system(scan)
    samples = _draw_triples(rng, n_samples, n)
    return scan, system, samples


def time_call(fn, repeats):
    best = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best.append(time.perf_counter() - start)
    return statistics.median(best) * 1e3


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 1000, 3000])
    parser.add_argument("--samples", type=int, default=100, help="minimal samples per scan")
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    backends = available_backends()
    kernels = {"numpy": _fallback.ransac_select}
    if backends["native"]:
        from doppler_odom._kernels import _native

        kernels["native"] = _native.ransac_select
    print(f"selected backend: {BACKEND}; available: "
          + ", ".join(k for k, ok in backends.items() if ok))

    threshold = 0.2
    rng = np.random.default_rng(7)
    header = f"{'points':>7} " + "".join(f"{k + ' (ms)':>14}" for k in kernels)
    if len(kernels) == 2:
        header += f"{'speedup':>10}"
    print(header)

    for n in args.sizes:
        scan, system, samples = make_case(rng, n, args.samples)
        early = int(np.ceil(EARLY_EXIT_RATIO * n))
        results = {}
        times = {}
        for name, kernel in kernels.items():
            call = lambda: kernel(system.directions, system.targets, samples, threshold, early)
            results[name] = call()
            times[name] = time_call(call, args.repeats)
        if len(results) == 2:
            idx_np, v_np, count_np = results["numpy"]
            idx_nat, v_nat, count_nat = results["native"]
            if idx_np != idx_nat or count_np != count_nat or not np.array_equal(v_np, v_nat):
                raise AssertionError(f"backend disagreement at n={n}")
        row = f"{n:>7} " + "".join(f"{times[k]:>14.3f}" for k in kernels)
        if len(kernels) == 2:
            row += f"{times['numpy'] / times['native']:>9.1f}x"
        print(row)

    geometry = VehicleGeometry(np.eye(3), [0.4, 0.0, 0.0], 0.25)
    params = RansacParams(max_iterations=args.samples)
    scan, _, _ = make_case(rng, 1000, args.samples)
    process_scan(scan, geometry, params)  # warm-up
    full = time_call(lambda: process_scan(scan, geometry, params), args.repeats)
    print(f"\nfull motion estimate, 1000 points, {BACKEND} backend: {full:.3f} ms/scan")


if __name__ == "__main__":
    main()
