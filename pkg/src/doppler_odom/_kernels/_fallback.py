"""Pure-NumPy RANSAC candidate scoring.

This is the reference implementation of the kernel contract; the compiled
module in `_native.pyx` mirrors it operation for operation so both backends
select the same candidate from the same inputs.

Contract
--------
ransac_select(directions, targets, samples, threshold, early_exit_count)

* directions: (N, 3) float64, unit direction rows.
* targets: (N,) float64, negated Doppler readings.
* samples: (M, 3) int64, minimal-sample index triples drawn up front.
* threshold: inlier bound on |row . v - target|.
* early_exit_count: stop after the first candidate reaching this many
  inliers (candidates after it are never evaluated).

Returns (best_index, velocity, inlier_count); best_index is -1 when every
minimal sample was numerically singular. Candidates whose 3x3 sample matrix
has |det| <= DET_EPS are skipped. Ties on inlier count are broken by lower
inlier residual sum of squares, then by earlier candidate index.
"""

from __future__ import annotations

import numpy as np

DET_EPS = 1e-12

# Candidates are scored in blocks so an early exit skips most of the work
# without changing which candidates get evaluated.
_BLOCK = 16


def ransac_select(directions, targets, samples, threshold, early_exit_count):
    n = directions.shape[0]
    a0 = directions[:, 0]
    a1 = directions[:, 1]
    a2 = directions[:, 2]

    best_index = -1
    best_count = 0
    best_sumsq = np.inf
    best_velocity = np.full(3, np.nan)

    total = samples.shape[0]
    for start in range(0, total, _BLOCK):
        idx = samples[start : start + _BLOCK]
        ra = directions[idx[:, 0]]
        rb = directions[idx[:, 1]]
        rc = directions[idx[:, 2]]
        ba = targets[idx[:, 0]]
        bb = targets[idx[:, 1]]
        bc = targets[idx[:, 2]]

        # Cramer's rule on the 3x3 minimal system; kept in this exact shape
        # so the compiled kernel computes bit-identical candidates.
        m00 = rb[:, 1] * rc[:, 2] - rb[:, 2] * rc[:, 1]
        m01 = rb[:, 0] * rc[:, 2] - rb[:, 2] * rc[:, 0]
        m02 = rb[:, 0] * rc[:, 1] - rb[:, 1] * rc[:, 0]
        det = ra[:, 0] * m00 - ra[:, 1] * m01 + ra[:, 2] * m02

        v0 = (
            ba * m00
            - ra[:, 1] * (bb * rc[:, 2] - rb[:, 2] * bc)
            + ra[:, 2] * (bb * rc[:, 1] - rb[:, 1] * bc)
        )
        v1 = (
            ra[:, 0] * (bb * rc[:, 2] - rb[:, 2] * bc)
            - ba * m01
            + ra[:, 2] * (rb[:, 0] * bc - bb * rc[:, 0])
        )
        v2 = (
            ra[:, 0] * (rb[:, 1] * bc - bb * rc[:, 1])
            - ra[:, 1] * (rb[:, 0] * bc - bb * rc[:, 0])
            + ba * m02
        )

        for pos in range(idx.shape[0]):
            d = det[pos]
            if abs(d) <= DET_EPS:
                continue
            cx = v0[pos] / d
            cy = v1[pos] / d
            cz = v2[pos] / d
            resid = a0 * cx + a1 * cy + a2 * cz - targets
            inlier = np.abs(resid) <= threshold
            count = int(inlier.sum())
            sumsq = float((resid[inlier] ** 2).sum())
            if count > best_count or (count == best_count and sumsq < best_sumsq):
                best_index = start + pos
                best_count = count
                best_sumsq = sumsq
                best_velocity = np.array([cx, cy, cz])
            if best_count >= early_exit_count:
                return best_index, best_velocity, best_count

    return best_index, best_velocity, best_count
