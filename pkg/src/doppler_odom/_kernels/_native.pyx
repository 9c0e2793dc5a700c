# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RANSAC candidate scoring.

Mirrors `_fallback.ransac_select` exactly (same Cramer expressions, same
tie-breaking, same early exit) so both backends pick the same candidate.
The build passes -ffp-contract=off to keep the arithmetic bit-compatible
with the NumPy reference.
"""

from libc.math cimport fabs, INFINITY

import numpy as np

cimport numpy as cnp

DET_EPS = 1e-12


def ransac_select(const double[:, ::1] directions, const double[::1] targets,
                  const cnp.int64_t[:, ::1] samples, double threshold,
                  Py_ssize_t early_exit_count):
    cdef Py_ssize_t n = directions.shape[0]
    cdef Py_ssize_t total = samples.shape[0]
    cdef Py_ssize_t k, j, ia, ib, ic
    cdef double a00, a01, a02, a10, a11, a12, a20, a21, a22
    cdef double b0, b1, b2, m00, m01, m02, det
    cdef double cx, cy, cz, r, sumsq
    cdef double det_eps = DET_EPS
    cdef Py_ssize_t count
    cdef Py_ssize_t best_index = -1
    cdef Py_ssize_t best_count = 0
    cdef double best_sumsq = INFINITY
    cdef double bx = 0.0, by = 0.0, bz = 0.0

    for k in range(total):
        ia = samples[k, 0]
        ib = samples[k, 1]
        ic = samples[k, 2]
        a00 = directions[ia, 0]; a01 = directions[ia, 1]; a02 = directions[ia, 2]
        a10 = directions[ib, 0]; a11 = directions[ib, 1]; a12 = directions[ib, 2]
        a20 = directions[ic, 0]; a21 = directions[ic, 1]; a22 = directions[ic, 2]
        b0 = targets[ia]; b1 = targets[ib]; b2 = targets[ic]

        m00 = a11 * a22 - a12 * a21
        m01 = a10 * a22 - a12 * a20
        m02 = a10 * a21 - a11 * a20
        det = a00 * m00 - a01 * m01 + a02 * m02
        if fabs(det) <= det_eps:
            continue

        cx = (b0 * m00
              - a01 * (b1 * a22 - a12 * b2)
              + a02 * (b1 * a21 - a11 * b2)) / det
        cy = (a00 * (b1 * a22 - a12 * b2)
              - b0 * m01
              + a02 * (a10 * b2 - b1 * a20)) / det
        cz = (a00 * (a11 * b2 - b1 * a21)
              - a01 * (a10 * b2 - b1 * a20)
              + b0 * m02) / det

        count = 0
        sumsq = 0.0
        for j in range(n):
            r = directions[j, 0] * cx + directions[j, 1] * cy \
                + directions[j, 2] * cz - targets[j]
            if fabs(r) <= threshold:
                count += 1
                sumsq += r * r

        if count > best_count or (count == best_count and sumsq < best_sumsq):
            best_index = k
            best_count = count
            best_sumsq = sumsq
            bx = cx; by = cy; bz = cz
        if best_count >= early_exit_count:
            break

    if best_index < 0:
        return -1, np.full(3, np.nan), 0
    return best_index, np.array([bx, by, bz]), int(best_count)
