# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernels.

Both routines consume pre-drawn uniforms ``U[r, t]``; column 0 picks the
initial state from ``init_cum`` and column ``t`` the transition out of the
state at time ``t - 1``. A uniform ``u`` selects the number of cumulative
entries ``<= u`` (capped at ``size - 1``), the same rule as the numpy path.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline Py_ssize_t _pick(const double[::1] cum, double u) noexcept nogil:
    cdef Py_ssize_t j = 0
    cdef Py_ssize_t last = cum.shape[0] - 1
    while j < last and cum[j] <= u:
        j += 1
    return j


cdef inline Py_ssize_t _pick_row(const double[:, ::1] cum, Py_ssize_t z, double u) noexcept nogil:
    cdef Py_ssize_t j = 0
    cdef Py_ssize_t last = cum.shape[1] - 1
    while j < last and cum[z, j] <= u:
        j += 1
    return j


def simulate_sums(const double[:, ::1] cum, const double[::1] init_cum,
                  const double[:, ::1] U, const double[:, ::1] F):
    """Per-replication sums ``sum_t F[Z_t, m]``, shape ``(reps, m)``."""
    cdef Py_ssize_t reps = U.shape[0], n = U.shape[1], m = F.shape[1]
    cdef Py_ssize_t r, t, c, z
    out_arr = np.zeros((reps, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    with nogil:
        for r in range(reps):
            z = _pick(init_cum, U[r, 0])
            for c in range(m):
                out[r, c] += F[z, c]
            for t in range(1, n):
                z = _pick_row(cum, z, U[r, t])
                for c in range(m):
                    out[r, c] += F[z, c]
    return out_arr


def simulate_states(const double[:, ::1] cum, const double[::1] init_cum,
                    const double[:, ::1] U):
    """State trajectories, shape ``(reps, n)``."""
    cdef Py_ssize_t reps = U.shape[0], n = U.shape[1]
    cdef Py_ssize_t r, t, z
    out_arr = np.empty((reps, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] out = out_arr
    with nogil:
        for r in range(reps):
            z = _pick(init_cum, U[r, 0])
            out[r, 0] = z
            for t in range(1, n):
                z = _pick_row(cum, z, U[r, t])
                out[r, t] = z
    return out_arr
