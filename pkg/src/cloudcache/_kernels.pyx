# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo hot-path kernels.

Contracts match cloudcache._kernels_py.  serve_powers is bit-identical to
the fallback (same scan order and comparisons); the distance and
interference pipelines use libm transcendentals and may differ from the
vectorized numpy fallback in the last floating-point digits.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, pow, sqrt

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925287


def serve_powers(
    cnp.float64_t[::1] power,
    cnp.float64_t[::1] dist,
    cnp.int64_t[::1] offsets,
    cnp.int64_t[:, ::1] k_mat,
):
    cdef Py_ssize_t trials = offsets.shape[0] - 1
    cdef Py_ssize_t files = k_mat.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] closest = np.zeros((trials, files))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] best = np.zeros((trials, files))
    cdef cnp.float64_t[:, ::1] closest_v = closest
    cdef cnp.float64_t[:, ::1] best_v = best

    cdef Py_ssize_t max_seg = 0, t, a, b, n, j, i, k
    for t in range(trials):
        n = offsets[t + 1] - offsets[t]
        if n > max_seg:
            max_seg = n
    if max_seg == 0:
        return closest, best

    cdef cnp.ndarray[cnp.float64_t, ndim=1] cbuf = np.empty(max_seg)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] bbuf = np.empty(max_seg)
    cdef cnp.float64_t[::1] closest_prefix = cbuf
    cdef cnp.float64_t[::1] best_prefix = bbuf
    cdef double d_min, p_at_min, p_max

    for t in range(trials):
        a = offsets[t]
        b = offsets[t + 1]
        n = b - a
        if n == 0:
            continue
        d_min = dist[a]
        p_at_min = power[a]
        p_max = power[a]
        closest_prefix[0] = p_at_min
        best_prefix[0] = p_max
        for j in range(1, n):
            if dist[a + j] < d_min:
                d_min = dist[a + j]
                p_at_min = power[a + j]
            if power[a + j] > p_max:
                p_max = power[a + j]
            closest_prefix[j] = p_at_min
            best_prefix[j] = p_max
        for i in range(files):
            k = k_mat[t, i]
            if k > 0:
                closest_v[t, i] = closest_prefix[k - 1]
                best_v[t, i] = best_prefix[k - 1]
    return closest, best


def disk_distances(
    cnp.float64_t[::1] centers,
    cnp.float64_t[::1] u1,
    cnp.float64_t[::1] u2,
    double D,
):
    cdef Py_ssize_t n = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n)
    cdef cnp.float64_t[::1] out_v = out
    cdef Py_ssize_t i
    cdef double r, c
    for i in range(n):
        r = D * sqrt(u1[i])
        c = centers[i]
        out_v[i] = sqrt(c * c + r * r + 2.0 * c * r * cos(TWO_PI * u2[i]))
    return out


def cloud_interference(
    cnp.float64_t[::1] x,
    cnp.int64_t[::1] clouds_per_trial,
    cnp.int64_t[::1] active,
    cnp.float64_t[::1] u1,
    cnp.float64_t[::1] u2,
    cnp.float64_t[::1] fades,
    double P,
    double D,
    double alpha_o,
):
    cdef Py_ssize_t trials = clouds_per_trial.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(trials)
    cdef cnp.float64_t[::1] out_v = out
    cdef Py_ssize_t t, c, k, cloud = 0, node = 0
    cdef double acc, xc, r, y2, half_exp = -0.5 * alpha_o
    cdef bint cubic = alpha_o == 3.0
    for t in range(trials):
        acc = 0.0
        for c in range(clouds_per_trial[t]):
            xc = x[cloud]
            for k in range(active[cloud]):
                r = D * sqrt(u1[node])
                y2 = xc * xc + r * r + 2.0 * xc * r * cos(TWO_PI * u2[node])
                if cubic:
                    acc += fades[node] / (y2 * sqrt(y2))
                else:
                    acc += fades[node] * pow(y2, half_exp)
                node += 1
            cloud += 1
        out_v[t] = P * acc
    return out
