# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: triangle point location and the 1D pseudo-time march."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, isfinite
from scipy.linalg.cython_lapack cimport dgbtrf, dgbtrs

cnp.import_array()


def locate_points(const double[:, ::1] points, const double[::1] origin,
                  const double[::1] inv_cell, Py_ssize_t nbx, Py_ssize_t nby,
                  const cnp.int64_t[::1] bucket_ptr, const cnp.int64_t[::1] bucket_tris,
                  const double[:, ::1] tri_p0, const double[:, :, ::1] tri_inv,
                  double tol):
    cdef Py_ssize_t n = points.shape[0]
    tri_arr = np.full(n, -1, dtype=np.int64)
    bary_arr = np.zeros((n, 3), dtype=np.float64)
    cdef cnp.int64_t[::1] tri = tri_arr
    cdef double[:, ::1] bary = bary_arr
    cdef Py_ssize_t p, ix, iy, b, k, t, best_t
    cdef double fx, fy, dx, dy, l0, l1, l2, s, best, b0, b1, b2
    for p in range(n):
        fx = (points[p, 0] - origin[0]) * inv_cell[0]
        fy = (points[p, 1] - origin[1]) * inv_cell[1]
        ix = <Py_ssize_t>floor(fx)
        iy = <Py_ssize_t>floor(fy)
        if ix == nbx:
            ix = nbx - 1
        if iy == nby:
            iy = nby - 1
        if ix < 0 or ix >= nbx or iy < 0 or iy >= nby:
            continue
        b = ix + nbx * iy
        best = -1e300
        best_t = -1
        b0 = 0.0
        b1 = 0.0
        b2 = 0.0
        for k in range(bucket_ptr[b], bucket_ptr[b + 1]):
            t = bucket_tris[k]
            dx = points[p, 0] - tri_p0[t, 0]
            dy = points[p, 1] - tri_p0[t, 1]
            l1 = tri_inv[t, 0, 0] * dx + tri_inv[t, 0, 1] * dy
            l2 = tri_inv[t, 1, 0] * dx + tri_inv[t, 1, 1] * dy
            l0 = 1.0 - l1 - l2
            s = l0
            if l1 < s:
                s = l1
            if l2 < s:
                s = l2
            if s > best:
                best = s
                best_t = t
                b0 = l0
                b1 = l1
                b2 = l2
        if best_t >= 0 and best >= -tol:
            tri[p] = best_t
            bary[p, 0] = b0
            bary[p, 1] = b1
            bary[p, 2] = b2
    return tri_arr, bary_arr


def fd_march(ab, int kl, int ku, const double[::1] dyn, const double[::1] r_node,
             const double[::1] a_node, w0, double tau, double tol, long max_steps):
    cdef double[::1, :] lu = np.array(ab, dtype=np.float64, order="F", copy=True)
    cdef int n = lu.shape[1]
    cdef int ldab = lu.shape[0]
    cdef int nrhs = 1
    cdef int info = 0
    cdef char trans = b"N"
    ipiv_arr = np.zeros(n, dtype=np.intc)
    cdef int[::1] ipiv = ipiv_arr
    w_arr = np.array(w0, dtype=np.float64, copy=True)
    cdef double[::1] w = w_arr
    rhs_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] rhs = rhs_arr
    cdef double inv_tau = 1.0 / tau
    cdef double metric = 1e300
    cdef double diff
    cdef long steps = 0
    cdef Py_ssize_t i

    dgbtrf(&n, &n, &kl, &ku, &lu[0, 0], &ldab, &ipiv[0], &info)
    if info != 0:
        return w_arr, 0, float("inf"), 3
    while steps < max_steps:
        for i in range(n):
            rhs[i] = dyn[i] * (w[i] * inv_tau + w[i] * (r_node[i] - a_node[i] * w[i]))
        dgbtrs(&trans, &n, &kl, &ku, &nrhs, &lu[0, 0], &ldab, &ipiv[0], &rhs[0], &n, &info)
        steps += 1
        metric = 0.0
        for i in range(n):
            diff = fabs(rhs[i] - w[i])
            if not isfinite(diff):
                metric = diff
                break
            if diff > metric:
                metric = diff
            w[i] = rhs[i]
        metric *= inv_tau
        if not isfinite(metric):
            for i in range(n):
                w[i] = rhs[i]
            return w_arr, steps, metric, 2
        if metric < tol:
            return w_arr, steps, metric, 0
    return w_arr, steps, metric, 1
