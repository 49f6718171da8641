# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled per-cell quadrature kernels (see ``_kernels_py`` for the reference)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"

cdef double _G = 0.5 * sqrt(3.0 / 5.0)
cdef double[3] _GX = [0.5 - 0.5 * sqrt(3.0 / 5.0), 0.5, 0.5 + 0.5 * sqrt(3.0 / 5.0)]
cdef double[3] _GW = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0]


cdef inline void _ref_grads(double x, double y, double* dx, double* dy) nogil:
    dx[0] = -(1 - y); dx[1] = 1 - y; dx[2] = y; dx[3] = -y
    dy[0] = -(1 - x); dy[1] = -x; dy[2] = x; dy[3] = 1 - x


cdef inline double _phys(const double[:, :, ::1] c, Py_ssize_t n,
                         double* dx, double* dy, double* gx, double* gy) nogil:
    cdef double j00 = 0, j01 = 0, j10 = 0, j11 = 0, det
    cdef int a
    for a in range(4):
        j00 += c[n, a, 0] * dx[a]
        j01 += c[n, a, 0] * dy[a]
        j10 += c[n, a, 1] * dx[a]
        j11 += c[n, a, 1] * dy[a]
    det = j00 * j11 - j01 * j10
    for a in range(4):
        gx[a] = (j11 * dx[a] - j10 * dy[a]) / det
        gy[a] = (-j01 * dx[a] + j00 * dy[a]) / det
    return det


def quad_points(coords):
    from ._kernels_py import quad_points as qp
    return qp(coords)


def element_system(coords, kcoef, fval):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const double[:, ::1] k = np.ascontiguousarray(kcoef, dtype=np.float64)
    cdef const double[:, ::1] f = np.ascontiguousarray(fval, dtype=np.float64)
    cdef Py_ssize_t n_cells = c.shape[0]
    ke_arr = np.zeros((n_cells, 4, 4))
    fe_arr = np.zeros((n_cells, 4))
    cdef double[:, :, ::1] ke = ke_arr
    cdef double[:, ::1] fe = fe_arr
    cdef double dx[4]
    cdef double dy[4]
    cdef double gx[4]
    cdef double gy[4]
    cdef double nv[4]
    cdef double x, y, w, det, kw, fw
    cdef Py_ssize_t n
    cdef int i, j, q, a, b
    with nogil:
        for n in range(n_cells):
            for i in range(3):
                for j in range(3):
                    q = 3 * i + j
                    x = _GX[i]
                    y = _GX[j]
                    w = _GW[i] * _GW[j]
                    _ref_grads(x, y, dx, dy)
                    det = _phys(c, n, dx, dy, gx, gy)
                    kw = w * det * k[n, q]
                    fw = w * det * f[n, q]
                    nv[0] = (1 - x) * (1 - y); nv[1] = x * (1 - y)
                    nv[2] = x * y; nv[3] = (1 - x) * y
                    for a in range(4):
                        fe[n, a] += fw * nv[a]
                        for b in range(4):
                            ke[n, a, b] += kw * (gx[a] * gx[b] + gy[a] * gy[b])
    return ke_arr, fe_arr


def cell_integrals(coords, vals):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const double[:, ::1] v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef Py_ssize_t n_cells = c.shape[0]
    out_arr = np.zeros(n_cells)
    cdef double[::1] out = out_arr
    cdef double dx[4]
    cdef double dy[4]
    cdef double gx[4]
    cdef double gy[4]
    cdef Py_ssize_t n
    cdef int i, j
    with nogil:
        for n in range(n_cells):
            for i in range(3):
                for j in range(3):
                    _ref_grads(_GX[i], _GX[j], dx, dy)
                    out[n] += _GW[i] * _GW[j] * _phys(c, n, dx, dy, gx, gy) * v[n, 3 * i + j]
    return out_arr


def gradients_at(coords, nodal, ref):
    cdef const double[:, :, ::1] c = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const double[:, ::1] u = np.ascontiguousarray(nodal, dtype=np.float64)
    cdef const double[:, ::1] r = np.ascontiguousarray(ref, dtype=np.float64)
    cdef Py_ssize_t n_pts = c.shape[0]
    out_arr = np.zeros((n_pts, 2))
    cdef double[:, ::1] out = out_arr
    cdef double dx[4]
    cdef double dy[4]
    cdef double gx[4]
    cdef double gy[4]
    cdef Py_ssize_t n
    cdef int a
    with nogil:
        for n in range(n_pts):
            _ref_grads(r[n, 0], r[n, 1], dx, dy)
            _phys(c, n, dx, dy, gx, gy)
            for a in range(4):
                out[n, 0] += u[n, a] * gx[a]
                out[n, 1] += u[n, a] * gy[a]
    return out_arr
