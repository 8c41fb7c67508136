# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: dense RBF displacement sums and bilinear gathers.

Semantics must match `_reference.py` exactly; the Wendland sum keeps
bit-exact zeros outside the support and the bilinear gather snaps
near-integer coordinates (SNAP) so grid-aligned fields resample exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, floor

cnp.import_array()

cdef double SNAP = 1e-9
BORDER_CLAMP = 0
BORDER_ZEROS = 1


def rbf_displacement_wendland(double[:, ::1] pts, double[:, ::1] centers,
                              double[:, ::1] coeffs, double alpha):
    cdef Py_ssize_t p, i, n = centers.shape[0], m = pts.shape[0]
    cdef double dx, dy, r, t, phi, ax, ay, a2 = alpha * alpha
    out_arr = np.zeros((m, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for p in range(m):
        ax = 0.0
        ay = 0.0
        for i in range(n):
            dx = pts[p, 0] - centers[i, 0]
            dy = pts[p, 1] - centers[i, 1]
            r = dx * dx + dy * dy
            if r >= a2:
                continue
            t = sqrt(r) / alpha
            if t >= 1.0:
                continue
            phi = (1.0 - t) ** 4 * (4.0 * t + 1.0)
            ax += phi * coeffs[i, 0]
            ay += phi * coeffs[i, 1]
        out[p, 0] = ax
        out[p, 1] = ay
    return out_arr


def rbf_displacement_tps(double[:, ::1] pts, double[:, ::1] centers,
                         double[:, ::1] coeffs):
    cdef Py_ssize_t p, i, n = centers.shape[0], m = pts.shape[0]
    cdef double dx, dy, d2, phi, ax, ay
    out_arr = np.zeros((m, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for p in range(m):
        ax = 0.0
        ay = 0.0
        for i in range(n):
            dx = pts[p, 0] - centers[i, 0]
            dy = pts[p, 1] - centers[i, 1]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                phi = 0.5 * d2 * log(d2)
                ax += phi * coeffs[i, 0]
                ay += phi * coeffs[i, 1]
        out[p, 0] = ax
        out[p, 1] = ay
    return out_arr


cdef inline double _pix(double[:, :, ::1] img, Py_ssize_t ix, Py_ssize_t iy,
                        Py_ssize_t c, int border) nogil:
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    if border == 1:  # zeros
        if ix < 0 or ix >= w or iy < 0 or iy >= h:
            return 0.0
    else:  # clamp
        if ix < 0:
            ix = 0
        elif ix >= w:
            ix = w - 1
        if iy < 0:
            iy = 0
        elif iy >= h:
            iy = h - 1
    return img[iy, ix, c]


def warp_bilinear(double[:, :, ::1] img, double[::1] fx, double[::1] fy,
                  int border):
    cdef Py_ssize_t p, c, m = fx.shape[0], nc = img.shape[2]
    cdef Py_ssize_t x0, y0
    cdef double wx, wy, v00, v10, v01, v11
    out_arr = np.empty((m, nc), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for p in range(m):
        x0 = <Py_ssize_t> floor(fx[p])
        wx = fx[p] - x0
        if wx > 1.0 - SNAP:
            x0 += 1
            wx = 0.0
        elif wx < SNAP:
            wx = 0.0
        y0 = <Py_ssize_t> floor(fy[p])
        wy = fy[p] - y0
        if wy > 1.0 - SNAP:
            y0 += 1
            wy = 0.0
        elif wy < SNAP:
            wy = 0.0
        for c in range(nc):
            v00 = _pix(img, x0, y0, c, border)
            v10 = _pix(img, x0 + 1, y0, c, border)
            v01 = _pix(img, x0, y0 + 1, c, border)
            v11 = _pix(img, x0 + 1, y0 + 1, c, border)
            out[p, c] = ((1.0 - wy) * ((1.0 - wx) * v00 + wx * v10)
                         + wy * ((1.0 - wx) * v01 + wx * v11))
    return out_arr


def warp_bilinear_grad(double[:, :, ::1] img, double[::1] fx, double[::1] fy,
                       int border):
    cdef Py_ssize_t p, c, m = fx.shape[0], nc = img.shape[2]
    cdef Py_ssize_t x0, y0
    cdef double wx, wy, v00, v10, v01, v11
    val_arr = np.empty((m, nc), dtype=np.float64)
    gx_arr = np.empty((m, nc), dtype=np.float64)
    gy_arr = np.empty((m, nc), dtype=np.float64)
    cdef double[:, ::1] val = val_arr
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gy = gy_arr
    for p in range(m):
        x0 = <Py_ssize_t> floor(fx[p])
        wx = fx[p] - x0
        if wx > 1.0 - SNAP:
            x0 += 1
            wx = 0.0
        elif wx < SNAP:
            wx = 0.0
        y0 = <Py_ssize_t> floor(fy[p])
        wy = fy[p] - y0
        if wy > 1.0 - SNAP:
            y0 += 1
            wy = 0.0
        elif wy < SNAP:
            wy = 0.0
        for c in range(nc):
            v00 = _pix(img, x0, y0, c, border)
            v10 = _pix(img, x0 + 1, y0, c, border)
            v01 = _pix(img, x0, y0 + 1, c, border)
            v11 = _pix(img, x0 + 1, y0 + 1, c, border)
            val[p, c] = ((1.0 - wy) * ((1.0 - wx) * v00 + wx * v10)
                         + wy * ((1.0 - wx) * v01 + wx * v11))
            gx[p, c] = (1.0 - wy) * (v10 - v00) + wy * (v11 - v01)
            gy[p, c] = (1.0 - wx) * (v01 - v00) + wx * (v11 - v10)
    return val_arr, gx_arr, gy_arr
