# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()


cdef inline Py_ssize_t _wrap(Py_ssize_t x, Py_ssize_t n) nogil:
    cdef Py_ssize_t r = x % n
    if r < 0:
        r += n
    return r


def bilinear_remap(src, xs, ys):
    cdef const double[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t H = s.shape[0], W = s.shape[1], C = s.shape[2]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    shape = np.broadcast_shapes(xs.shape, ys.shape)
    cdef const double[::1] X = np.ascontiguousarray(np.broadcast_to(xs, shape).ravel())
    cdef const double[::1] Y = np.ascontiguousarray(np.broadcast_to(ys, shape).ravel())
    cdef Py_ssize_t n = X.shape[0]
    out = np.empty((n, C), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t p, k, x0, x1, y0, y1
    cdef double x, y, xf, yf, fx, fy, a, b, c, d, top, bot
    with nogil:
        for p in range(n):
            x = X[p]
            xf = floor(x)
            fx = x - xf
            x0 = _wrap(<Py_ssize_t>xf, W)
            x1 = x0 + 1
            if x1 == W:
                x1 = 0
            y = Y[p]
            if y < 0.0:
                y = 0.0
            if y > H - 1.0:
                y = H - 1.0
            yf = floor(y)
            fy = y - yf
            y0 = <Py_ssize_t>yf
            y1 = y0 + 1
            if y1 > H - 1:
                y1 = H - 1
            for k in range(C):
                a = s[y0, x0, k]
                b = s[y0, x1, k]
                c = s[y1, x0, k]
                d = s[y1, x1, k]
                top = a + fx * (b - a)
                bot = c + fx * (d - c)
                o[p, k] = top + fy * (bot - top)
    return out.reshape(tuple(shape) + (C,))


def nearest_remap(src, xs, ys):
    cdef const double[:, :, ::1] s = np.ascontiguousarray(src, dtype=np.float64)
    cdef Py_ssize_t H = s.shape[0], W = s.shape[1], C = s.shape[2]
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    shape = np.broadcast_shapes(xs.shape, ys.shape)
    cdef const double[::1] X = np.ascontiguousarray(np.broadcast_to(xs, shape).ravel())
    cdef const double[::1] Y = np.ascontiguousarray(np.broadcast_to(ys, shape).ravel())
    cdef Py_ssize_t n = X.shape[0]
    out = np.empty((n, C), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t p, k, x0, y0
    cdef double y
    with nogil:
        for p in range(n):
            x0 = _wrap(<Py_ssize_t>floor(X[p] + 0.5), W)
            y = Y[p]
            if y < 0.0:
                y = 0.0
            if y > H - 1.0:
                y = H - 1.0
            y0 = <Py_ssize_t>floor(y + 0.5)
            if y0 > H - 1:
                y0 = H - 1
            for k in range(C):
                o[p, k] = s[y0, x0, k]
    return out.reshape(tuple(shape) + (C,))


def region_l1(field, xs, ys, ref):
    cdef const double[:, :, ::1] f = np.ascontiguousarray(field, dtype=np.float64)
    cdef Py_ssize_t W = f.shape[1], C = f.shape[2]
    cdef const long long[::1] X = np.ascontiguousarray(xs, dtype=np.int64)
    cdef const long long[::1] Y = np.ascontiguousarray(ys, dtype=np.int64)
    cdef const double[::1] r = np.ascontiguousarray(ref, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t p, k, x
    cdef double acc, v
    with nogil:
        for p in range(n):
            x = _wrap(<Py_ssize_t>X[p], W)
            acc = 0.0
            for k in range(C):
                v = f[Y[p], x, k] - r[k]
                if v < 0.0:
                    v = -v
                acc = acc + v
            o[p] = acc
    return out
