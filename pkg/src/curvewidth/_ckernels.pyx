# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loops for squared-chord reductions and ball exit times.

Space codes: 0 Euclidean, 1 spherical, 2 hyperbolic.  The squared chord is
``|x - y|^2`` in the first two models and ``-B(x - y, x - y)`` on the
hyperboloid; each is a strictly increasing function of geodesic distance.
"""
import numpy as np
from cython.parallel cimport prange
from libc.math cimport sqrt, acos, atan, atan2, log, cos, cosh, INFINITY


cdef inline double _chord(int kind, const double[:, ::1] P, Py_ssize_t i,
                          const double[:, ::1] C, Py_ssize_t j,
                          Py_ssize_t d) noexcept nogil:
    cdef double q = 0.0
    cdef double t
    cdef Py_ssize_t k
    if kind == 2:
        t = P[i, 0] - C[j, 0]
        q = -t * t
        for k in range(1, d):
            t = P[i, k] - C[j, k]
            q = q + t * t
    else:
        for k in range(d):
            t = P[i, k] - C[j, k]
            q = q + t * t
    return q


def chord_min(int kind, const double[:, ::1] P, const double[:, ::1] C, int threads=1):
    cdef Py_ssize_t m = P.shape[0], n = C.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j
    cdef double best, q
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
        best = INFINITY
        for j in range(n):
            q = _chord(kind, P, i, C, j, d)
            if q < best:
                best = q
        o[i] = best
    return out


def chord_max(int kind, const double[:, ::1] P, const double[:, ::1] C, int threads=1):
    cdef Py_ssize_t m = P.shape[0], n = C.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j
    cdef double best, q
    out = np.empty(m, dtype=np.float64)
    cdef double[::1] o = out
    for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
        best = -INFINITY
        for j in range(n):
            q = _chord(kind, P, i, C, j, d)
            if q > best:
                best = q
        o[i] = best
    return out


def chord_pair_max(int kind, const double[:, ::1] P, int threads=1):
    """Row-wise maximum over later rows, with the arg index of each maximum."""
    cdef Py_ssize_t m = P.shape[0], d = P.shape[1]
    cdef Py_ssize_t i, j, arg
    cdef double best, q
    vals = np.full(m, -INFINITY, dtype=np.float64)
    args = np.full(m, -1, dtype=np.int64)
    cdef double[::1] v = vals
    cdef long long[::1] a = args
    for i in prange(m, nogil=True, num_threads=threads, schedule="dynamic"):
        best = -INFINITY
        arg = -1
        for j in range(i + 1, m):
            q = _chord(kind, P, i, P, j, d)
            if q > best:
                best = q
                arg = j
        v[i] = best
        a[i] = arg
    return vals, args


def ball_exit(int kind, const double[::1] z, const double[:, ::1] U,
              const double[:, ::1] C, double radius, int threads=1):
    """First exit time along each ray z -> U[i] from the intersection of balls,
    and the index of the ball whose sphere is crossed there.

    Terms that depend only on the ball are computed once.  On the sphere the
    minimum is taken over tan(t/2), which is increasing while ``<z, c> > 0``;
    on the hyperboloid over the argument of the logarithm.  The inverse
    function is applied once per ray.
    """
    cdef Py_ssize_t m = U.shape[0], n = C.shape[0], d = U.shape[1]
    cdef Py_ssize_t i, j, k, arg, arg2
    cdef double best, best2, t, a, b, w, amp, disc, q
    cdef double cr = cos(radius)
    cdef double chr_ = cosh(radius)
    cdef double r2 = radius * radius
    out = np.empty(m, dtype=np.float64)
    args = np.empty(m, dtype=np.int64)
    # per-ball terms: offsets z - c and |z - c|^2 - r^2 (flat), <z, c> or B(z, c) (curved)
    W = np.empty((n, d), dtype=np.float64)
    A = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] Wv = W
    cdef double[::1] Av = A
    for j in range(n):
        a = 0.0
        if kind == 0:
            for k in range(d):
                Wv[j, k] = z[k] - C[j, k]
                a = a + Wv[j, k] * Wv[j, k]
            a = a - r2
        elif kind == 1:
            for k in range(d):
                a = a + z[k] * C[j, k]
        else:
            a = z[0] * C[j, 0]
            for k in range(1, d):
                a = a - z[k] * C[j, k]
            Wv[j, 0] = C[j, 0]
            for k in range(1, d):
                Wv[j, k] = -C[j, k]
        Av[j] = a
    cdef double[::1] o = out
    cdef long long[::1] ag = args
    if kind == 0:
        for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
            best = INFINITY
            arg = -1
            for j in range(n):
                b = 0.0
                for k in range(d):
                    b = b + U[i, k] * Wv[j, k]
                disc = b * b - Av[j]
                if disc < 0.0:
                    disc = 0.0
                t = -b + sqrt(disc)
                if t < best:
                    best = t
                    arg = j
            if best < 0.0:
                best = 0.0
            o[i] = best
            ag[i] = arg
    elif kind == 1:
        for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
            best = INFINITY
            best2 = INFINITY
            arg = -1
            arg2 = -1
            for j in range(n):
                a = Av[j]
                b = 0.0
                for k in range(d):
                    b = b + U[i, k] * C[j, k]
                amp = sqrt(a * a + b * b)
                w = cr / amp
                if w > 1.0:
                    w = 1.0
                if a > 0.0:
                    q = sqrt(1.0 - w * w)
                    t = (b * w + a * q) / (amp + a * w - b * q)
                    if t < best:
                        best = t
                        arg = j
                else:
                    # z is outside this ball; the exit time may pass pi
                    t = atan2(b, a) + acos(w)
                    if t < best2:
                        best2 = t
                        arg2 = j
            if arg >= 0:
                best = 2.0 * atan(best)
            if arg2 >= 0 and (arg < 0 or best2 < best):
                best = best2
                arg = arg2
            if best < 0.0:
                best = 0.0
            o[i] = best
            ag[i] = arg
    else:
        for i in prange(m, nogil=True, num_threads=threads, schedule="static"):
            best = INFINITY
            arg = -1
            for j in range(n):
                a = Av[j]
                b = 0.0
                for k in range(d):
                    b = b + U[i, k] * Wv[j, k]
                disc = chr_ * chr_ - a * a + b * b
                if disc < 0.0:
                    disc = 0.0
                t = (chr_ + sqrt(disc)) / (a + b)
                if t < best:
                    best = t
                    arg = j
            best = log(best)
            if best < 0.0:
                best = 0.0
            o[i] = best
            ag[i] = arg
    return out, args
