# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the chamber flow.

Mirror of :mod:`isoflow._kernels_py`. Root sums use Neumaier compensated
summation instead of ``math.fsum``; agreement with the reference is at the
level of a few ulps.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY, NAN, isfinite

cnp.import_array()

cdef enum:
    MAXK = 64

cdef double[6][5] _A = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40, 9.0 / 40, 0.0, 0.0, 0.0],
    [44.0 / 45, -56.0 / 15, 32.0 / 9, 0.0, 0.0],
    [19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0.0],
    [9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656],
]
cdef double[6] _B = [35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84]
cdef double[7] _E = [71.0 / 57600, 0.0, -71.0 / 16695, 71.0 / 1920,
                     -17253.0 / 339200, 22.0 / 525, -1.0 / 40]


cdef inline void _nadd(double *s, double *c, double v) nogil:
    cdef double t = s[0] + v
    if fabs(s[0]) >= fabs(v):
        c[0] += (s[0] - t) + v
    else:
        c[0] += (v - t) + s[0]
    s[0] = t


cdef double _sums(const double[:, ::1] roots, const double[::1] mult,
                  const double *x, double *out, double *a2, int *wall) nogil:
    """Fill ``out`` with sum m_i a_i/<x,a_i>; return the margin."""
    cdef Py_ssize_t g = roots.shape[0], k = roots.shape[1], i, j
    cdef double ip, s, c, margin = INFINITY, w
    cdef double[MAXK] acc, comp
    cdef double as_, ac
    for j in range(k):
        acc[j] = 0.0
        comp[j] = 0.0
    as_ = 0.0
    ac = 0.0
    wall[0] = 0
    for i in range(g):
        s = 0.0
        c = 0.0
        for j in range(k):
            _nadd(&s, &c, roots[i, j] * x[j])
        ip = s + c
        if ip < margin:
            margin = ip
            wall[0] = <int>i
        w = mult[i] / ip
        for j in range(k):
            _nadd(&acc[j], &comp[j], w * roots[i, j])
        _nadd(&as_, &ac, w / ip)
    for j in range(k):
        out[j] = acc[j] + comp[j]
    a2[0] = as_ + ac
    return margin


cdef bint _field(int kind, const double[:, ::1] roots, const double[::1] mult,
                 double n, const double *x, double *v) nogil:
    """Write the flow velocity at ``x`` into ``v``; False outside the chamber."""
    cdef Py_ssize_t k = roots.shape[1], j
    cdef double a2, margin, rr, rad, c
    cdef int wall
    margin = _sums(roots, mult, x, v, &a2, &wall)
    for j in range(k):
        v[j] = -v[j]
    if not margin > 0.0:
        return False
    if kind == 1:
        rr = 0.0
        c = 0.0
        for j in range(k):
            _nadd(&rr, &c, x[j] * x[j])
        rr += c
        for j in range(k):
            v[j] += n / rr * x[j]
        rad = 0.0
        c = 0.0
        for j in range(k):
            _nadd(&rad, &c, v[j] * x[j])
        rad = (rad + c) / rr
        for j in range(k):
            v[j] -= rad * x[j]
    return True


def root_sums(roots, mult, x):
    """Return ``(sum_i m_i a_i / <x,a_i>, sum_i m_i / <x,a_i>**2, margin, wall)``."""
    cdef const double[:, ::1] r = np.ascontiguousarray(roots, dtype=np.float64)
    cdef const double[::1] m = np.ascontiguousarray(mult, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t k = r.shape[1]
    if k > MAXK:
        raise ValueError("rank above compiled limit %d" % MAXK)
    out = np.empty(k)
    cdef double[::1] o = out
    cdef double a2, margin
    cdef int wall
    margin = _sums(r, m, &xv[0], &o[0], &a2, &wall)
    if not margin > 0.0:
        return np.full(k, np.nan), NAN, margin, wall
    return out, a2, margin, wall


def field(int kind, roots, mult, double n, x):
    """Velocity of the chamber flow at ``x`` (NaN outside the chamber)."""
    cdef const double[:, ::1] r = np.ascontiguousarray(roots, dtype=np.float64)
    cdef const double[::1] m = np.ascontiguousarray(mult, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t k = r.shape[1]
    if k > MAXK:
        raise ValueError("rank above compiled limit %d" % MAXK)
    out = np.empty(k)
    cdef double[::1] o = out
    if not _field(kind, r, m, n, &xv[0], &o[0]):
        out[:] = np.nan
    return out


def dp5_step(int kind, roots, mult, double n, x, f0, double h,
             double rtol, double atol):
    """One Dormand-Prince step; returns ``(x_new, f_new, K, err)``."""
    cdef const double[:, ::1] r = np.ascontiguousarray(roots, dtype=np.float64)
    cdef const double[::1] m = np.ascontiguousarray(mult, dtype=np.float64)
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] fv = np.ascontiguousarray(f0, dtype=np.float64)
    cdef Py_ssize_t k = r.shape[1], s, j, i
    if k > MAXK:
        raise ValueError("rank above compiled limit %d" % MAXK)
    K_arr = np.empty((7, k))
    x_arr = np.empty(k)
    cdef double[:, ::1] K = K_arr
    cdef double[::1] xn = x_arr
    cdef double[MAXK] tmp
    cdef double acc, e, sc, err = 0.0
    cdef bint ok = True
    with nogil:
        for j in range(k):
            K[0, j] = fv[j]
        for s in range(1, 6):
            for j in range(k):
                acc = 0.0
                for i in range(s):
                    acc += _A[s][i] * K[i, j]
                tmp[j] = xv[j] + h * acc
            if not _field(kind, r, m, n, tmp, &K[s, 0]):
                ok = False
                break
        if ok:
            for j in range(k):
                acc = 0.0
                for i in range(6):
                    acc += _B[i] * K[i, j]
                xn[j] = xv[j] + h * acc
            ok = _field(kind, r, m, n, &xn[0], &K[6, 0])
        if ok:
            for j in range(k):
                acc = 0.0
                for i in range(7):
                    acc += _E[i] * K[i, j]
                e = h * acc
                sc = atol + rtol * (fabs(xv[j]) if fabs(xv[j]) > fabs(xn[j]) else fabs(xn[j]))
                err += (e / sc) * (e / sc)
                if not isfinite(K[6, j]):
                    ok = False
            err = sqrt(err / k)
    if not ok:
        return x_arr, np.full(k, np.nan), K_arr, float("inf")
    return x_arr, K_arr[6].copy(), K_arr, err
