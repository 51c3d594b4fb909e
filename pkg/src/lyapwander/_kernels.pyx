# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels; same contracts as :mod:`lyapwander._kernels_py`."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, ceil, fabs

cnp.import_array()

cdef enum:
    OK = 0
    BOUNDARY = 1
    OUTSIDE = 2


def trace_lognorm(int m0, long long gamma, long long N, double eps1, double eps2,
                  double log_a, double log_b):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(N, dtype=np.float64)
    cdef long long length = 1, pos = 0, even = 0, odd = 0, j = 0, i
    cdef double la, lb, hi, lo
    for i in range(m0):
        length *= gamma
    cdef long long left_in_block = length
    while pos < N:
        if j % 2 == 0:
            even += 1
        else:
            odd += 1
        la = log_a + eps1 * even + eps2 * odd
        lb = log_b + eps2 * even + eps1 * odd
        if la > lb:
            hi, lo = la, lb
        else:
            hi, lo = lb, la
        out[pos] = hi + 0.5 * log(1.0 + exp(2.0 * (lo - hi)))
        pos += 1
        left_in_block -= 1
        if left_in_block == 0:
            j += 1
            length *= gamma
            left_in_block = length
    return out


cdef struct Tables:
    const double* f
    const double* eta
    const double* coeffs
    Py_ssize_t K
    Py_ssize_t nc


cdef inline void _profile(double x, double eps1, const Tables* tb, double d, double d_next,
                          double* f, double* eta) noexcept nogil:
    cdef Py_ssize_t K = tb.K, c
    cdef double lx, xi, lo, hi, t, s
    cdef long long k0, k
    cdef int off
    f[0] = 0.0
    eta[0] = 0.0
    if K == 0 or x <= 0.0:
        return
    lx = log(x)
    k0 = <long long>ceil(-lx / eps1)
    lo = 1.0 - d_next
    hi = 1.0 + 2.0 * d + d_next
    for off in range(-1, 2):
        k = k0 + off
        if k < 1 or k > K:
            continue
        xi = exp(lx + eps1 * k)
        if xi < lo or xi > hi:
            continue
        if xi < 1.0:
            t = (xi - lo) / d_next
        elif xi > 1.0 + 2.0 * d:
            t = (hi - xi) / d_next
        else:
            t = 1.0
        if t < 0.0:
            t = 0.0
        if t > 1.0:
            t = 1.0
        s = 0.0
        for c in range(tb.nc - 1, -1, -1):
            s = s * t + tb.coeffs[c]
        f[0] = tb.f[k - 1] * s
        eta[0] = tb.eta[k - 1] * s
        return


cdef inline int _step(double* x, double* y, double lam1, double lam2, double eps1,
                      double a, double b, const Tables* tb, double d, double d_next) noexcept nogil:
    cdef double xx = x[0], yy = y[0], ay = fabs(yy), dl, f, eta, nx, ny
    dl = 1.0 if yy >= 0 else -1.0
    if xx == a or ay == b:
        return BOUNDARY
    if ay > b:
        if xx < a:
            nx = lam1 * xx
        else:
            nx = lam1 * (xx - a)
        ny = lam2 * (yy - dl * b)
    elif xx > a:
        if yy == 0.0:
            return BOUNDARY
        nx = dl * lam2 * yy
        ny = lam1 * (xx - a)
    else:
        _profile(xx, eps1, tb, d, d_next, &f, &eta)
        if yy == f:
            return BOUNDARY
        nx = lam1 * xx
        if yy > f:
            ny = lam2 * (yy - eta)
        else:
            ny = lam2 * yy
    if not (nx > 0.0 and nx < 1.0 and ny > -1.0 and ny < 1.0):
        return OUTSIDE
    x[0] = nx
    y[0] = ny
    return OK


cdef Tables _tables(double[::1] ft, double[::1] et, double[::1] cf):
    # the caller keeps the buffers alive for the duration of the loop
    cdef Tables tb
    tb.K = ft.shape[0]
    tb.nc = cf.shape[0]
    tb.f = &ft[0] if tb.K else NULL
    tb.eta = &et[0] if tb.K else NULL
    tb.coeffs = &cf[0]
    return tb


def iterate_points(xs, ys, long long steps, double lam1, double lam2, double eps1, double eps2,
                   f_tab, eta_tab, double d, double d_next, coeffs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(xs, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.array(ys, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.int8_t, ndim=1] status = np.zeros(x.shape[0], dtype=np.int8)
    cdef double[::1] ft = np.ascontiguousarray(f_tab, dtype=np.float64)
    cdef double[::1] et = np.ascontiguousarray(eta_tab, dtype=np.float64)
    cdef double[::1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] xv = x
    cdef double[::1] yv = y
    cdef signed char[::1] sv = status
    cdef double a = exp(-eps1), b = exp(-eps2)
    cdef Tables tb = _tables(ft, et, cf)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef long long s
    cdef int st
    with nogil:
        for i in range(n):
            for s in range(steps):
                st = _step(&xv[i], &yv[i], lam1, lam2, eps1, a, b, &tb, d, d_next)
                if st != OK:
                    sv[i] = st
                    break
    return x, y, status


def first_hits(xs, ys, support, long long n, long long horizon, double lam1, double lam2,
               double eps1, double eps2, f_tab, eta_tab, double d, double d_next, coeffs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.array(xs, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] y = np.array(ys, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hit = np.full(x.shape[0], -1, dtype=np.int64)
    cdef cnp.uint8_t[::1] sup = np.ascontiguousarray(support, dtype=np.uint8)
    cdef double[::1] ft = np.ascontiguousarray(f_tab, dtype=np.float64)
    cdef double[::1] et = np.ascontiguousarray(eta_tab, dtype=np.float64)
    cdef double[::1] cf = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] xv = x
    cdef double[::1] yv = y
    cdef long long[::1] hv = hit
    cdef double a = exp(-eps1), b = exp(-eps2)
    cdef Tables tb = _tables(ft, et, cf)
    cdef Py_ssize_t i, m = x.shape[0]
    cdef long long j, ix, iy
    with nogil:
        for i in range(m):
            for j in range(1, horizon + 1):
                if _step(&xv[i], &yv[i], lam1, lam2, eps1, a, b, &tb, d, d_next) != OK:
                    break
                ix = <long long>(xv[i] * n)
                iy = <long long>((yv[i] + 1.0) * 0.5 * n)
                if ix > n - 1:
                    ix = n - 1
                if iy > n - 1:
                    iy = n - 1
                if ix < 0:
                    ix = 0
                if iy < 0:
                    iy = 0
                if sup[ix * n + iy]:
                    hv[i] = j
                    break
    return hit
