# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled product-integration kernels.

Same functions and results as ``_pykernels`` (to rounding); the series
branch truncates adaptively instead of always summing 25 terms.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow, fabs, INFINITY, isfinite

cnp.import_array()

BACKEND = "cython"

cdef double SERIES_CUTOFF = 0.2
cdef enum:
    NTERMS = 25


cdef inline int _nterms(double x) nogil:
    # c_k <= 1, so x**m < 1e-17 bounds the truncation error
    if x <= 1e-4:
        return 5
    if x <= 1e-2:
        return 9
    if x <= 0.05:
        return 14
    return NTERMS


cdef void _series(double alpha, double* dq, double* dp) noexcept nogil:
    cdef double c = 1.0
    cdef int k
    for k in range(NTERMS):
        if k > 0:
            c = c * (k - alpha) / k
        dq[k] = c / (k + 2.0)
        dp[k] = c / ((k + 1.0) * (k + 2.0))


cdef void _row(const double* t, Py_ssize_t n, double alpha, double* w, double* pw,
               const double* dq, const double* dp) noexcept nogil:
    cdef Py_ssize_t i
    cdef int k, m
    cdef double tn = t[n], A, B, h, x, Aa, Ba, sq, sp, I0, J, q, base
    for i in range(n + 1):
        w[i] = 0.0
    if n == 0:
        return
    for i in range(n):
        pw[i] = pow(tn - t[i], alpha)
    pw[n] = 0.0
    for i in range(n):
        A = tn - t[i]
        B = tn - t[i + 1]
        h = t[i + 1] - t[i]
        x = h / A
        Aa = pw[i]
        if x <= SERIES_CUTOFF:
            m = _nterms(x)
            sq = dq[m - 1]
            sp = dp[m - 1]
            for k in range(m - 2, -1, -1):
                sq = sq * x + dq[k]
                sp = sp * x + dp[k]
            base = Aa * x
            w[i] += base * sp
            w[i + 1] += base * sq
        else:
            Ba = pw[i + 1]
            I0 = (Aa - Ba) / alpha
            J = (A * Aa - B * Ba) / (alpha + 1.0)
            q = (A * I0 - J) / h
            w[i] += I0 - q
            w[i + 1] += q


def weight_row(const double[::1] t, Py_ssize_t n, double alpha, out=None):
    cdef double dq[NTERMS]
    cdef double dp[NTERMS]
    if out is None:
        out = np.empty(n + 1)
    cdef double[::1] w = out
    cdef double[::1] pw = np.empty(n + 1)
    _series(alpha, dq, dp)
    with nogil:
        _row(&t[0], n, alpha, &w[0], &pw[0], dq, dp)
    return out[: n + 1]


def weight_matrix(const double[::1] t, double alpha):
    cdef Py_ssize_t N = t.shape[0], n
    cdef double dq[NTERMS]
    cdef double dp[NTERMS]
    packed_arr = np.empty(N * (N + 1) // 2)
    cdef double[::1] packed = packed_arr
    cdef double[::1] pw = np.empty(N)
    _series(alpha, dq, dp)
    with nogil:
        for n in range(N):
            _row(&t[0], n, alpha, &packed[n * (n + 1) // 2], &pw[0], dq, dp)
    return packed_arr


def packed_matvec(const double[::1] packed, const double[::1] f, out=None):
    cdef Py_ssize_t N = f.shape[0], n, j, s
    cdef double acc
    if out is None:
        out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for n in range(N):
            s = n * (n + 1) // 2
            acc = 0.0
            for j in range(n + 1):
                acc += packed[s + j] * f[j]
            o[n] = acc
    return out


cdef inline double _node_f(const double[:, ::1] coefs, const double[::1] exps, Py_ssize_t n,
                           double x) noexcept nogil:
    cdef Py_ssize_t k
    cdef double acc = 0.0, e
    for k in range(exps.shape[0]):
        e = exps[k]
        if e == 0.0:
            acc += coefs[k, n]
        elif e == 1.0:
            acc += coefs[k, n] * x
        elif x > 0.0:
            acc += coefs[k, n] * pow(x, e)
    return acc


cdef int _solve_scalar(double b, double w, const double[:, ::1] coefs, const double[::1] exps,
                       Py_ssize_t n, double x_init, double x0, double abs_tol, double rel_tol,
                       int max_iter, double* x_out, double* r_out, long* it_out) noexcept nogil:
    cdef double x = x_init, xn, inc = 0.0, a, prev = INFINITY, damp = 1.0
    cdef double span, lo, hi, glo, ghi, mid, gm
    cdef int it, bad = 0, j
    for it in range(1, max_iter + 1):
        xn = b + w * _node_f(coefs, exps, n, x)
        if not isfinite(xn):
            break
        inc = xn - x
        a = fabs(inc)
        if a <= abs_tol or a <= rel_tol * fabs(xn):
            x_out[0] = xn
            r_out[0] = fabs(xn - b - w * _node_f(coefs, exps, n, xn))
            it_out[0] = it
            return 1
        if a >= prev:
            bad += 1
            if bad >= 10:
                damp = 0.5
        prev = a
        x = x + damp * inc
    if not isfinite(x):
        x = x_init
    span = 10.0 * fabs(inc) + abs_tol if isfinite(inc) else 1.0
    lo = x0 if x0 < x - span else x - span
    hi = x + span
    it = max_iter
    for j in range(200):
        if lo - b - w * _node_f(coefs, exps, n, lo) <= 0.0:
            break
        lo -= span
        span *= 2.0
    for j in range(200):
        if hi - b - w * _node_f(coefs, exps, n, hi) >= 0.0:
            break
        hi += span
        span *= 2.0
    glo = lo - b - w * _node_f(coefs, exps, n, lo)
    ghi = hi - b - w * _node_f(coefs, exps, n, hi)
    if not (glo <= 0.0 and ghi >= 0.0):
        x_out[0] = x
        r_out[0] = INFINITY
        it_out[0] = it
        return 0
    for j in range(400):
        it += 1
        mid = 0.5 * (lo + hi)
        gm = mid - b - w * _node_f(coefs, exps, n, mid)
        if gm <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= (abs_tol if abs_tol > rel_tol * fabs(mid) else rel_tol * fabs(mid)):
            break
    x = 0.5 * (lo + hi)
    x_out[0] = x
    r_out[0] = fabs(x - b - w * _node_f(coefs, exps, n, x))
    it_out[0] = it
    return 1 if (isfinite(x) and isfinite(r_out[0])) else 0


def march(const double[::1] t, double alpha, double x0, coefs_in, exps_in, double abs_tol,
          double rel_tol, int max_iter, packed=None):
    cdef const double[:, ::1] coefs = np.ascontiguousarray(coefs_in, dtype=np.float64)
    cdef const double[::1] exps = np.ascontiguousarray(exps_in, dtype=np.float64)
    cdef Py_ssize_t N = t.shape[0], n, j, s
    cdef double dq[NTERMS]
    cdef double dp[NTERMS]
    x_arr = np.empty(N)
    res_arr = np.zeros(N)
    it_arr = np.zeros(N, dtype=np.int64)
    cdef double[::1] x = x_arr
    cdef double[::1] res = res_arr
    cdef long[::1] iters = it_arr
    cdef double[::1] fv = np.empty(N)
    cdef double[::1] wbuf = np.empty(N)
    cdef double[::1] pw = np.empty(N)
    cdef const double[::1] pk
    cdef bint use_packed = packed is not None
    cdef const double* w
    cdef double b, xn, r
    cdef long it
    cdef Py_ssize_t failed = -1
    if use_packed:
        pk = packed
    _series(alpha, dq, dp)
    x[0] = x0
    fv[0] = _node_f(coefs, exps, 0, x0)
    with nogil:
        for n in range(1, N):
            if use_packed:
                s = n * (n + 1) // 2
                w = &pk[s]
            else:
                _row(&t[0], n, alpha, &wbuf[0], &pw[0], dq, dp)
                w = &wbuf[0]
            b = 0.0
            for j in range(n):
                b += w[j] * fv[j]
            b += x0
            if not _solve_scalar(b, w[n], coefs, exps, n, x[n - 1], x0, abs_tol, rel_tol,
                                 max_iter, &xn, &r, &it):
                x[n] = xn
                res[n] = r
                iters[n] = it
                failed = n
                break
            x[n] = xn
            res[n] = r
            iters[n] = it
            fv[n] = _node_f(coefs, exps, n, xn)
    return x_arr, res_arr, it_arr, failed


def eval_f(coefs_in, exps_in, const double[::1] x, out=None):
    cdef const double[:, ::1] coefs = np.ascontiguousarray(coefs_in, dtype=np.float64)
    cdef const double[::1] exps = np.ascontiguousarray(exps_in, dtype=np.float64)
    cdef Py_ssize_t n, N = x.shape[0]
    if out is None:
        out = np.empty(N)
    cdef double[::1] o = out
    with nogil:
        for n in range(N):
            o[n] = _node_f(coefs, exps, n, x[n])
    return out
