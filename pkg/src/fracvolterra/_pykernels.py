"""Pure numpy implementation of the product-integration kernels.

Mirrors ``_ckernels.pyx`` function for function; used when the compiled
extension is unavailable or disabled.

Product trapezoidal weights: on ``[t_i, t_{i+1}]`` with ``A = t_n - t_i``,
``h = t_{i+1} - t_i`` and ``x = h/A`` the two hat-function moments are::

    P_i = A^alpha * x * sum_k c_k x^k / ((k+1)(k+2))     (goes to node i)
    Q_i = A^alpha * x * sum_k c_k x^k / (k+2)            (goes to node i+1)

with ``c_0 = 1``, ``c_k = c_{k-1} (k - alpha)/k``.  The series has only
positive terms, so it is used whenever ``x <= SERIES_CUTOFF``; larger ``x``
take the closed form, where cancellation costs at most one digit.
"""
import math

import numpy as np

SERIES_CUTOFF = 0.2
SERIES_TERMS = 25
BACKEND = "python"


def series_coefficients(alpha, nterms=SERIES_TERMS):
    c = np.empty(nterms)
    c[0] = 1.0
    for k in range(1, nterms):
        c[k] = c[k - 1] * (k - alpha) / k
    k = np.arange(nterms)
    return c / (k + 2.0), c / ((k + 1.0) * (k + 2.0))


def _horner(coef, x):
    acc = np.full_like(x, coef[-1])
    for ck in coef[-2::-1]:
        acc = acc * x + ck
    return acc


def weight_row(t, n, alpha, out=None):
    """Weights ``w[0..n]`` with ``sum_j w[j] phi(t_j) = int_0^{t_n} (t_n-s)^(alpha-1) phi_hat(s) ds``."""
    t = np.asarray(t, dtype=float)
    if out is None:
        out = np.empty(n + 1)
    w = out[: n + 1]
    w[:] = 0.0
    if n == 0:
        return w
    tn = t[n]
    A = tn - t[:n]
    B = tn - t[1 : n + 1]
    h = t[1 : n + 1] - t[:n]
    Aa = A ** alpha
    x = h / A
    P = np.empty(n)
    Q = np.empty(n)
    small = x <= SERIES_CUTOFF
    if small.any():
        dq, dp = series_coefficients(alpha)
        xs = x[small]
        base = Aa[small] * xs
        Q[small] = base * _horner(dq, xs)
        P[small] = base * _horner(dp, xs)
    big = ~small
    if big.any():
        Ab, Bb, hb, Aab = A[big], B[big], h[big], Aa[big]
        Bab = Bb ** alpha
        I0 = (Aab - Bab) / alpha
        J = (Ab * Aab - Bb * Bab) / (alpha + 1.0)
        q = (Ab * I0 - J) / hb
        Q[big] = q
        P[big] = I0 - q
    w[:n] += P
    w[1:] += Q
    return w


def weight_matrix(t, alpha):
    """All rows packed: row ``n`` lives at ``[n(n+1)/2, n(n+1)/2 + n + 1)``."""
    t = np.asarray(t, dtype=float)
    N = t.size
    packed = np.empty(N * (N + 1) // 2)
    for n in range(N):
        s = n * (n + 1) // 2
        weight_row(t, n, alpha, packed[s : s + n + 1])
    return packed


def packed_matvec(packed, f, out=None):
    f = np.asarray(f, dtype=float)
    N = f.size
    if out is None:
        out = np.empty(N)
    for n in range(N):
        s = n * (n + 1) // 2
        out[n] = np.dot(packed[s : s + n + 1], f[: n + 1])
    return out


def _node_f(cn, exps, x):
    acc = 0.0
    for c, e in zip(cn, exps):
        if e == 0.0:
            acc += c
        elif e == 1.0:
            acc += c * x
        elif x > 0.0:
            acc += c * x ** e
    return acc


def solve_scalar(b, w, cn, exps, x_init, x0, abs_tol, rel_tol, max_iter):
    """Solve ``x = b + w * F(x)``; returns ``(x, residual, iterations, ok)``.

    Fixed-point iteration, switched to damping 0.5 after ten non-contracting
    steps, with a bracketing bisection as the last resort.
    """
    x = x_init
    damp = 1.0
    prev = math.inf
    bad = 0
    inc = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        xn = b + w * _node_f(cn, exps, x)
        if not math.isfinite(xn):
            break
        inc = xn - x
        a = abs(inc)
        if a <= abs_tol or a <= rel_tol * abs(xn):
            return xn, abs(xn - b - w * _node_f(cn, exps, xn)), it, True
        if a >= prev:
            bad += 1
            if bad >= 10:
                damp = 0.5
        prev = a
        x = x + damp * inc
    if not math.isfinite(x):
        x = x_init

    def G(y):
        return y - b - w * _node_f(cn, exps, y)

    span = 10.0 * abs(inc) + abs_tol if math.isfinite(inc) else 1.0
    lo = min(x0, x - span)
    hi = x + span
    it = max_iter
    for _ in range(200):
        if G(lo) <= 0.0:
            break
        lo -= span
        span *= 2.0
    for _ in range(200):
        if G(hi) >= 0.0:
            break
        hi += span
        span *= 2.0
    glo, ghi = G(lo), G(hi)
    if not (glo <= 0.0 <= ghi):
        return x, math.inf, it, False
    for _ in range(400):
        it += 1
        mid = 0.5 * (lo + hi)
        gm = G(mid)
        if gm <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= max(abs_tol, rel_tol * abs(mid)):
            break
    x = 0.5 * (lo + hi)
    r = abs(G(x))
    return x, r, it, bool(math.isfinite(x) and math.isfinite(r))


def march(t, alpha, x0, coefs, exps, abs_tol, rel_tol, max_iter, packed=None):
    """Implicit product-trapezoidal time stepping.

    Returns ``(x, residuals, iterations, failed_node)``; ``failed_node`` is
    -1 on success.
    """
    t = np.asarray(t, dtype=float)
    coefs = np.ascontiguousarray(coefs, dtype=float)
    exps = [float(e) for e in exps]
    N = t.size
    x = np.empty(N)
    res = np.zeros(N)
    iters = np.zeros(N, dtype=np.int64)
    fv = np.empty(N)
    x[0] = x0
    fv[0] = _node_f(coefs[:, 0], exps, x0)
    buf = np.empty(N)
    for n in range(1, N):
        if packed is None:
            w = weight_row(t, n, alpha, buf)
        else:
            s = n * (n + 1) // 2
            w = packed[s : s + n + 1]
        b = x0 + float(np.dot(w[:n], fv[:n]))
        xn, r, it, ok = solve_scalar(b, float(w[n]), coefs[:, n], exps, x[n - 1], x0,
                                     abs_tol, rel_tol, max_iter)
        x[n] = xn
        res[n] = r
        iters[n] = it
        if not ok:
            return x, res, iters, n
        fv[n] = _node_f(coefs[:, n], exps, xn)
    return x, res, iters, -1


def eval_f(coefs, exps, x, out=None):
    """Vectorised forcing on the whole path (fractional powers of x<=0 are 0)."""
    x = np.asarray(x, dtype=float)
    if out is None:
        out = np.empty_like(x)
    out[:] = 0.0
    for c, e in zip(coefs, exps):
        if e == 0.0:
            out += c
        elif e == 1.0:
            out += c * x
        else:
            out += c * np.power(np.maximum(x, 0.0), e)
    return out
