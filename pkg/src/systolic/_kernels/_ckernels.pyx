# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the table evaluation and DOP853 flow kernels.

Same call signatures and return values as ``_pykernels``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, sqrt, fabs, isfinite, fmin, fmax
from libc.stdlib cimport malloc, free

from . import _tableau as tb

cnp.import_array()

BACKEND = "cython"

cdef enum:
    MAXD = 16
    NST = 12
    MAXS = 30

cdef double[:, ::1] _A = tb.A
cdef double[::1] _B = tb.B
cdef double[::1] _E3 = tb.E3
cdef double[::1] _E5 = tb.E5
cdef double _SAFETY = tb.SAFETY
cdef double _MINF = tb.MIN_FACTOR
cdef double _MAXF = tb.MAX_FACTOR
cdef double _EXPO = tb.ERROR_EXPONENT


cdef struct Tab:
    const double* coef
    const long* exps
    const long* spow
    int T
    int d
    int maxp
    int maxs


cdef Tab _make_tab(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow):
    cdef Tab t
    cdef int i, j
    t.T = coef.shape[0]
    t.d = exps.shape[1]
    t.coef = &coef[0] if t.T > 0 else NULL
    t.exps = &exps[0, 0] if t.T > 0 else NULL
    t.spow = &spow[0] if t.T > 0 else NULL
    t.maxp = 0
    t.maxs = 0
    for i in range(t.T):
        if spow[i] < -1 or spow[i] > MAXS:
            raise ValueError("H_st power out of range for the compiled kernel")
        if spow[i] > t.maxs:
            t.maxs = spow[i]
        for j in range(t.d):
            if exps[i, j] > t.maxp:
                t.maxp = exps[i, j]
    if t.d > MAXD:
        raise ValueError("phase-space dimension too large for the compiled kernel")
    return t


cdef void _eval_point(Tab* tb_, const double* x, double* val, double* grad, double* hess,
                      double* pw) noexcept nogil:
    """Value, gradient (if grad != NULL) and Hessian (if hess != NULL) at x.

    pw is a workspace of size d * (maxp + 1).
    """
    cdef int d = tb_.d
    cdef int P = tb_.maxp + 1
    cdef int i, j, l, t
    cdef long e, ei, ej
    cdef double S = 0.0, Sk, Sk1, Sk2, c, m0, k, v
    cdef double dm[MAXD]
    cdef double f0[MAXD]
    cdef double spw[MAXS + 2]
    cdef const long* ex
    for i in range(d):
        S += x[i] * x[i]
        pw[i * P] = 1.0
        for l in range(1, P):
            pw[i * P + l] = pw[i * P + l - 1] * x[i]
    # spw[k + 1] = S^(-k)
    spw[0] = S
    spw[1] = 1.0
    for l in range(2, tb_.maxs + 2):
        spw[l] = spw[l - 1] / S
    val[0] = 0.0
    if grad != NULL:
        for i in range(d):
            grad[i] = 0.0
    if hess != NULL:
        for i in range(d * d):
            hess[i] = 0.0
    for t in range(tb_.T):
        ex = tb_.exps + t * d
        c = tb_.coef[t]
        k = <double> tb_.spow[t]
        Sk = spw[tb_.spow[t] + 1]
        Sk1 = Sk / S
        Sk2 = Sk1 / S
        m0 = 1.0
        for i in range(d):
            f0[i] = pw[i * P + ex[i]]
            m0 *= f0[i]
        val[0] += c * Sk * m0
        if grad == NULL:
            continue
        for i in range(d):
            ei = ex[i]
            if ei == 0:
                dm[i] = 0.0
                continue
            v = ei * pw[i * P + ei - 1]
            for j in range(d):
                if j != i:
                    v *= f0[j]
            dm[i] = v
            grad[i] += c * dm[i] * Sk
        for i in range(d):
            grad[i] -= c * 2.0 * k * x[i] * m0 * Sk1
        if hess == NULL:
            continue
        for i in range(d):
            for j in range(i, d):
                ei = ex[i]
                ej = ex[j]
                if i == j:
                    if ei >= 2:
                        v = ei * (ei - 1) * pw[i * P + ei - 2]
                        for l in range(d):
                            if l != i:
                                v *= f0[l]
                    else:
                        v = 0.0
                else:
                    if ei >= 1 and ej >= 1:
                        v = ei * pw[i * P + ei - 1] * ej * pw[j * P + ej - 1]
                        for l in range(d):
                            if l != i and l != j:
                                v *= f0[l]
                    else:
                        v = 0.0
                v = v * Sk - 2.0 * k * (x[j] * dm[i] + x[i] * dm[j] + (m0 if i == j else 0.0)) * Sk1 \
                    + 4.0 * k * (k + 1.0) * x[i] * x[j] * m0 * Sk2
                hess[i * d + j] += c * v
    if hess != NULL:
        for i in range(d):
            for j in range(i + 1, d):
                hess[j * d + i] = hess[i * d + j]


cdef void _rhs(Tab* tb_, const double* y, double* out, bint var, double* ws) noexcept nogil:
    """Flow, action density and (if var) variational right-hand side.

    ws needs d*(maxp+1) + d + d*d doubles.
    """
    cdef int d = tb_.d
    cdef int n = d // 2
    cdef int i, j, l
    cdef double val, acc
    cdef double* pw = ws
    cdef double* grad = ws + d * (tb_.maxp + 1)
    cdef double* hess = grad + d
    _eval_point(tb_, y, &val, grad, hess if var else NULL, pw)
    acc = 0.0
    for i in range(n):
        out[i] = grad[n + i]
        out[n + i] = -grad[i]
        acc += y[n + i] * grad[n + i] + y[i] * grad[i]
    out[d] = 0.5 * acc
    if not var:
        return
    # Phi' = J Hess Phi,  J Hess = [Hess[n:]; -Hess[:n]]
    for i in range(d):
        for j in range(d):
            acc = 0.0
            if i < n:
                for l in range(d):
                    acc += hess[(n + i) * d + l] * y[d + 1 + l * d + j]
            else:
                for l in range(d):
                    acc -= hess[(i - n) * d + l] * y[d + 1 + l * d + j]
            out[d + 1 + i * d + j] = acc


def table_eval(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow, X):
    cdef double[:, ::1] Xv = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    cdef Tab t = _make_tab(coef, exps, spow)
    cdef Py_ssize_t m = Xv.shape[0], r
    out = np.empty(m)
    cdef double[::1] ov = out
    cdef double[::1] pw = np.empty(t.d * (t.maxp + 1))
    with nogil:
        for r in range(m):
            _eval_point(&t, &Xv[r, 0], &ov[r], NULL, NULL, &pw[0])
    return out


def table_grad(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow, X):
    cdef double[:, ::1] Xv = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    cdef Tab t = _make_tab(coef, exps, spow)
    cdef Py_ssize_t m = Xv.shape[0], r
    out = np.empty((m, t.d))
    cdef double[:, ::1] ov = out
    cdef double[::1] pw = np.empty(t.d * (t.maxp + 1))
    cdef double val
    with nogil:
        for r in range(m):
            _eval_point(&t, &Xv[r, 0], &val, &ov[r, 0], NULL, &pw[0])
    return out


def table_hess(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow, X):
    cdef double[:, ::1] Xv = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    cdef Tab t = _make_tab(coef, exps, spow)
    cdef Py_ssize_t m = Xv.shape[0], r
    out = np.empty((m, t.d, t.d))
    cdef double[:, :, ::1] ov = out
    cdef double[::1] pw = np.empty(t.d * (t.maxp + 1))
    cdef double[::1] g = np.empty(t.d)
    cdef double val
    with nogil:
        for r in range(m):
            _eval_point(&t, &Xv[r, 0], &val, &g[0], &ov[r, 0, 0], &pw[0])
    return out


def flow_adaptive(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow,
                  x0, double T, double rtol, double atol, double h0, bint monodromy,
                  bint record, long max_steps):
    cdef Tab tab = _make_tab(coef, exps, spow)
    cdef int d = tab.d
    cdef int ny = d + 1 + (d * d if monodromy else 0)
    cdef int nerr = d + 1
    cdef int i, s, j
    cdef double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[::1] y = np.zeros(ny)
    cdef double[::1] ynew = np.zeros(ny)
    cdef double[::1] ytmp = np.zeros(ny)
    cdef double[:, ::1] K = np.zeros((NST + 1, ny))
    cdef double[::1] ws = np.zeros(d * (tab.maxp + 1) + d + d * d)
    cdef double t = 0.0, h, err, e5, e3, sc, a5, a3, factor, hmin, fn, xn, acc
    cdef bint rejected = False, last
    cdef long steps = 0
    cdef int status = 0
    cdef Py_ssize_t cap = 1024, cnt = 1
    for i in range(d):
        y[i] = x0v[i]
    if monodromy:
        for i in range(d):
            y[d + 1 + i * d + i] = 1.0
    ts_arr = np.empty(cap)
    xs_arr = np.empty((cap, d))
    ac_arr = np.empty(cap)
    cdef double[::1] tsv = ts_arr
    cdef double[:, ::1] xsv = xs_arr
    cdef double[::1] acv = ac_arr
    tsv[0] = 0.0
    acv[0] = 0.0
    for i in range(d):
        xsv[0, i] = y[i]
    _rhs(&tab, &y[0], &K[0, 0], monodromy, &ws[0])
    if h0 > 0:
        h = h0
    else:
        fn = 0.0
        xn = 0.0
        for i in range(d):
            fn += K[0, i] * K[0, i]
            xn += y[i] * y[i]
        fn = sqrt(fn)
        xn = fmax(sqrt(xn), 1e-3)
        h = T if fn == 0.0 else fmin(T, 0.01 * xn / fn)
    while t < T:
        if steps >= max_steps:
            status = tb.MAX_STEPS
            break
        hmin = 10.0 * np.spacing(fmax(fabs(t), T))
        if h < hmin:
            status = tb.STEP_UNDERFLOW
            break
        last = t + h >= T
        if last:
            h = T - t
        with nogil:
            for s in range(1, NST):
                for i in range(ny):
                    acc = 0.0
                    for j in range(s):
                        acc += _A[s, j] * K[j, i]
                    ytmp[i] = y[i] + h * acc
                _rhs(&tab, &ytmp[0], &K[s, 0], monodromy, &ws[0])
            for i in range(ny):
                acc = 0.0
                for j in range(NST):
                    acc += _B[j] * K[j, i]
                ynew[i] = y[i] + h * acc
            _rhs(&tab, &ynew[0], &K[NST, 0], monodromy, &ws[0])
            e5 = 0.0
            e3 = 0.0
            for i in range(nerr):
                sc = atol + fmax(fabs(y[i]), fabs(ynew[i])) * rtol
                a5 = 0.0
                a3 = 0.0
                for j in range(NST + 1):
                    a5 += _E5[j] * K[j, i]
                    a3 += _E3[j] * K[j, i]
                a5 /= sc
                a3 /= sc
                e5 += a5 * a5
                e3 += a3 * a3
        finite = True
        for i in range(ny):
            if not isfinite(ynew[i]):
                finite = False
                break
        if not finite:
            status = tb.NONFINITE
            break
        if e5 == 0.0 and e3 == 0.0:
            err = 0.0
        else:
            err = h * e5 / sqrt((e5 + 0.01 * e3) * nerr)
        if err < 1.0:
            if err == 0.0:
                factor = _MAXF
            else:
                factor = fmin(_MAXF, _SAFETY * pow(err, _EXPO))
            if rejected:
                factor = fmin(1.0, factor)
            t = T if last else t + h
            for i in range(ny):
                y[i] = ynew[i]
                K[0, i] = K[NST, i]
            steps += 1
            if record:
                if cnt == cap:
                    cap *= 2
                    ts_arr = np.resize(ts_arr, cap)
                    xs_arr = np.resize(xs_arr, (cap, d))
                    ac_arr = np.resize(ac_arr, cap)
                    tsv = ts_arr
                    xsv = xs_arr
                    acv = ac_arr
                tsv[cnt] = t
                acv[cnt] = y[d]
                for i in range(d):
                    xsv[cnt, i] = y[i]
                cnt += 1
            h *= factor
            rejected = False
        else:
            h *= fmax(_MINF, _SAFETY * pow(err, _EXPO))
            rejected = True
    yarr = np.asarray(y)
    Phi = yarr[d + 1:].reshape(d, d).copy() if monodromy else None
    if record:
        return (status, t, yarr[:d].copy(), float(y[d]), Phi,
                ts_arr[:cnt].copy(), xs_arr[:cnt].copy(), ac_arr[:cnt].copy())
    return status, t, yarr[:d].copy(), float(y[d]), Phi, np.empty(0), np.empty((0, d)), np.empty(0)


cdef void _fixed_step(Tab* tab, double* x, double h, double* K, double* ytmp, double* ws) noexcept nogil:
    """One eighth-order step of the bare flow (no action, no variational part).

    K holds NST rows of stride d + 1 (the action slot is computed but unused).
    """
    cdef int d = tab.d
    cdef int st = d + 1
    cdef int s, i, j
    cdef double acc
    for i in range(d):
        ytmp[i] = x[i]
    _rhs(tab, ytmp, K, False, ws)
    for s in range(1, NST):
        for i in range(d):
            acc = 0.0
            for j in range(s):
                acc += _A[s, j] * K[j * st + i]
            ytmp[i] = x[i] + h * acc
        _rhs(tab, ytmp, K + s * st, False, ws)
    for i in range(d):
        acc = 0.0
        for j in range(NST):
            acc += _B[j] * K[j * st + i]
        x[i] = x[i] + h * acc


def flow_fixed(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow,
               X, double h, long nsteps):
    cdef Tab tab = _make_tab(coef, exps, spow)
    out = np.array(np.atleast_2d(X), dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] ov = out
    cdef int d = tab.d
    cdef Py_ssize_t m = ov.shape[0], r
    cdef long s
    cdef double[::1] K = np.zeros(NST * (d + 1))
    cdef double[::1] ytmp = np.zeros(d + 1)
    cdef double[::1] ws = np.zeros(d * (tab.maxp + 1) + d + d * d)
    with nogil:
        for r in range(m):
            for s in range(nsteps):
                _fixed_step(&tab, &ov[r, 0], h, &K[0], &ytmp[0], &ws[0])
    return out


def flow_fixed_path(const double[::1] coef, const long[:, ::1] exps, const long[::1] spow,
                    x0, double h, long nsteps, long every):
    cdef Tab tab = _make_tab(coef, exps, spow)
    cdef int d = tab.d
    cdef long s, cnt = 1
    cdef int i
    out = np.empty((nsteps // every + 1, d))
    cdef double[:, ::1] ov = out
    cdef double[::1] x = np.array(x0, dtype=np.float64, copy=True)
    cdef double[::1] K = np.zeros(NST * (d + 1))
    cdef double[::1] ytmp = np.zeros(d + 1)
    cdef double[::1] ws = np.zeros(d * (tab.maxp + 1) + d + d * d)
    for i in range(d):
        ov[0, i] = x[i]
    with nogil:
        for s in range(1, nsteps + 1):
            _fixed_step(&tab, &x[0], h, &K[0], &ytmp[0], &ws[0])
            if s % every == 0:
                for i in range(d):
                    ov[cnt, i] = x[i]
                cnt += 1
    return out
