"""Pure numpy implementation of the hot kernels.

A Hamiltonian is handed to the kernels as a *table*: real coefficients
``coef[t]``, integer exponents ``exps[t, i]`` on the real coordinates
``x = (q, p)`` and integer powers ``spow[t]``, encoding

    H(x) = sum_t coef[t] * x**exps[t] / |x|**(2 * spow[t]).

``spow`` may be negative (``|x|**2`` times a constant is stored with
``spow = -1``).
"""

import numpy as np

from . import _tableau as tb

BACKEND = "python"


def _factors(X, exps):
    """Per-coordinate factors ``x_i**e_ti`` and ``e_ti * x_i**(e_ti-1)``.

    Returns two lists of length d with arrays of shape (m, T), plus the second
    derivative factors ``e(e-1) x**(e-2)``.
    """
    maxp = int(exps.max(initial=0))
    m, d = X.shape
    P = np.ones((maxp + 1, m, d))
    for k in range(1, maxp + 1):
        P[k] = P[k - 1] * X
    f0, f1, f2 = [], [], []
    for i in range(d):
        e = exps[:, i]
        f0.append(P[e, :, i].T)
        f1.append((e[:, None] * P[np.maximum(e - 1, 0), :, i]).T if maxp else np.zeros((m, len(e))))
        f2.append((e[:, None] * (e[:, None] - 1) * P[np.maximum(e - 2, 0), :, i]).T if maxp else np.zeros((m, len(e))))
    return f0, f1, f2


def _prod_except(fs, skip):
    out = None
    for j, f in enumerate(fs):
        if j in skip:
            continue
        out = f.copy() if out is None else out * f
    if out is None:
        out = np.ones_like(fs[0])
    return out


def _prepare(exps, spow, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    S = np.einsum("ij,ij->i", X, X)
    Sk = S[:, None] ** (-spow.astype(np.float64))[None, :]
    return X, S, Sk


def table_eval(coef, exps, spow, X):
    X, S, Sk = _prepare(exps, spow, X)
    f0, _, _ = _factors(X, exps)
    m0 = _prod_except(f0, ())
    return (m0 * Sk) @ coef


def table_grad(coef, exps, spow, X):
    X, S, Sk = _prepare(exps, spow, X)
    d = X.shape[1]
    f0, f1, _ = _factors(X, exps)
    m0 = _prod_except(f0, ())
    k = spow.astype(np.float64)[None, :]
    G = np.empty_like(X)
    for i in range(d):
        dm = _prod_except(f0, (i,)) * f1[i]
        G[:, i] = ((dm - 2.0 * k * X[:, i, None] * m0 / S[:, None]) * Sk) @ coef
    return G


def table_hess(coef, exps, spow, X):
    X, S, Sk = _prepare(exps, spow, X)
    m, d = X.shape
    f0, f1, f2 = _factors(X, exps)
    m0 = _prod_except(f0, ())
    k = spow.astype(np.float64)[None, :]
    dm = [_prod_except(f0, (i,)) * f1[i] for i in range(d)]
    Sinv = 1.0 / S[:, None]
    Hs = np.empty((m, d, d))
    for i in range(d):
        for j in range(i, d):
            if i == j:
                d2 = _prod_except(f0, (i,)) * f2[i]
            else:
                d2 = _prod_except(f0, (i, j)) * f1[i] * f1[j]
            xi = X[:, i, None]
            xj = X[:, j, None]
            term = (
                d2
                - 2.0 * k * (xj * dm[i] + xi * dm[j] + (m0 if i == j else 0.0)) * Sinv
                + 4.0 * k * (k + 1.0) * xi * xj * m0 * Sinv * Sinv
            )
            Hs[:, i, j] = (term * Sk) @ coef
            Hs[:, j, i] = Hs[:, i, j]
    return Hs


def _field(coef, exps, spow, X):
    """Hamiltonian vector field (dH/dp, -dH/dq) for a batch of points."""
    G = table_grad(coef, exps, spow, X)
    n = G.shape[1] // 2
    return np.concatenate([G[:, n:], -G[:, :n]], axis=1), G


def _rhs(coef, exps, spow, y, d, monodromy):
    n = d // 2
    x = y[:d]
    f, G = _field(coef, exps, spow, x[None, :])
    out = np.empty_like(y)
    out[:d] = f[0]
    out[d] = 0.5 * (x[n:] @ G[0, n:] + x[:n] @ G[0, :n])
    if monodromy:
        Hs = table_hess(coef, exps, spow, x[None, :])[0]
        Amat = np.concatenate([Hs[n:], -Hs[:n]], axis=0)
        out[d + 1:] = (Amat @ y[d + 1:].reshape(d, d)).ravel()
    return out


def _initial_step(f0, x0, T):
    fn = np.linalg.norm(f0)
    xn = np.linalg.norm(x0)
    if fn == 0.0:
        return T
    return min(T, 0.01 * max(xn, 1e-3) / fn)


def flow_adaptive(coef, exps, spow, x0, T, rtol, atol, h0, monodromy, record, max_steps):
    """Adaptive DOP853 integration of the flow, the action and optionally the
    variational equation.

    Returns ``(status, t, x, action, Phi, ts, xs, acts)``; ``Phi`` is None
    unless ``monodromy``; the path arrays are empty unless ``record``.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    d = x0.size
    ny = d + 1 + (d * d if monodromy else 0)
    nerr = d + 1
    y = np.zeros(ny)
    y[:d] = x0
    if monodromy:
        y[d + 1:] = np.eye(d).ravel()
    rhs = lambda v: _rhs(coef, exps, spow, v, d, monodromy)  # noqa: E731
    f = rhs(y)
    t = 0.0
    ts, xs, acts = [0.0], [x0.copy()], [0.0]
    status = tb.OK
    h = h0 if h0 > 0 else _initial_step(f[:d], x0, T)
    K = np.empty((tb.N_STAGES + 1, ny))
    rejected = False
    steps = 0
    while t < T:
        if steps >= max_steps:
            status = tb.MAX_STEPS
            break
        hmin = 10.0 * np.spacing(max(abs(t), T))
        if h < hmin:
            status = tb.STEP_UNDERFLOW
            break
        last = t + h >= T
        if last:
            h = T - t
        K[0] = f
        for s in range(1, tb.N_STAGES):
            K[s] = rhs(y + h * (tb.A[s, :s] @ K[:s]))
        y_new = y + h * (tb.B @ K[: tb.N_STAGES])
        f_new = rhs(y_new)
        K[tb.N_STAGES] = f_new
        if not np.all(np.isfinite(y_new)):
            status = tb.NONFINITE
            break
        scale = atol + np.maximum(np.abs(y[:nerr]), np.abs(y_new[:nerr])) * rtol
        err5 = (tb.E5 @ K[:, :nerr]) / scale
        err3 = (tb.E3 @ K[:, :nerr]) / scale
        e5 = err5 @ err5
        e3 = err3 @ err3
        if e5 == 0.0 and e3 == 0.0:
            err = 0.0
        else:
            err = h * e5 / np.sqrt((e5 + 0.01 * e3) * nerr)
        if err < 1.0:
            factor = tb.MAX_FACTOR if err == 0.0 else min(tb.MAX_FACTOR, tb.SAFETY * err ** tb.ERROR_EXPONENT)
            if rejected:
                factor = min(1.0, factor)
            t = T if last else t + h
            y, f = y_new, f_new
            steps += 1
            if record:
                ts.append(t)
                xs.append(y[:d].copy())
                acts.append(y[d])
            h *= factor
            rejected = False
        else:
            h *= max(tb.MIN_FACTOR, tb.SAFETY * err ** tb.ERROR_EXPONENT)
            rejected = True
    Phi = y[d + 1:].reshape(d, d).copy() if monodromy else None
    if record:
        return status, t, y[:d].copy(), y[d], Phi, np.array(ts), np.array(xs), np.array(acts)
    return status, t, y[:d].copy(), y[d], Phi, np.empty(0), np.empty((0, d)), np.empty(0)


def _fixed_step(coef, exps, spow, X, h):
    K = []
    for s in range(tb.N_STAGES):
        Y = X if s == 0 else X + h * np.tensordot(tb.A[s, :s], np.array(K), axes=1)
        K.append(_field(coef, exps, spow, Y)[0])
    return X + h * np.tensordot(tb.B, np.array(K), axes=1)


def flow_fixed(coef, exps, spow, X, h, nsteps):
    """Eighth-order fixed-step flow of a batch of points."""
    X = np.array(np.atleast_2d(X), dtype=np.float64)
    for _ in range(int(nsteps)):
        X = _fixed_step(coef, exps, spow, X, h)
    return X


def flow_fixed_path(coef, exps, spow, x0, h, nsteps, every):
    """Fixed-step flow of one point, recording every ``every``-th step."""
    x = np.array(x0, dtype=np.float64)[None, :]
    out = [x[0].copy()]
    for s in range(1, int(nsteps) + 1):
        x = _fixed_step(coef, exps, spow, x, h)
        if s % every == 0:
            out.append(x[0].copy())
    return np.array(out)
