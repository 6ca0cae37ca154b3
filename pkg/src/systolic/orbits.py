"""Closed characteristics on ``{H = 1}`` and systole estimates.

Orbits are found by multi-start shooting: seeds on the surface, near-return
detection along the flow, then Newton refinement of the closure map
``(x, T) -> phi_T(x) - x`` using the monodromy, with energy and phase
conditions appended and the resulting rectangular system solved in the
least-squares sense (degenerate families such as the Hopf circles are
handled by the minimum-norm step).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import _kernels
from .flow import DEFAULT_TOL_CLOSURE, flow_map, integrate, loop_action, sample_orbit
from .hamcore import sphere_points


@dataclass
class ClosedOrbit:
    """A numerically certified periodic characteristic."""

    seed: np.ndarray
    period: float
    action: float
    closure_residual: float
    floquet_spectrum: np.ndarray
    multiplicity_guard: int = 1
    seed_index: int = -1
    source: str = "search"
    _loop: np.ndarray | None = field(default=None, repr=False, compare=False)

    def unit_multipliers(self, tol: float = 1e-4) -> int:
        return int(np.sum(np.abs(self.floquet_spectrum - 1.0) < tol))

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "action": self.action,
            "residual": self.closure_residual,
            "seed": [float(v) for v in self.seed],
            "floquet": [[float(z.real), float(z.imag)] for z in self.floquet_spectrum],
            "multiplicity_guard": self.multiplicity_guard,
            "source": self.source,
        }


@dataclass
class SystoleEstimate:
    """Least action found, with the orbits behind it.

    ``value`` is None when no closed orbit was found within the budget
    (never an infinite systole); ``certified`` is True only when a census of
    the surface family backs the value.
    """

    value: float | None
    orbits: list
    search_budget: dict
    certified: bool
    diagnostic: str = ""
    minimizers: list = field(default_factory=list)
    error: float = 0.0

    @property
    def known(self) -> bool:
        return self.value is not None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certified": self.certified,
            "error": self.error,
            "diagnostic": self.diagnostic,
            "budget": self.search_budget,
            "minimizers": len(self.minimizers),
            "orbits": [o.to_dict() for o in self.orbits],
        }


def write_orbit_csv(orbits, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "period", "action", "residual", "multiplicity_guard", "source"])
        for i, o in enumerate(orbits):
            w.writerow([i, repr(o.period), repr(o.action), repr(o.closure_residual), o.multiplicity_guard, o.source])


def write_orbit_json(orbits, path) -> None:
    with open(path, "w") as fh:
        json.dump([o.to_dict() for o in orbits], fh, indent=2, sort_keys=True)


def project_to_surface(H, X):
    """Radial projection ``x / sqrt(H(x))`` onto ``{H = 1}``."""
    X = np.asarray(X, dtype=np.float64)
    v = np.asarray(H.evaluate(X))
    return X / np.sqrt(v)[..., None] if X.ndim > 1 else X / math.sqrt(float(v))


def refine_orbit(H, x0, T0: float, tol_closure: float = DEFAULT_TOL_CLOSURE, max_iter: int = 20):
    """Newton refinement of a closed orbit near ``(x0, T0)``.

    Returns ``(x, T, residual, monodromy)`` or None when the iteration does
    not reach ``tol_closure``.
    """
    x = project_to_surface(H, x0)
    T = float(T0)
    best = None
    for _ in range(max_iter):
        if not (T > 0) or not np.all(np.isfinite(x)):
            return None
        seg = integrate(H, x, T, monodromy=True, record=False)
        r = seg.final - x
        res = float(np.linalg.norm(r))
        if best is None or res < best[2]:
            best = (x.copy(), T, res, seg.monodromy)
        if res < 1e-12 * max(1.0, np.linalg.norm(x)):
            break
        d = x.size
        f0 = np.asarray(H.vector_field(x))
        fT = np.asarray(H.vector_field(seg.final))
        g0 = np.asarray(H.gradient(x))
        A = np.zeros((d + 2, d + 1))
        A[:d, :d] = seg.monodromy - np.eye(d)
        A[:d, d] = fT
        A[d, :d] = g0
        A[d + 1, :d] = f0
        rhs = -np.concatenate([r, [float(H.evaluate(x)) - 1.0, 0.0]])
        step, *_ = np.linalg.lstsq(A, rhs, rcond=1e-13)
        # damp steps that leave the neighbourhood
        scale = min(1.0, 0.25 * np.linalg.norm(x) / max(np.linalg.norm(step[:d]), 1e-300))
        x = x + scale * step[:d]
        T = T + scale * step[d]
        if best[2] < tol_closure and res > 0.5 * best[2] and res < 10 * tol_closure:
            # stagnating at round-off
            break
    if best is None or best[2] >= tol_closure:
        return None
    # H is 2-homogeneous, so rescaling a closed orbit keeps it closed with the same period
    x, T, res, M = best
    c = 1.0 / math.sqrt(float(H.evaluate(x)))
    return x * c, T, res * c, M


def _make_orbit(H, x, T, res, M, seed_index, source, mult=1):
    m = 256 * max(1, int(math.ceil(T / math.pi)))
    loop = sample_orbit(H, x, T, m=m)
    act = loop_action(loop)
    return ClosedOrbit(
        seed=np.asarray(x, dtype=np.float64),
        period=float(T),
        action=float(act),
        closure_residual=float(res),
        floquet_spectrum=np.linalg.eigvals(M),
        multiplicity_guard=mult,
        seed_index=seed_index,
        source=source,
        _loop=loop,
    )


def _primitive(H, x, T, tol_closure, min_period):
    """Largest k with ``phi_{T/k}(x) = x``; returns ``(k, refined)``."""
    kmax = int(T / max(min_period, 1e-9))
    for k in range(min(kmax, 12), 1, -1):
        seg = integrate(H, x, T / k, record=False)
        if seg.closure < 100 * tol_closure:
            ref = refine_orbit(H, x, T / k, tol_closure)
            if ref is not None:
                return k, ref
    return 1, None


def distance_to_orbit(H, orbit: ClosedOrbit, x) -> float:
    """Distance from ``x`` to the orbit curve (sampled, then locally refined)."""
    if orbit._loop is None:
        orbit._loop = sample_orbit(H, orbit.seed, orbit.period, m=256)
    loop = orbit._loop
    i = int(np.argmin(np.linalg.norm(loop - x, axis=1)))
    dt = orbit.period / len(loop)
    res = minimize_scalar(
        lambda tau: float(np.linalg.norm(flow_map(H, loop[i], tau) - x)),
        bounds=(-dt, dt),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(min(res.fun, np.linalg.norm(loop[i] - x)))


def _same_or_iterate(H, a: ClosedOrbit, b: ClosedOrbit, tol: float):
    """0 if distinct, 1 if the same orbit, k > 1 if one is the k-th iterate."""
    lo, hi = (a, b) if a.period <= b.period else (b, a)
    k = round(hi.period / lo.period)
    if k < 1 or abs(hi.period - k * lo.period) > 1e-6 * hi.period:
        return 0
    if distance_to_orbit(H, lo, hi.seed) < tol:
        return k
    return 0


def _return_candidates(path, ts, x0, frac):
    d = np.linalg.norm(path - x0, axis=1)
    r0 = np.linalg.norm(x0)
    left = np.nonzero(d > frac * r0)[0]
    if left.size == 0:
        return []
    start = left[0]
    out = []
    for i in range(max(start, 1), len(d) - 1):
        if d[i] <= d[i - 1] and d[i] <= d[i + 1] and d[i] < frac * r0:
            # parabola through the squared distances
            y0, y1, y2 = d[i - 1] ** 2, d[i] ** 2, d[i + 1] ** 2
            den = y0 - 2 * y1 + y2
            off = 0.5 * (y0 - y2) / den if den > 0 else 0.0
            h = ts[1] - ts[0]
            out.append((ts[i] + off * h, d[i]))
    return out


def critical_seeds(H, n_samples: int = 512, seed: int = 0):
    """Unit-sphere maximiser and minimiser of H, projected onto ``{H = 1}``.

    On a circular surface these lie on closed Hopf-circle characteristics.
    """
    U = sphere_points(H.n, n_samples, seed)
    vals = np.asarray(H.evaluate(U))
    out = []
    for sign, idx in ((-1.0, int(np.argmax(vals))), (1.0, int(np.argmin(vals)))):
        u = refine_sphere_extremum(H, U[idx], sign)
        out.append(project_to_surface(H, u))
    return out


def refine_sphere_extremum(H, u0, sign: float = -1.0):
    """Local extremum of ``H`` on the unit sphere (sign -1: maximum)."""

    def fun(y):
        r2 = y @ y
        v = float(H.evaluate(y))
        g = np.asarray(H.gradient(y))
        # H(y)/|y|^2 is scale invariant; its gradient is orthogonal to y
        return sign * v / r2, sign * (g / r2 - 2.0 * v * y / r2**2)

    res = minimize(fun, np.asarray(u0, dtype=np.float64), jac=True, method="BFGS",
                   options={"gtol": 1e-13, "maxiter": 500})
    u = res.x / np.linalg.norm(res.x)
    return u


def find_closed_orbits(H, seeds: int = 24, max_period: float | None = None,
                       tol_closure: float = DEFAULT_TOL_CLOSURE, seed: int = 0,
                       return_frac: float = 0.4, max_candidates: int = 3,
                       extra_seeds=None, use_critical_seeds: bool = True,
                       path_samples: int = 1024, dedupe_tol: float = 1e-6):
    """Multi-start search for closed characteristics of ``{H = 1}``.

    Returns ``(orbits, diagnostic, budget)``: orbits sorted by action then
    seed order, iterates folded into their primitive orbit. An empty list comes
    with a budget-exhausted diagnostic, never a claim that no orbit exists.
    """
    n = H.n
    U = sphere_points(n, seeds, seed)
    X = list(project_to_surface(H, U))
    if use_critical_seeds:
        X.extend(critical_seeds(H, seed=seed))
    if extra_seeds is not None:
        X.extend(project_to_surface(H, np.atleast_2d(extra_seeds)))
    if max_period is None:
        r2max = max(float(np.max(np.sum(np.asarray(X) ** 2, axis=1))), 1.0)
        max_period = 2.2 * math.pi * r2max
    min_period = 0.05 * max_period / 2.2
    found: list = []
    tried = 0
    for si, x0 in enumerate(X):
        h = max_period / path_samples
        path = _kernels.flow_fixed_path(*H.table().args, x0, h, path_samples, 1)
        ts = np.arange(path_samples + 1) * h
        cands = _return_candidates(path, ts, x0, return_frac)[:max_candidates]
        for T0, _ in cands:
            tried += 1
            ref = refine_orbit(H, x0, T0, tol_closure)
            if ref is None:
                continue
            x, T, res, M = ref
            k, prim = _primitive(H, x, T, tol_closure, min_period)
            if prim is not None:
                x, T, res, M = prim
            orb = _make_orbit(H, x, T, res, M, si, "search", mult=k)
            _merge(H, found, orb, dedupe_tol)
            break
    found.sort(key=lambda o: (round(o.action, 9), o.seed_index))
    diag = "" if found else "budget-exhausted: no closed orbit found within the search budget"
    budget = {"seeds": len(X), "max_period": max_period, "candidates_tried": tried, "newton_max_iter": 20}
    return found, diag, budget


def _merge(H, found: list, orb: ClosedOrbit, tol: float) -> None:
    for other in found:
        k = _same_or_iterate(H, other, orb, tol)
        if k == 0:
            continue
        if k > 1:
            prim = other if other.period <= orb.period else orb
            prim.multiplicity_guard = max(prim.multiplicity_guard, k)
            if prim is orb:
                found[found.index(other)] = orb
        return
    found.append(orb)


def census_orbit(H, x0, T0, tol_closure: float = DEFAULT_TOL_CLOSURE, index: int = -1):
    """Refine a closed orbit predicted by a closed-form census."""
    ref = refine_orbit(H, x0, T0, tol_closure)
    if ref is None:
        return None
    x, T, res, M = ref
    return _make_orbit(H, x, T, res, M, index, "census")


def systole(H, census=None, seeds: int = 24, max_period: float | None = None,
            tol_closure: float = DEFAULT_TOL_CLOSURE, seed: int = 0, tie_tol: float = 1e-6,
            search: bool = True, **search_opts) -> SystoleEstimate:
    """Least action among the closed characteristics found.

    Parameters
    ----------
    census : list of (x0, T0), optional
        Closed-form orbit census of the surface family. When given and a
        census orbit attains the minimum, the estimate is certified.
    """
    orbits = []
    census_ok = census is not None
    if census is not None:
        for i, (x0, T0) in enumerate(census):
            o = census_orbit(H, x0, T0, tol_closure, index=-1 - i)
            if o is None:
                census_ok = False
            else:
                _merge(H, orbits, o, 1e-6)
    diag = ""
    budget = {"seeds": 0, "max_period": max_period}
    if search:
        found, diag, budget = find_closed_orbits(H, seeds=seeds, max_period=max_period,
                                                 tol_closure=tol_closure, seed=seed, **search_opts)
        for o in found:
            _merge(H, orbits, o, 1e-6)
    orbits.sort(key=lambda o: (round(o.action, 9), o.seed_index))
    if not orbits:
        return SystoleEstimate(None, [], budget, False,
                               diag or "budget-exhausted: no closed orbit found within the search budget")
    value = min(o.action for o in orbits)
    minimizers = [o for o in orbits if o.action <= value + tie_tol]
    certified = census_ok and any(o.source == "census" for o in minimizers)
    err = max(abs(o.action - o.period) for o in minimizers) + 1e-12
    return SystoleEstimate(value, orbits, budget, certified, "" if orbits else diag, minimizers, err)
