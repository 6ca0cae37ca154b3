"""Hamiltonian flows, monodromy matrices and actions along paths.

The adaptive integrator is DOP853 with the action ``int alpha`` carried as an
extra quadrature component and, on request, the variational equation
``Phi' = J Hess(H) Phi``. ``alpha = (1/2) sum (p_i dq_i - q_i dp_i)``.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import _tableau
from .errors import DomainError, IntegrationError

DEFAULT_RTOL = 1e-12
DEFAULT_ATOL = 1e-12
DEFAULT_TOL_ENERGY = 1e-9
DEFAULT_TOL_CLOSURE = 1e-8


class OpenPathWarning(UserWarning):
    """An action was requested for a path that does not close up."""


@dataclass(frozen=True)
class FlowSegment:
    """Result of :func:`integrate`.

    ``times``/``points``/``actions`` are the accepted steps (cumulative
    action in ``actions``); ``monodromy`` is the linearised flow map at the
    end time, or None.
    """

    hamiltonian: object
    initial: np.ndarray
    duration: float
    times: np.ndarray
    points: np.ndarray
    actions: np.ndarray
    final: np.ndarray
    action: float
    monodromy: np.ndarray | None
    energy_drift: float
    tol_energy: float
    n_steps: int

    @property
    def closure(self) -> float:
        return float(np.linalg.norm(self.final - self.initial))

    def is_closed(self, tol: float = DEFAULT_TOL_CLOSURE) -> bool:
        return self.closure < tol

    @property
    def energy_ok(self) -> bool:
        return self.energy_drift <= self.tol_energy * max(self.duration, 1.0)

    def to_csv(self, path) -> None:
        """Write ``t, q..., p...`` rows."""
        n = self.initial.size // 2
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)])
            for t, x in zip(self.times, self.points):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in x])


def _start(x0):
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.ndim != 1 or x0.size % 2:
        raise ValueError("phase point must be a vector of even length")
    if not np.any(x0):
        raise DomainError("cannot start a flow at the origin")
    return x0


def integrate(H, x0, T: float, *, monodromy: bool = False, record: bool = True,
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              tol_energy: float = DEFAULT_TOL_ENERGY, max_steps: int = 2_000_000) -> FlowSegment:
    """Integrate ``x' = X_H(x)`` from ``x0`` over ``[0, T]``.

    Raises
    ------
    IntegrationError
        On step-size underflow, non-finite states or exhausted step budget;
        the exception carries the last accepted time and state.
    """
    x0 = _start(x0)
    if T < 0:
        raise ValueError("T must be nonnegative")
    tab = H.table()
    status, t, xf, act, Phi, ts, xs, acts = _kernels.flow_adaptive(
        *tab.args, x0, float(T), rtol, atol, 0.0, monodromy, record, int(max_steps)
    )
    if status != _tableau.OK:
        reason = {
            _tableau.STEP_UNDERFLOW: "step size underflow",
            _tableau.MAX_STEPS: "step budget exhausted",
            _tableau.NONFINITE: "non-finite state",
        }[status]
        raise IntegrationError(f"integration failed at t={t:.6g}: {reason}", t=t, state=xf)
    if record:
        energies = np.asarray(H.evaluate(xs))
    else:
        energies = np.asarray(H.evaluate(np.stack([x0, xf])))
        ts, xs, acts = np.array([0.0, T]), np.stack([x0, xf]), np.array([0.0, act])
    drift = float(np.max(np.abs(energies - energies[0])))
    return FlowSegment(H, x0, float(T), ts, xs, acts, xf, float(act), Phi, drift, tol_energy, len(ts) - 1)


def reference_flow_hst(x0, t):
    """Exact flow of ``H_st``: ``z_j(t) = exp(-2it) z_j(0)``."""
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.shape[-1] // 2
    z = (x0[..., :n] + 1j * x0[..., n:]) * np.exp(-2j * t)
    return np.concatenate([z.real, z.imag], axis=-1)


def action_integral(segment: FlowSegment, expect_closed: bool = False,
                    tol_closure: float = DEFAULT_TOL_CLOSURE) -> float:
    """``int alpha`` along the integrated path.

    For a closed orbit on ``{H = 1}`` with H homogeneous of degree 2 this
    equals the period. A non-closed path is only flagged (warning) when
    ``expect_closed`` is set.
    """
    if expect_closed and not segment.is_closed(tol_closure):
        warnings.warn(f"path does not close (gap {segment.closure:.3g})", OpenPathWarning, stacklevel=2)
    return segment.action


def loop_action(points) -> float:
    """Spectral ``oint alpha`` over a closed loop sampled at uniform parameter.

    ``points`` has shape (m, 2n) without the repeated endpoint.
    """
    X = np.asarray(points, dtype=np.float64)
    m, d = X.shape
    n = d // 2
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0
    dX = np.real(np.fft.ifft(1j * k[:, None] * np.fft.fft(X, axis=0), axis=0))
    q, p = X[:, :n], X[:, n:]
    dq, dp = dX[:, :n], dX[:, n:]
    dens = 0.5 * (np.sum(p * dq, axis=1) - np.sum(q * dp, axis=1))
    return float(2.0 * math.pi * dens.mean())


def sample_orbit(H, x0, T: float, m: int = 256, substeps: int = 2) -> np.ndarray:
    """``m`` points at times ``j T / m`` along the flow (fixed-step RK8)."""
    x0 = _start(x0)
    h = T / (m * substeps)
    path = _kernels.flow_fixed_path(*H.table().args, x0, h, m * substeps, substeps)
    return path[:m]


def _rate(H, X) -> float:
    X = np.atleast_2d(X)
    V = np.atleast_2d(H.vector_field(X))
    return float(np.max(np.linalg.norm(V, axis=1) / np.linalg.norm(X, axis=1)))


def flow_map(H, X, s: float, steps: int | None = None) -> np.ndarray:
    """Time-``s`` flow of ``H`` applied to a batch of points (``s`` may be negative)."""
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    X2 = np.atleast_2d(X)
    if s == 0.0:
        return X.copy()
    if steps is None:
        steps = max(2, int(math.ceil(abs(s) * 64.0 * max(_rate(H, X2), 1e-12))))
    out = _kernels.flow_fixed(*H.table().args, X2, s / steps, int(steps))
    return out[0] if squeeze else out
