"""Contact volume, systolic ratio and the radial-map comparator.

For a star-shaped ``Sigma = {H = 1}`` with radial function
``rho = 1/sqrt(H)`` on the unit sphere, the domain ``K = {H <= 1}`` has
Lebesgue volume ``(1/(2n)) int_{S^{2n-1}} rho^{2n} dsigma``, which is the
contact volume of ``(Sigma, alpha)`` for ``alpha = (1/2) sum p dq - q dp``.
The exponent of ``rho`` is not hard-coded: it is written ``e * n`` where
``e`` is the conformal exponent of the radial map (``delta^* alpha =
rho^e alpha``), and ``e`` is selected by :func:`resolve_convention` against
independent oracles.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .errors import (
    ConventionMismatchError,
    HypothesisViolatedError,
    InputError,
    StarShapednessError,
    UnsupportedRepresentationError,
)
from .flow import DEFAULT_TOL_CLOSURE, loop_action, reference_flow_hst, sample_orbit
from .hamcore import PolyOverH, Quadratic, Radial, ellipsoid_hamiltonian, hst, poisson_bracket, sphere_points
from .orbits import ClosedOrbit, SystoleEstimate, refine_orbit, refine_sphere_extremum, systole

CENSUS_TAGS = ("ball", "ellipsoid", "circular", "generic")


def _is_symbolic(H) -> bool:
    return isinstance(H, (PolyOverH, Quadratic))


# -- surfaces -------------------------------------------------------------------


@dataclass(frozen=True)
class ContactSurface:
    """``Sigma = {H = 1}`` with its census tag.

    ``scale`` records the cumulative homothety applied by :meth:`scaled`,
    ``axes`` the ellipsoid parameters (``pi a_j`` are the coordinate-circle
    actions) when the tag is ``ellipsoid``.
    """

    hamiltonian: object
    tag: str = "generic"
    axes: tuple | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.tag not in CENSUS_TAGS:
            raise InputError(f"unknown census tag {self.tag!r}")

    @property
    def n(self) -> int:
        return self.hamiltonian.n

    @classmethod
    def ball(cls, n: int, radius=1) -> "ContactSurface":
        r2 = Fraction(radius) ** 2
        return cls(hst(n).scaled(1 / r2), "ball", None, 1.0)

    @classmethod
    def ellipsoid(cls, axes) -> "ContactSurface":
        axes = tuple(Fraction(a) for a in axes)
        return cls(ellipsoid_hamiltonian(axes), "ellipsoid", axes, 1.0)

    @classmethod
    def circular(cls, H, samples: int = 256, seed: int = 0) -> "ContactSurface":
        """Circular domain ``e^{i theta} K = K``; invariance is checked."""
        _star_check(H)
        if _is_symbolic(H):
            if not poisson_bracket(H, hst(H.n)).is_zero():
                raise InputError("Hamiltonian does not commute with H_st: not a circular domain")
        X = sphere_points(H.n, samples, seed)
        base = np.asarray(H.evaluate(X))
        for theta in (0.3, 1.1, 2.5):
            rot = np.asarray(H.evaluate(reference_flow_hst(X, theta)))
            if np.max(np.abs(rot - base)) > 1e-10 * max(1.0, np.max(np.abs(base))):
                raise InputError("sampled H(e^{i theta} z) differs from H(z): not a circular domain")
        return cls(H, "circular", None, 1.0)

    @classmethod
    def generic(cls, H) -> "ContactSurface":
        _star_check(H)
        return cls(H, "generic", None, 1.0)

    def scaled(self, lam: float) -> "ContactSurface":
        """The homothetic image ``lam * Sigma`` (``H`` becomes ``H / lam^2``)."""
        lam = float(lam)
        if not lam > 0:
            raise ValueError("homothety factor must be positive")
        f = Fraction(1) / Fraction(lam) ** 2 if _is_symbolic(self.hamiltonian) else 1.0 / lam**2
        H = self.hamiltonian.scaled(f)
        axes = None if self.axes is None else tuple(a * Fraction(lam) ** 2 for a in self.axes)
        tag = self.tag
        return ContactSurface(H, tag, axes, self.scale * lam)

    def radius_range(self, samples: int = 1024, seed: int = 0):
        """Refined ``(min rho, max rho)`` over the unit sphere."""
        H = self.hamiltonian
        U = sphere_points(self.n, samples, seed)
        v = np.asarray(H.evaluate(U))
        try:
            hi = refine_sphere_extremum(H, U[int(np.argmax(v))], -1.0)
            lo = refine_sphere_extremum(H, U[int(np.argmin(v))], 1.0)
            vmax = max(float(H.evaluate(hi)), float(v.max()))
            vmin = min(float(H.evaluate(lo)), float(v.min()))
        except UnsupportedRepresentationError:
            vmax, vmin = float(v.max()), float(v.min())
        return 1.0 / math.sqrt(vmax), 1.0 / math.sqrt(vmin)

    def census(self):
        """Closed-form orbit guesses ``[(x0, T0), ...]`` or None.

        Ball and ellipsoid: the coordinate circles, of period ``pi / H(e_j)``.
        Circular: Hopf circles through the sphere extrema of ``H``.
        """
        H = self.hamiltonian
        n = self.n
        if self.tag in ("ball", "ellipsoid"):
            out = []
            for j in range(n):
                e = np.zeros(2 * n)
                e[j] = 1.0
                h = float(H.evaluate(e))
                out.append((e / math.sqrt(h), math.pi / h))
            return out
        if self.tag == "circular":
            out = []
            U = sphere_points(n, 1024, 0)
            v = np.asarray(H.evaluate(U))
            for sign, idx in ((-1.0, int(np.argmax(v))), (1.0, int(np.argmin(v)))):
                u = refine_sphere_extremum(H, U[idx], sign)
                h = float(H.evaluate(u))
                out.append((u / math.sqrt(h), math.pi / h))
            return out
        return None

    def torus_family(self) -> str:
        if self.tag == "ellipsoid" and len(set(self.axes)) > 1:
            ratios = ", ".join(str(a / min(self.axes)) for a in self.axes)
            return f"resonant torus family (axis ratios {ratios}); coordinate circles reported"
        return ""


def _star_check(H) -> None:
    X = sphere_points(H.n, 512, 0)
    v = np.asarray(H.evaluate(X))
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise StarShapednessError("H is not positive on the unit sphere")


# -- volume ---------------------------------------------------------------------


class VolumeEstimate(NamedTuple):
    value: float
    error: float


def _gauss_interval(m: int, lo: float, hi: float):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def sphere_grid(n: int, n_polar: int, n_phase: int):
    """Product rule on ``S^{2n-1}``: points (m, 2n) and weights summing to the area.

    The moduli ``|z_j|`` are written in spherical coordinates on the
    positive orthant of ``S^{n-1}`` (Gauss-Legendre in the polar angles)
    and the phases use the trapezoid rule.
    """
    ph = 2 * math.pi * np.arange(n_phase) / n_phase
    wph = 2 * math.pi / n_phase
    if n == 1:
        mods = np.ones((1, 1))
        mw = np.ones(1)
    elif n == 2:
        t, w = _gauss_interval(n_polar, 0.0, math.pi / 2)
        mods = np.stack([np.cos(t), np.sin(t)], axis=1)
        mw = w * np.cos(t) * np.sin(t)
    elif n == 3:
        t1, w1 = _gauss_interval(n_polar, 0.0, math.pi / 2)
        t2, w2 = _gauss_interval(n_polar, 0.0, math.pi / 2)
        T1, T2 = np.meshgrid(t1, t2, indexing="ij")
        W = np.outer(w1, w2)
        T1, T2, W = T1.ravel(), T2.ravel(), W.ravel()
        s1 = np.sin(T1)
        mods = np.stack([np.cos(T1), s1 * np.cos(T2), s1 * np.sin(T2)], axis=1)
        mw = W * np.cos(T1) * s1**3 * np.cos(T2) * np.sin(T2)
    else:
        raise InputError("product quadrature is available for n <= 3 only")
    phases = np.stack(np.meshgrid(*([ph] * n), indexing="ij"), axis=-1).reshape(-1, n)
    Z = mods[:, None, :] * np.exp(1j * phases[None, :, :])
    Z = Z.reshape(-1, n)
    X = np.concatenate([Z.real, Z.imag], axis=1)
    weights = np.repeat(mw, len(phases)) * wph**n
    return X, weights


_DEFAULT_RES = {1: (1, 256), 2: (40, 64), 3: (14, 20)}


def _sphere_mean_power(H, power: float, res) -> float:
    """``(1/|S|) int rho^power dsigma`` with ``rho = 1/sqrt(H)``."""
    X, w = sphere_grid(H.n, *res)
    total = 0.0
    chunk = 1 << 18
    for i in range(0, len(X), chunk):
        v = np.asarray(H.evaluate(X[i:i + chunk]))
        if np.any(v <= 0):
            raise StarShapednessError("nonpositive H on the sphere")
        total += float(np.dot(w[i:i + chunk], v ** (-0.5 * power)))
    return total / w.sum()


def _sphere_area(n: int) -> float:
    return 2 * math.pi**n / math.factorial(n - 1)


def _quadrature_volume(H, exponent: float, res=None) -> VolumeEstimate:
    n = H.n
    res = res or _DEFAULT_RES[n]
    coarse = (max(1, res[0] // 2), max(4, res[1] // 2)) if n > 1 else (1, max(4, res[1] // 2))
    fac = _sphere_area(n) / (2 * n)
    fine = fac * _sphere_mean_power(H, exponent * n, res)
    rough = fac * _sphere_mean_power(H, exponent * n, coarse)
    err = abs(fine - rough) + 1e-14 * abs(fine)
    return VolumeEstimate(fine, err)


def _montecarlo_volume(H, samples: int, seed: int, replicas: int = 8, rho_max: float | None = None) -> VolumeEstimate:
    n = H.n
    d = 2 * n
    if rho_max is None:
        rho_max = ContactSurface(H).radius_range()[1]
    B = 1.02 * rho_max
    m = max(4, int(math.ceil(math.log2(max(samples // replicas, 16)))))
    ests = []
    ss = np.random.SeedSequence(seed)
    for child in ss.spawn(replicas):
        eng = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(child))
        P = (2.0 * eng.random_base2(m) - 1.0) * B
        inside = 0
        chunk = 1 << 17
        for i in range(0, len(P), chunk):
            Q = P[i:i + chunk]
            Q = Q[np.any(Q != 0, axis=1)]
            inside += int(np.sum(np.asarray(H.evaluate(Q)) <= 1.0))
        ests.append((2 * B) ** d * inside / len(P))
    ests = np.asarray(ests)
    return VolumeEstimate(float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(replicas)))


def contact_volume(surface, method: str = "quadrature", samples: int = 1 << 20, seed: int = 0,
                   exponent: float | None = None, resolution=None) -> VolumeEstimate:
    """Contact volume of ``Sigma`` (= Lebesgue volume of ``K``) and its error.

    Parameters
    ----------
    method : {"quadrature", "montecarlo", "both"}
        Radial product quadrature (n <= 3; error from halving the
        resolution), scrambled-Sobol rejection sampling in a bounding box
        (error from the spread of independent replicas), or both with a
        consistency check.
    exponent : float, optional
        Conformal exponent ``e`` of the radial density ``rho^{e n}``;
        defaults to the resolved convention.

    Raises
    ------
    ConventionMismatchError
        With ``method="both"``, if the estimators differ by more than three
        times their combined error.
    """
    S = surface if isinstance(surface, ContactSurface) else ContactSurface(surface)
    H = S.hamiltonian
    if exponent is None:
        exponent = resolve_convention().exponent
    if method == "quadrature":
        if S.n > 3:
            raise InputError("quadrature volume needs n <= 3; use method='montecarlo'")
        return _quadrature_volume(H, exponent, resolution)
    if method == "montecarlo":
        return _montecarlo_volume(H, samples, seed)
    if method == "both":
        q = _quadrature_volume(H, exponent, resolution)
        mc = _montecarlo_volume(H, samples, seed)
        comb = math.hypot(q.error, mc.error)
        if abs(q.value - mc.value) > 3 * comb:
            raise ConventionMismatchError(
                f"quadrature {q.value:.10g} and Monte-Carlo {mc.value:.10g} disagree beyond 3x error {comb:.3g}"
            )
        return q
    raise InputError(f"unknown volume method {method!r}")


@dataclass(frozen=True)
class Convention:
    """Resolved radial-map exponent with the evidence that selected it."""

    exponent: int
    checks: dict

    def to_dict(self) -> dict:
        return {
            "rho_exponent": self.exponent,
            "volume_density": f"rho^({self.exponent}n)",
            "pullback": f"delta^*alpha = rho^{self.exponent} alpha",
        }


@functools.lru_cache(maxsize=None)
def resolve_convention(samples: int = 1 << 18, seed: int = 12345) -> Convention:
    """Pick the exponent ``e`` in ``delta^* alpha = rho^e alpha``.

    Each candidate ``e`` in {1, 2} is tested on the (1, 2) ellipsoid:
    its radial quadrature must match the closed form ``pi^2`` and an
    independent Monte-Carlo volume, and the sphere mean of ``rho^{e n}``
    after normalising the Monte-Carlo volume to the ball volume must be 1.
    """
    S = ContactSurface.ellipsoid([1, 2])
    n = 2
    exact = math.pi**2
    ball_vol = math.pi**n / math.factorial(n)
    mc = _montecarlo_volume(S.hamiltonian, samples, seed)
    lam = (ball_vol / mc.value) ** (1.0 / (2 * n))
    checks = {}
    good = []
    for e in (1, 2):
        q = _quadrature_volume(S.hamiltonian, e)
        mean = _sphere_mean_power(S.scaled(lam).hamiltonian, e * n, _DEFAULT_RES[n])
        mean_err = 2 * n * mc.error / mc.value
        tol_q = 3 * math.hypot(q.error, 1e-12 * exact)
        ok = (abs(q.value - exact) <= tol_q
              and abs(q.value - mc.value) <= 3 * math.hypot(q.error, mc.error)
              and abs(mean - 1.0) <= 3 * mean_err + 1e-12)
        checks[e] = {"quadrature": q.value, "closed_form": exact, "montecarlo": mc.value,
                     "montecarlo_error": mc.error, "normalized_mean": mean, "consistent": ok}
        if ok:
            good.append(e)
    if len(good) != 1:
        raise ConventionMismatchError(f"no unique consistent rho exponent: {checks}")
    return Convention(good[0], checks)


# -- systolic ratio -----------------------------------------------------------------


@dataclass
class SurfaceMetrics:
    volume: float
    volume_error: float
    systole: SystoleEstimate
    systolic_ratio: float | None
    ratio_error: float | None
    convention: dict = field(default_factory=dict)
    n: int = 0

    @property
    def certified(self) -> bool:
        return self.systole.certified

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "volume": self.volume,
            "volume_error": self.volume_error,
            "systole": self.systole.value,
            "systole_error": self.systole.error if self.systole.known else None,
            "certified": self.systole.certified,
            "ratio": self.systolic_ratio,
            "ratio_error": self.ratio_error,
            "ratio_available": self.systolic_ratio is not None,
            "diagnostic": self.systole.diagnostic,
            "convention": self.convention,
            "orbits": [{"period": o.period, "action": o.action, "residual": o.closure_residual,
                        "multiplicity_guard": o.multiplicity_guard, "source": o.source}
                       for o in self.systole.orbits],
        }


def surface_systole(S: ContactSurface, seeds: int = 16, seed: int = 0, search: bool = True,
                    tol_closure: float = DEFAULT_TOL_CLOSURE, max_period=None) -> SystoleEstimate:
    """Systole estimate using the surface's census (if any) plus a seeded search."""
    census = S.census()
    est = systole(S.hamiltonian, census=census, seeds=seeds, seed=seed, search=search,
                  tol_closure=tol_closure, max_period=max_period)
    note = S.torus_family()
    if note:
        est.diagnostic = (est.diagnostic + "; " if est.diagnostic else "") + note
    return est


def systolic_ratio(surface, volume_method: str = "quadrature", samples: int = 1 << 20, seeds: int = 16,
                   seed: int = 0, search: bool = True, tol_closure: float = DEFAULT_TOL_CLOSURE,
                   max_period=None) -> SurfaceMetrics:
    """Volume, systole and ``vol / sys^n``.

    If no closed orbit is found the ratio is None and the systole carries a
    budget-exhausted diagnostic.
    """
    S = surface if isinstance(surface, ContactSurface) else ContactSurface(surface)
    conv = resolve_convention()
    if volume_method == "quadrature" and S.n > 3:
        volume_method = "montecarlo"
    vol = contact_volume(S, method=volume_method, samples=samples, seed=seed)
    est = surface_systole(S, seeds=seeds, seed=seed, search=search, tol_closure=tol_closure,
                          max_period=max_period)
    n = S.n
    if est.known:
        ratio = vol.value / est.value**n
        rerr = ratio * (vol.error / vol.value + n * est.error / est.value)
    else:
        ratio = rerr = None
    return SurfaceMetrics(vol.value, vol.error, est, ratio, rerr, conv.to_dict(), n)


def normalize_volume(surface: ContactSurface, target: float, volume: float | None = None) -> ContactSurface:
    """Homothetic copy with contact volume ``target`` (``lam = (target/vol)^{1/(2n)}``)."""
    if target <= 0:
        raise ValueError("target volume must be positive")
    if volume is None:
        volume = contact_volume(surface).value
    lam = (target / volume) ** (1.0 / (2 * surface.n))
    return surface.scaled(lam)


def commutation_defect(H, H0=None, samples: int = 512, seed: int = 0) -> float:
    """Size of ``{H, H0}``: exactly 0.0 if the symbolic bracket vanishes.

    Otherwise the sup of ``|{H, H0}|`` over sphere samples.
    """
    if H0 is None:
        H0 = hst(H.n)
    X = sphere_points(H.n, samples, seed)
    if _is_symbolic(H) and _is_symbolic(H0):
        B = poisson_bracket(H, H0)
        if B.is_zero():
            return 0.0
        return float(np.max(np.abs(B.evaluate(X))))
    from .hamcore import numeric_bracket

    return float(np.max(np.abs(numeric_bracket(H, H0, X))))


# -- radial comparison ------------------------------------------------------------


@dataclass
class ComparisonCertificate:
    """Outcome of the radial-map comparison against a round reference."""

    defect: float
    scale: float
    reference_radius: float
    reference_volume: float
    volume: float
    volume_error: float
    mean_rho_power: float
    mean_error: float
    rho_min: float
    rho_max: float
    argmin: np.ndarray
    predicted_action: float
    pushed_loop_action: float
    measured_action: float | None
    orbit: ClosedOrbit | None
    ratio_lower_bound: float | None
    ratio_error: float | None
    reference_ratio: float
    inequality_holds: bool
    equality_case: bool
    certified: bool
    convention: dict

    @property
    def action_mismatch(self) -> float | None:
        if self.measured_action is None:
            return None
        return abs(self.measured_action - self.predicted_action)

    def to_dict(self) -> dict:
        return {
            "defect": self.defect,
            "scale": self.scale,
            "volume": self.volume,
            "volume_error": self.volume_error,
            "mean_rho_power": self.mean_rho_power,
            "mean_error": self.mean_error,
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
            "argmin": [float(v) for v in self.argmin],
            "predicted_action": self.predicted_action,
            "pushed_loop_action": self.pushed_loop_action,
            "measured_action": self.measured_action,
            "action_mismatch": self.action_mismatch,
            "ratio_lower_bound": self.ratio_lower_bound,
            "ratio_error": self.ratio_error,
            "reference_ratio": self.reference_ratio,
            "inequality_holds": self.inequality_holds,
            "equality_case": self.equality_case,
            "certified": self.certified,
            "convention": self.convention,
        }


def _reference_radius(S0: ContactSurface) -> float:
    if S0.tag == "ball" or (S0.tag == "ellipsoid" and len(set(S0.axes)) == 1):
        e = np.zeros(2 * S0.n)
        e[0] = 1.0
        return 1.0 / math.sqrt(float(S0.hamiltonian.evaluate(e)))
    raise InputError("the periodic reference surface must be a round sphere")


def _sphere_argmax(H, samples: int, seed: int, keep: int = 4):
    """Refined maximiser of H on the unit sphere; ties broken lexicographically."""
    U = sphere_points(H.n, samples, seed)
    v = np.asarray(H.evaluate(U))
    cands = []
    for idx in np.argsort(-v)[:keep]:
        u = refine_sphere_extremum(H, U[idx], -1.0)
        cands.append((float(H.evaluate(u)), u))
    best = max(c[0] for c in cands)
    tied = [u for h, u in cands if h >= best - 1e-12 * abs(best)]
    tied.sort(key=lambda u: tuple(np.round(u, 9)))
    return best, tied[0]


def prop1_compare(surface: ContactSurface, reference: ContactSurface | None = None, *,
                  tol_defect: float = 1e-9, tol_equal: float = 1e-8, samples: int = 2048,
                  seed: int = 0, tol_closure: float = DEFAULT_TOL_CLOSURE) -> ComparisonCertificate:
    """Radial-map comparison of ``Sigma`` with a round sphere ``Sigma_0``.

    ``Sigma`` is rescaled to the volume of ``Sigma_0``; ``rho`` is its radial
    function on ``Sigma_0``. The Hopf circle of ``Sigma_0`` through the
    minimiser of ``rho`` is pushed to ``Sigma`` by ``delta(x) = rho(x) x``;
    under the commutation hypothesis it is a closed characteristic of action
    ``rho_min^e sys(Sigma_0)``, which bounds the systole and hence gives
    ``S(Sigma) >= vol / action^n >= S(Sigma_0)``.

    Raises
    ------
    HypothesisViolatedError
        When ``{H_Sigma, H_st}`` exceeds ``tol_defect``.
    """
    S = surface
    n = S.n
    S0 = reference if reference is not None else ContactSurface.ball(n)
    if S0.n != n:
        raise InputError("dimension mismatch between surface and reference")
    r0 = _reference_radius(S0)
    defect = commutation_defect(S.hamiltonian, hst(n), seed=seed)
    if defect > tol_defect:
        raise HypothesisViolatedError(
            f"commutation defect {defect:.3g} exceeds {tol_defect:.1g}: radial comparison not applicable",
            defect=defect,
        )
    conv = resolve_convention()
    e = conv.exponent
    vol0 = math.pi**n * r0 ** (2 * n) / math.factorial(n)
    sys0 = math.pi * r0**2
    vol = contact_volume(S, exponent=e)
    lam = (vol0 / vol.value) ** (1.0 / (2 * n))
    Sn = S.scaled(lam)
    Hn = Sn.hamiltonian

    # rho on Sigma_0: rho(x) = 1/sqrt(H_n(x)) for |x| = r0
    res = _DEFAULT_RES[n]
    mean = _sphere_mean_power(Hn.scaled(r0**2) if not _is_symbolic(Hn) else Hn.scaled(Fraction(r0) ** 2),
                              e * n, res)
    mean_err = 2 * n * vol.error / vol.value + 1e-12
    hmax, umax = _sphere_argmax(Hn, samples, seed)
    rho_unit_max = ContactSurface(Hn).radius_range(samples, seed)[1]
    rho_min = 1.0 / (r0 * math.sqrt(hmax))
    rho_max = rho_unit_max / r0
    x_star = r0 * umax
    predicted = rho_min**e * sys0

    # push the reference characteristic through delta (no integration involved)
    m = 256
    ts = np.arange(m) * (math.pi * r0**2) / m
    circle = np.stack([reference_flow_hst(x_star, t / r0**2) for t in ts])
    pushed = circle / np.sqrt(np.asarray(Hn.evaluate(circle)))[:, None]
    pushed_action = loop_action(pushed)

    # certify it is a closed characteristic of Sigma by shooting
    orbit = None
    measured = None
    ref = refine_orbit(Hn, rho_min * x_star, predicted, tol_closure)
    if ref is not None:
        x, T, resid, M = ref
        loop = sample_orbit(Hn, x, T, m=256)
        measured = loop_action(loop)
        orbit = ClosedOrbit(x, T, measured, resid, np.linalg.eigvals(M), 1, -1, "comparator", loop)
    certified = (measured is not None and abs(measured - predicted) < 1e-6
                 and abs(pushed_action - predicted) < 1e-6)
    ref_ratio = 1.0 / math.factorial(n)
    if measured is not None:
        lower = vol0 / measured**n
        lerr = lower * (2 * n * vol.error / vol.value + n * abs(measured - predicted) / measured) + 1e-12
        holds = lower >= ref_ratio - lerr
    else:
        lower = lerr = None
        holds = False
    equality = (rho_max - rho_min) < tol_equal
    return ComparisonCertificate(
        defect=defect, scale=lam, reference_radius=r0, reference_volume=vol0, volume=vol.value,
        volume_error=vol.error, mean_rho_power=mean, mean_error=mean_err, rho_min=rho_min, rho_max=rho_max,
        argmin=x_star, predicted_action=predicted, pushed_loop_action=pushed_action, measured_action=measured,
        orbit=orbit, ratio_lower_bound=lower, ratio_error=lerr, reference_ratio=ref_ratio,
        inequality_holds=holds, equality_case=equality, certified=certified, convention=conv.to_dict(),
    )


__all__ = [
    "ContactSurface",
    "VolumeEstimate",
    "SurfaceMetrics",
    "ComparisonCertificate",
    "Convention",
    "contact_volume",
    "resolve_convention",
    "systolic_ratio",
    "surface_systole",
    "normalize_volume",
    "commutation_defect",
    "prop1_compare",
    "sphere_grid",
    "Radial",
]
