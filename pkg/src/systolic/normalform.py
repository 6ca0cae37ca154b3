"""Resonant normal form along the periodic ``H_st`` flow and jet-prescribed deformations.

Given ``H_t = H_st + t H_1 + ... + t^N H_N`` in the exact class, the
normal form finds degree-2-homogeneous generators ``W_1..W_N`` such that,
with ``A_i`` the time-``t^i`` flow of ``W_i`` and ``phi_t = A_1 o ... o A_N``,

    H_t o phi_t = H_st + t E_1 + ... + t^N E_N + O(t^{N+1}),  {E_i, H_st} = 0.

Pull-backs are computed with the Lie series
``F o (time-s flow of W) = sum_j s^j/j! L_W^j F`` where ``L_W F = {F, W}``.
Every such flow preserves ``alpha`` because ``W`` is degree-2 homogeneous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegreeCapError, InputError, TRangeError
from .flow import flow_map, loop_action, sample_orbit
from .gaussq import GQ
from .geometry import ContactSurface, contact_volume, prop1_compare, resolve_convention, surface_systole
from .hamcore import DeformationSeries, PolyOverH, Radial, hst, sphere_points
from .orbits import refine_sphere_extremum

DEFAULT_DEGREE_CAP = 12
SLOPE_TS = tuple(2.0**-k for k in range(3, 9))
# quadrature resolution for volumes integrated through the inverse flows
DIRECT_VOLUME_RES = {1: (1, 128), 2: (24, 32), 3: (10, 12)}


# -- elementary operations ---------------------------------------------------------


def s1_average(G) -> PolyOverH:
    """Average of ``G`` over the ``H_st`` circle action: the weight-0 part."""
    return G.as_poly().weight_part(0)


def solve_homological(G) -> PolyOverH:
    """``W`` with ``{W, H_st} = G - avg(G)``.

    A weight-``k`` monomial has bracket eigenvalue ``-2ik``, so its
    coefficient is divided by ``-2ik``; resonant terms are dropped.
    """
    G = G.as_poly()
    n = G.n
    full = {}
    for e, c in G.full_terms().items():
        k = sum(e[:n]) - sum(e[n:])
        if k:
            full[e] = c / GQ(0, -2 * k)
    return PolyOverH.from_full(n, full)


def _check_cap(P: PolyOverH, cap: int) -> PolyOverH:
    if P.degree > cap:
        raise DegreeCapError(f"bracket nesting reached numerator degree {P.degree} > cap {cap}")
    return P


def lie_series(F, W, depth: int, s=1, degree_cap: int = DEFAULT_DEGREE_CAP) -> PolyOverH:
    """``sum_{j <= depth} s^j / j! L_W^j F``: the truncated pull-back of F by the time-s flow of W."""
    F = F.as_poly()
    W = W.as_poly()
    s = Fraction(s)
    out = F
    term = F
    for j in range(1, depth + 1):
        term = _check_cap(term.bracket(W), degree_cap) * (s / j)
        if term.is_zero():
            break
        out = out + term
    return out


def pullback_series(coeffs, W: PolyOverH, power: int, order: int, degree_cap: int = DEFAULT_DEGREE_CAP):
    """Coefficients of ``(sum_k t^k G_k) o A`` with ``A`` the time-``t^power`` flow of W, truncated at ``order``."""
    out = list(coeffs)
    if W.is_zero():
        return out
    for k, G in enumerate(coeffs):
        term = G
        j = 1
        while k + power * j <= order:
            term = _check_cap(term.bracket(W), degree_cap) * Fraction(1, j)
            if term.is_zero():
                break
            out[k + power * j] = out[k + power * j] + term
            j += 1
    return out


# -- results ------------------------------------------------------------------------


@dataclass(frozen=True)
class SymplecticJet:
    """``phi_t = A_1 o ... o A_N``, ``A_i`` the time-``t^i`` flow of ``W_i``."""

    generators: tuple

    @property
    def order(self) -> int:
        return len(self.generators)

    @property
    def n(self) -> int:
        return self.generators[0].n

    def is_identity(self) -> bool:
        return all(W.is_zero() for W in self.generators)

    def apply(self, X, t: float) -> np.ndarray:
        """``phi_t(X)``; ``A_N`` acts first."""
        Y = np.asarray(X, dtype=np.float64)
        for i in range(self.order, 0, -1):
            W = self.generators[i - 1]
            if not W.is_zero():
                Y = flow_map(W, Y, t**i)
        return Y

    def inverse(self, X, t: float) -> np.ndarray:
        """``phi_t^{-1}(X)``: inverse-time flows in reversed order."""
        Y = np.asarray(X, dtype=np.float64)
        for i in range(1, self.order + 1):
            W = self.generators[i - 1]
            if not W.is_zero():
                Y = flow_map(W, Y, -(t**i))
        return Y

    def pullback(self, series: DeformationSeries, degree_cap: int = DEFAULT_DEGREE_CAP) -> list:
        """Exact coefficients of ``H_t o phi_t`` up to the jet order."""
        N = max(self.order, series.order)
        coeffs = list(series.coefficients()) + [PolyOverH.zero(series.n)] * (N - series.order)
        for i, W in enumerate(self.generators, start=1):
            coeffs = pullback_series(coeffs, W, i, N, degree_cap)
        return coeffs


@dataclass(frozen=True)
class ResonantSeries:
    """``H_st + t E_1 + ... + t^N E_N`` with every ``E_i`` commuting with ``H_st``."""

    base: PolyOverH
    terms: tuple

    @property
    def order(self) -> int:
        return len(self.terms)

    def is_exactly_resonant(self) -> bool:
        H0 = self.base
        return all(E.bracket(H0).is_zero() for E in self.terms)

    def at(self, t) -> PolyOverH:
        t = Fraction(t)
        out = self.base
        for i, E in enumerate(self.terms, start=1):
            out = out + E * t**i
        return out

    def evaluate(self, t: float, X):
        v = np.asarray(self.base.evaluate(X), dtype=np.float64)
        for i, E in enumerate(self.terms, start=1):
            v = v + t**i * np.asarray(E.evaluate(X))
        return v


@dataclass
class NormalFormReport:
    order: int
    max_degree: int
    resonant_exact: bool
    ts: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    slope: float | None = None

    def to_dict(self) -> dict:
        return {"order": self.order, "max_degree": self.max_degree, "resonant_exact": self.resonant_exact,
                "ts": self.ts, "residuals": self.residuals, "slope": self.slope}


def loglog_slope(ts, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ts)``."""
    return float(np.polyfit(np.log(ts), np.log(values), 1)[0])


def _check_base(series: DeformationSeries) -> None:
    if series.base != hst(series.n):
        raise InputError("normal form needs the base Hamiltonian H_st")


def normal_form(series: DeformationSeries, N: int | None = None, *, degree_cap: int = DEFAULT_DEGREE_CAP,
                residual: bool = True, samples: int = 200, seed: int = 0, ts=SLOPE_TS):
    """Order-``N`` resonant normal form of ``series``.

    Returns
    -------
    (SymplecticJet, ResonantSeries, NormalFormReport)
        The report carries the sphere-sup residual
        ``|H_t o phi_t - (H_st + sum t^i E_i)|`` at each ``t`` in ``ts`` and
        its log-log slope (expected ``N + 1``).

    Raises
    ------
    DegreeCapError
        If nested brackets exceed ``degree_cap``.
    """
    _check_base(series)
    N = series.order if N is None else int(N)
    if N < 1:
        raise InputError("order N must be positive")
    n = series.n
    jet = list(series.jet[:N]) + [PolyOverH.zero(n)] * max(0, N - series.order)
    coeffs = [series.base] + jet
    for h in coeffs:
        _check_cap(h, degree_cap)
    gens = []
    Es = []
    for i in range(1, N + 1):
        R = coeffs[i]
        E = s1_average(R)
        W = solve_homological(R)
        coeffs = pullback_series(coeffs, W, i, N, degree_cap)
        if coeffs[i] != E:
            raise AssertionError("homological step did not remove the non-resonant part")
        gens.append(W)
        Es.append(E)
    res = ResonantSeries(series.base, tuple(Es))
    exact = res.is_exactly_resonant()
    if not exact:
        raise AssertionError("normal form terms fail to commute with H_st")
    sj = SymplecticJet(tuple(gens))
    maxdeg = max([P.degree for P in gens + Es] + [0])
    report = NormalFormReport(N, maxdeg, exact)
    if residual:
        truncated = DeformationSeries(series.base, tuple(jet))
        X = sphere_points(n, samples, seed)
        vals = [conjugacy_residual(truncated, sj, res, t, X) for t in ts]
        report.ts = [float(t) for t in ts]
        report.residuals = vals
        report.slope = loglog_slope(ts, vals) if min(vals) > 0 else None
    return sj, res, report


def conjugacy_residual(series: DeformationSeries, jet: SymplecticJet, res: ResonantSeries, t: float, X) -> float:
    """``sup_X |H_t(phi_t(x)) - (H_st + sum t^i E_i)(x)|``."""
    Y = jet.apply(X, t)
    lhs = np.asarray(series.evaluate(t, Y))
    rhs = np.asarray(res.evaluate(t, X))
    return float(np.max(np.abs(lhs - rhs)))


# -- the deformed family -----------------------------------------------------------------


@dataclass
class TheoremPoint:
    t: float
    volume: float
    volume_error: float
    resonant_volume: float
    systole: float | None
    systole_error: float
    ratio: float | None
    ratio_error: float | None
    ratio_lower_bound: float | None
    reference_ratio: float
    certified: bool
    transported_action: float | None
    action_defect: float | None
    surface_defect: float | None

    @property
    def holds(self) -> bool:
        if self.ratio is None:
            return False
        return self.ratio >= self.reference_ratio - (self.ratio_error or 0.0)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["holds"] = self.holds
        return d


class TheoremFamily:
    """``t -> Sigma_t = {H_t = 1}`` with ``H_t = H_res,t o phi_t^{-1}``.

    ``H_t`` realises the prescribed jet to order N; the resonant surfaces
    ``{H_res,t = 1}`` are circular and are the preimages of ``Sigma_t``
    under the alpha-preserving map ``phi_t``.
    """

    def __init__(self, series: DeformationSeries, N: int | None = None, degree_cap: int = DEFAULT_DEGREE_CAP,
                 check_samples: int = 2048, seed: int = 0):
        self.series = series
        self.jet, self.resonant, self.report = normal_form(series, N, degree_cap=degree_cap, residual=False)
        self.N = self.jet.order
        self.n = series.n
        self._X = sphere_points(self.n, check_samples, seed)
        self.t_max = self._max_admissible_t()

    def _positive(self, t: float) -> bool:
        v = self.resonant.evaluate(t, self._X)
        if float(np.min(v)) <= 0.0:
            return False
        # sharpen the sampled minimum by a local search on the sphere
        Hr = self.resonant.at(Fraction(t))
        u = refine_sphere_extremum(Hr, self._X[int(np.argmin(v))], 1.0)
        return float(Hr.evaluate(u)) > 0.0

    def _max_admissible_t(self, hi: float = 64.0) -> float:
        """Largest ``t <= hi`` with the resonant Hamiltonian positive on the sphere for all of ``[0, t]``."""
        prev = 0.0
        t = 2.0**-12
        while t < hi:
            if not self._positive(t):
                return _bisect_positive(self._positive, prev, t)
            prev, t = t, t * 1.25
        return hi if self._positive(hi) else _bisect_positive(self._positive, prev, hi)

    def check_t(self, t: float) -> None:
        if abs(t) > self.t_max or not self._positive(t):
            raise TRangeError(f"H_t loses positivity at t={t:.6g}; maximal admissible t is {self.t_max:.6g}",
                              t_max=self.t_max)

    def resonant_hamiltonian(self, t) -> PolyOverH:
        return self.resonant.at(Fraction(t))

    def hamiltonian(self, t: float) -> Radial:
        """``H_t`` as a numerically evaluable Hamiltonian."""
        t = float(t)
        self.check_t(t)
        Hr = self.resonant_hamiltonian(t)
        jet = self.jet
        return Radial(self.n, function=lambda X: Hr.evaluate(jet.inverse(X, t)), label=f"theorem t={t:g}")

    def surface(self, t: float) -> ContactSurface:
        return ContactSurface(self.hamiltonian(t), "generic")

    def jet_mismatch(self, t: float, samples: int = 200, seed: int = 1) -> float:
        """``sup_sphere |H_t - (H_st + t H_1 + ... + t^N H_N)|``."""
        X = sphere_points(self.n, samples, seed)
        Ht = np.asarray(self.hamiltonian(t).evaluate(X))
        target = np.asarray(self.series.evaluate(t, X))
        return float(np.max(np.abs(Ht - target)))

    def metrics_at(self, t: float, seeds: int = 8, seed: int = 0, search: bool = True) -> TheoremPoint:
        """Volume, systole and ratio of ``Sigma_t``.

        The volume is integrated directly on ``Sigma_t`` (inverse flows at
        the quadrature nodes) and compared with the resonant surface. The
        systole is that of the resonant surface, certified by the radial
        comparator; its short orbit is transported by ``phi_t`` and its
        action re-measured on ``Sigma_t``.
        """
        t = float(t)
        self.check_t(t)
        n = self.n
        conv = resolve_convention()
        Hr = self.resonant_hamiltonian(t)
        Sres = ContactSurface.circular(Hr)
        vol = contact_volume(ContactSurface(self.hamiltonian(t)), resolution=DIRECT_VOLUME_RES[n])
        vol_res = contact_volume(Sres)
        cert = prop1_compare(Sres)
        est = surface_systole(Sres, seeds=seeds, seed=seed, search=search)
        sys_val = est.value
        transported = defect = surf_def = None
        if est.known:
            o = min(est.minimizers, key=lambda o: (o.period, o.seed_index))
            loop = sample_orbit(Hr, o.seed, o.period, m=256)
            moved = self.jet.apply(loop, t)
            transported = loop_action(moved)
            defect = abs(transported - o.action)
            surf_def = float(np.max(np.abs(np.asarray(self.hamiltonian(t).evaluate(moved)) - 1.0)))
        ref_ratio = 1.0 / math.factorial(n)
        if sys_val is not None:
            ratio = vol.value / sys_val**n
            err = ratio * (vol.error / vol.value + abs(vol.value - vol_res.value) / vol.value
                           + n * (est.error + (defect or 0.0)) / sys_val)
        else:
            ratio = err = None
        return TheoremPoint(
            t=t, volume=vol.value, volume_error=vol.error + abs(vol.value - vol_res.value),
            resonant_volume=vol_res.value, systole=sys_val, systole_error=est.error if est.known else float("nan"),
            ratio=ratio, ratio_error=err, ratio_lower_bound=cert.ratio_lower_bound, reference_ratio=ref_ratio,
            certified=cert.certified and est.certified, transported_action=transported, action_defect=defect,
            surface_defect=surf_def,
        )


def _bisect_positive(pred, lo: float, hi: float, iters: int = 60) -> float:
    """Largest ``t`` in ``[lo, hi]`` with ``pred`` true on ``[lo, t]`` (pred(lo) assumed true)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def build_theorem_deformation(jet, N: int | None = None, n: int | None = None, **kwargs) -> TheoremFamily:
    """Deformed family realising a prescribed jet ``[H_1, ..., H_N]``.

    ``jet`` is a :class:`DeformationSeries` or a list of exact Hamiltonians
    (then ``n`` is taken from them).
    """
    if not isinstance(jet, DeformationSeries):
        jet = list(jet)
        if not jet:
            raise InputError("empty jet")
        n = n or jet[0].n
        jet = DeformationSeries(hst(n), tuple(h.as_poly() for h in jet))
    return TheoremFamily(jet, N, **kwargs)


__all__ = [
    "s1_average",
    "solve_homological",
    "lie_series",
    "pullback_series",
    "normal_form",
    "conjugacy_residual",
    "loglog_slope",
    "SymplecticJet",
    "ResonantSeries",
    "NormalFormReport",
    "TheoremFamily",
    "TheoremPoint",
    "build_theorem_deformation",
]
