"""Degree-2-homogeneous Hamiltonians on R^{2n} and their exact Poisson algebra.

Phase points are numpy arrays ``x = (q_1..q_n, p_1..p_n)``; the complex
coordinates are ``z_j = q_j + i p_j``. Three representations are provided:

``PolyOverH``
    finite sums ``sum_m P_m / H_st**(m-1)`` with ``P_m`` a homogeneous
    polynomial of degree ``2m`` in ``(z, zbar)``. Coefficients are exact
    Gaussian rationals and every value is kept in a canonical reduced form,
    so equality and vanishing are decided exactly. The class is closed under
    the Poisson bracket.
``Quadratic``
    ``x^T A x`` for a symmetric matrix ``A``; converts exactly to
    ``PolyOverH``.
``Radial``
    ``H(x) = |x|^2 / r(x/|x|)^2`` for a profile ``r`` on the unit sphere,
    or any numerically evaluable degree-2-homogeneous function. Only
    evaluation (and a gradient when one is supplied) is available.

The Poisson bracket convention is
``{F, G} = sum_i dF/dq_i dG/dp_i - dF/dp_i dG/dq_i = dF(X_G)`` with
``X_G = (dG/dp, -dG/dq)``. In complex coordinates
``{F, G} = 2i sum_j (F_zbar_j G_z_j - F_z_j G_zbar_j)`` and a monomial
``z^a zbar^b`` satisfies ``{z^a zbar^b, H_st} = -2i(|a|-|b|) z^a zbar^b``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import DomainError, StarShapednessError, UnsupportedRepresentationError
from .gaussq import GQ

__all__ = [
    "PolyOverH",
    "Quadratic",
    "Radial",
    "RadialProfile",
    "DeformationSeries",
    "Table",
    "hst",
    "ellipsoid_hamiltonian",
    "phase_point",
    "to_complex",
    "from_complex",
    "evaluate",
    "gradient",
    "hamiltonian_vector_field",
    "poisson_bracket",
    "numeric_bracket",
    "radial_profile",
    "sphere_points",
]


# -- phase points ---------------------------------------------------------


def phase_point(q, p) -> np.ndarray:
    q = np.atleast_1d(np.asarray(q, dtype=np.float64))
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if q.shape != p.shape or q.ndim != 1 or q.size < 1:
        raise ValueError("q and p must be vectors of the same length n >= 1")
    return np.concatenate([q, p])


def to_complex(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def from_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    return np.concatenate([z.real, z.imag], axis=-1)


def sphere_points(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit sphere S^{2n-1}.

    Scrambled Halton points pushed through the inverse normal CDF and
    normalised.
    """
    from scipy.stats import norm, qmc

    u = qmc.Halton(d=2 * n, scramble=True, seed=seed).random(count)
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


# -- numeric tables -------------------------------------------------------


@dataclass(frozen=True)
class Table:
    """Real monomial table ``sum_t coef[t] x**exps[t] / |x|**(2 spow[t])``."""

    coef: np.ndarray
    exps: np.ndarray
    spow: np.ndarray

    @property
    def dim(self) -> int:
        return self.exps.shape[1]

    @property
    def args(self):
        return self.coef, self.exps, self.spow


def _make_table(entries: dict, d: int) -> Table:
    items = sorted((k, v) for k, v in entries.items() if v != 0)
    if not items:
        return Table(np.zeros(0), np.zeros((0, d), dtype=np.int64), np.zeros(0, dtype=np.int64))
    coef = np.array([float(v) for _, v in items], dtype=np.float64)
    exps = np.array([k[0] for k, _ in items], dtype=np.int64).reshape(len(items), d)
    spow = np.array([k[1] for k, _ in items], dtype=np.int64)
    return Table(coef, exps, spow)


_BINOM_CACHE: dict = {}


def _real_expansion(a: int, b: int):
    """``(q + ip)^a (q - ip)^b`` as ``{(eq, ep): Gaussian integer}``."""
    key = (a, b)
    if key in _BINOM_CACHE:
        return _BINOM_CACHE[key]
    out: dict = defaultdict(lambda: [0, 0])
    ipow = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    for r in range(a + 1):
        for s in range(b + 1):
            c = math.comb(a, r) * math.comb(b, s)
            # i^r (-i)^s = i^(r + 3s)
            re, im = ipow[(r + 3 * s) % 4]
            slot = out[(a + b - r - s, r + s)]
            slot[0] += c * re
            slot[1] += c * im
    res = {k: tuple(v) for k, v in out.items() if v != [0, 0]}
    _BINOM_CACHE[key] = res
    return res


def _check_point(X):
    X = np.asarray(X, dtype=np.float64)
    squeeze = X.ndim == 1
    X2 = np.atleast_2d(X)
    if np.any(np.einsum("ij,ij->i", X2, X2) == 0.0):
        raise DomainError("Hamiltonians are only defined away from the origin")
    return X2, squeeze


class _Hamiltonian:
    """Shared numeric interface."""

    n: int

    def table(self) -> Table:
        raise UnsupportedRepresentationError(f"{type(self).__name__} has no polynomial table")

    def evaluate(self, X):
        X2, squeeze = _check_point(X)
        v = _kernels.table_eval(*self.table().args, X2)
        return float(v[0]) if squeeze else v

    def gradient(self, X):
        X2, squeeze = _check_point(X)
        g = _kernels.table_grad(*self.table().args, X2)
        return g[0] if squeeze else g

    def hessian(self, X):
        X2, squeeze = _check_point(X)
        h = _kernels.table_hess(*self.table().args, X2)
        return h[0] if squeeze else h

    def vector_field(self, X):
        G = np.atleast_2d(self.gradient(X))
        n = self.n
        F = np.concatenate([G[:, n:], -G[:, :n]], axis=1)
        return F[0] if np.asarray(X).ndim == 1 else F

    def __call__(self, X):
        return self.evaluate(X)

    def check_star_shaped(self, count: int = 512, seed: int = 0) -> float:
        """Minimum of H over sampled unit vectors; raises if not positive."""
        vals = np.asarray(self.evaluate(sphere_points(self.n, count, seed)))
        lo = float(vals.min())
        if not np.all(np.isfinite(vals)) or lo <= 0.0:
            raise StarShapednessError(f"H is not positive on the unit sphere (min sample {lo:.3g})")
        return lo


# -- exact polynomial-over-H_st class ---------------------------------------


def _key_degree(e) -> int:
    return sum(e)


def _conj_key(e, n):
    return e[n:] + e[:n]


def _reduce(full: dict, n: int) -> dict:
    """Canonical form: divide every level by H_st as far as possible.

    A term ``c z^a zbar^b`` with ``|a|+|b| = 2m`` stands for
    ``c z^a zbar^b / H_st^(m-1)``. Each monomial divisible by ``z_1 zbar_1``
    is rewritten through ``z_1 zbar_1 = H_st - sum_{j>1} z_j zbar_j``, which
    moves a quotient one level down. The remainder at every level has no
    monomial divisible by ``z_1 zbar_1``, which makes the representation
    unique.
    """
    levels: dict = defaultdict(dict)
    for e, c in full.items():
        deg = _key_degree(e)
        if deg % 2:
            raise ValueError("odd-degree monomial cannot be degree-2 homogeneous")
        _acc(levels[deg], e, c)
    out = {}
    top = max(levels, default=0)
    for deg in range(top, -1, -2):
        P = levels[deg]
        if deg > 0 and P:
            lower = levels[deg - 2]
            rmax = max(min(e[0], e[n]) for e in P)
            # eliminating a monomial with min(a_1, b_1) = r only creates
            # monomials with r - 1, so one sweep per r suffices
            for r in range(rmax, 0, -1):
                for mu in [e for e in P if min(e[0], e[n]) == r]:
                    c = P.pop(mu)
                    nu = list(mu)
                    nu[0] -= 1
                    nu[n] -= 1
                    nu = tuple(nu)
                    _acc(lower, nu, c)
                    for j in range(1, n):
                        m2 = list(nu)
                        m2[j] += 1
                        m2[n + j] += 1
                        _acc(P, tuple(m2), -c)
        out.update(P)
    return out


def _coerce_coef(c) -> GQ:
    if isinstance(c, GQ):
        return c
    if isinstance(c, (tuple, list)) and len(c) == 2:
        return GQ(c[0], c[1])
    return GQ.coerce(c)


class PolyOverH(_Hamiltonian):
    """Exact element of the class ``sum_m P_m / H_st^(m-1)``.

    Parameters
    ----------
    n : int
        Number of degrees of freedom.
    terms : mapping or iterable
        Pairs ``((a, b), c)``. Each pair contributes the real function
        ``c z^a zbar^b + conj(c) z^b zbar^a`` when ``a != b`` and
        ``c |z^a|^2`` (``c`` real) when ``a == b``. So ``Re(z_1^4)`` is
        ``{((4, 0), (0, 0)): 1/2}`` in n=2 coordinates. Keys may be given in
        either order; only one of ``(a, b)``, ``(b, a)`` may appear.
    """

    def __init__(self, n: int, terms=(), *, _full=None):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = int(n)
        if _full is not None:
            self._full = _full
            return
        full: dict = {}
        items = terms.items() if hasattr(terms, "items") else terms
        seen = set()
        for (a, b), c in items:
            a, b = tuple(int(v) for v in a), tuple(int(v) for v in b)
            if len(a) != n or len(b) != n or min(a + b) < 0:
                raise ValueError(f"bad multi-index pair {a}, {b} for n={n}")
            key = (a, b) if a >= b else (b, a)
            if key in seen:
                raise ValueError(f"term {key} given twice")
            seen.add(key)
            c = _coerce_coef(c)
            if a == b:
                if not c.is_real():
                    raise ValueError("diagonal terms z^a zbar^a need a real coefficient")
                _acc(full, a + b, c)
            else:
                if a < b:
                    c = c.conj()
                    a, b = b, a
                _acc(full, a + b, c)
                _acc(full, b + a, c.conj())
        self._full = _reduce(full, self.n)

    # construction helpers
    @classmethod
    def from_full(cls, n: int, full: dict, check: bool = True) -> "PolyOverH":
        """Build from a full (both conjugates present) exponent dictionary."""
        full = {tuple(e): _coerce_coef(c) for e, c in full.items() if not _coerce_coef(c).is_zero()}
        if check:
            for e, c in full.items():
                ce = _conj_key(e, n)
                if full.get(ce, GQ(0)) != c.conj():
                    raise ValueError(f"coefficients of {e} and its conjugate are not paired")
        return cls(n, _full=_reduce(full, n))

    @classmethod
    def hst(cls, n: int) -> "PolyOverH":
        return cls(n, _full={(0,) * (2 * n): GQ(1)})

    @classmethod
    def zero(cls, n: int) -> "PolyOverH":
        return cls(n, _full={})

    # structure
    def full_terms(self) -> dict:
        """Canonical full dictionary ``{a + b: c}`` (both conjugates)."""
        return dict(self._full)

    def terms(self):
        """Canonical half terms ``((a, b), c)`` with ``a >= b``, sorted."""
        n = self.n
        out = []
        for e, c in self._full.items():
            a, b = e[:n], e[n:]
            if a >= b:
                out.append(((a, b), c))
        return sorted(out)

    @property
    def degree(self) -> int:
        """Largest numerator degree ``2m`` in the canonical form."""
        return max((_key_degree(e) for e in self._full), default=0)

    def is_zero(self) -> bool:
        return not self._full

    def is_resonant(self) -> bool:
        """True when every monomial has weight ``|a| - |b| = 0``."""
        n = self.n
        return all(sum(e[:n]) == sum(e[n:]) for e in self._full)

    def coefficient_bound(self) -> Fraction:
        """``sum |re| + |im|`` over full terms; bounds ``sup_{S^{2n-1}} |H|``."""
        return sum((c.abs_bound() for c in self._full.values()), Fraction(0))

    # arithmetic
    def _same(self, other):
        if not isinstance(other, PolyOverH):
            if isinstance(other, Quadratic):
                other = other.as_poly()
            else:
                return NotImplemented
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        return other

    def __add__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        full = dict(self._full)
        for e, c in other._full.items():
            _acc(full, e, c)
        return PolyOverH(self.n, _full=_reduce(full, self.n))

    def __sub__(self, other):
        other = self._same(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __neg__(self):
        return PolyOverH(self.n, _full={e: -c for e, c in self._full.items()})

    def __mul__(self, s):
        if isinstance(s, (PolyOverH, Quadratic)):
            raise TypeError("use mul_over_hst for products inside the class")
        s = Fraction(s) if not isinstance(s, Fraction) else s
        if s == 0:
            return PolyOverH.zero(self.n)
        sc = GQ(s)
        return PolyOverH(self.n, _full={e: c * sc for e, c in self._full.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, Quadratic):
            other = other.as_poly()
        if not isinstance(other, PolyOverH):
            return NotImplemented
        return self.n == other.n and self._full == other._full

    def __hash__(self):
        return hash((self.n, frozenset(self._full.items())))

    def __repr__(self):
        return f"PolyOverH(n={self.n}, terms={len(self._full)}, degree={self.degree})"

    def weight_part(self, k: int) -> "PolyOverH":
        """Terms of weight ``|a| - |b| = +-k`` (real part of the weight-k block)."""
        n = self.n
        return PolyOverH(
            n, _full={e: c for e, c in self._full.items() if abs(sum(e[:n]) - sum(e[n:])) == abs(k)}
        )

    def mul_over_hst(self, other: "PolyOverH") -> "PolyOverH":
        """The product ``self * other / H_st``, again degree-2 homogeneous."""
        other = self._same(other)
        full: dict = {}
        for e, c in self._full.items():
            for f, d in other._full.items():
                _acc(full, tuple(x + y for x, y in zip(e, f)), c * d)
        return PolyOverH(self.n, _full=_reduce(full, self.n))

    def bracket(self, other: "PolyOverH") -> "PolyOverH":
        """Exact Poisson bracket ``{self, other}``."""
        other = self._same(other)
        return PolyOverH(self.n, _full=_reduce(_bracket_full(self._full, other._full, self.n), self.n))

    def conjugate_pairing_ok(self) -> bool:
        n = self.n
        return all(self._full.get(_conj_key(e, n), GQ(0)) == c.conj() for e, c in self._full.items())

    def scaled(self, factor) -> "PolyOverH":
        """``factor * H`` with ``factor`` converted exactly to a rational."""
        return self * Fraction(factor)

    def as_poly(self) -> "PolyOverH":
        return self

    # numerics
    def table(self) -> Table:
        return self._table

    @cached_property
    def _table(self) -> Table:
        n = self.n
        entries: dict = defaultdict(Fraction)
        for e, c in self._full.items():
            level = _key_degree(e) // 2 - 1
            a, b = e[:n], e[n:]
            # product over j of (q_j + i p_j)^a_j (q_j - i p_j)^b_j
            acc = {((0,) * n, (0,) * n): (1, 0)}
            for j in range(n):
                exp_j = _real_expansion(a[j], b[j])
                nxt: dict = defaultdict(lambda: [0, 0])
                for (eq, ep), (ur, ui) in acc.items():
                    for (dq, dp), (vr, vi) in exp_j.items():
                        eq2 = eq[:j] + (eq[j] + dq,) + eq[j + 1:]
                        ep2 = ep[:j] + (ep[j] + dp,) + ep[j + 1:]
                        slot = nxt[(eq2, ep2)]
                        slot[0] += ur * vr - ui * vi
                        slot[1] += ur * vi + ui * vr
                acc = {k: tuple(v) for k, v in nxt.items()}
            for (eq, ep), (wr, wi) in acc.items():
                # real part of c * w; imaginary parts cancel between conjugates
                val = c.re * wr - c.im * wi
                if val:
                    entries[(eq + ep, level)] += val
        return _make_table(entries, 2 * n)


def _acc(d: dict, key, c: GQ):
    if key in d:
        v = d[key] + c
        if v.is_zero():
            del d[key]
        else:
            d[key] = v
    elif not c.is_zero():
        d[key] = c


_TWO_I = GQ(0, 2)


def _bracket_full(F: dict, G: dict, n: int) -> dict:
    """Bracket of two full dictionaries, before reduction.

    For ``F = f / S^k`` and ``G = g / S^l`` (monomials, ``S = H_st``)

        {F, G} = [S {f, g} + 2i (l w_f - k w_g) f g] / S^(k+l+1)

    where ``w`` is the weight ``|a| - |b|``. The numerator has degree
    ``deg f + deg g``, so the implicit level bookkeeping is automatic.
    """
    out: dict = {}
    for e, c in F.items():
        a, b = e[:n], e[n:]
        k = _key_degree(e) // 2 - 1
        wf = sum(a) - sum(b)
        for f, d in G.items():
            cc, dd = f[:n], f[n:]
            l = _key_degree(f) // 2 - 1
            wg = sum(cc) - sum(dd)
            cd = c * d
            base = tuple(x + y for x, y in zip(e, f))
            lin = l * wf - k * wg
            if lin:
                _acc(out, base, cd * _TWO_I * lin)
            for j in range(n):
                s = b[j] * cc[j] - a[j] * dd[j]
                if not s:
                    continue
                coef = cd * _TWO_I * s
                for m in range(n):
                    key = list(base)
                    key[j] -= 1
                    key[n + j] -= 1
                    key[m] += 1
                    key[n + m] += 1
                    _acc(out, tuple(key), coef)
    return out


# -- quadratic forms --------------------------------------------------------


class Quadratic(_Hamiltonian):
    """``H(x) = x^T A x`` with ``A`` symmetric (entries kept as rationals)."""

    def __init__(self, matrix):
        M = [[Fraction(v) for v in row] for row in matrix]
        d = len(M)
        if d % 2 or any(len(r) != d for r in M):
            raise ValueError("matrix must be square of even size 2n")
        for i in range(d):
            for j in range(d):
                if M[i][j] != M[j][i]:
                    raise ValueError("matrix must be symmetric")
        self.matrix = M
        self.n = d // 2

    @cached_property
    def array(self) -> np.ndarray:
        return np.array([[float(v) for v in r] for r in self.matrix])

    def as_poly(self) -> PolyOverH:
        return self._poly

    @cached_property
    def _poly(self) -> PolyOverH:
        n = self.n
        # x_i as a linear form in (z, zbar)
        half = Fraction(1, 2)
        lin = []
        for i in range(2 * n):
            j = i % n
            ez = tuple(1 if t == j else 0 for t in range(n))
            zero = (0,) * n
            if i < n:  # q_j = (z_j + zbar_j)/2
                lin.append({ez + zero: GQ(half), zero + ez: GQ(half)})
            else:  # p_j = (z_j - zbar_j)/(2i) = -i/2 z_j + i/2 zbar_j
                lin.append({ez + zero: GQ(0, -half), zero + ez: GQ(0, half)})
        full: dict = {}
        for i in range(2 * n):
            for j in range(2 * n):
                a_ij = self.matrix[i][j]
                if a_ij == 0:
                    continue
                for e, c in lin[i].items():
                    for f, d in lin[j].items():
                        _acc(full, tuple(x + y for x, y in zip(e, f)), c * d * a_ij)
        return PolyOverH(n, _full=_reduce(full, n))

    def table(self) -> Table:
        return self._table

    @cached_property
    def _table(self) -> Table:
        d = 2 * self.n
        entries: dict = defaultdict(Fraction)
        for i in range(d):
            for j in range(d):
                if self.matrix[i][j] != 0:
                    e = [0] * d
                    e[i] += 1
                    e[j] += 1
                    entries[(tuple(e), 0)] += self.matrix[i][j]
        return _make_table(entries, d)

    def scaled(self, factor) -> "Quadratic":
        f = Fraction(factor)
        return Quadratic([[v * f for v in r] for r in self.matrix])

    def bracket(self, other):
        return self.as_poly().bracket(other)

    def __eq__(self, other):
        if isinstance(other, (Quadratic, PolyOverH)):
            return self.as_poly() == (other.as_poly() if isinstance(other, Quadratic) else other)
        return NotImplemented

    def __hash__(self):
        return hash(self.as_poly())

    def __repr__(self):
        return f"Quadratic(n={self.n})"


# -- radial / numeric representation ------------------------------------------


class Radial(_Hamiltonian):
    """Numerically evaluable degree-2-homogeneous Hamiltonian.

    Either ``profile`` (a function of unit vectors, shape (m, 2n) -> (m,),
    returning the boundary radius ``r(u)``) or ``function`` (H itself on
    arbitrary nonzero points) must be given. ``gradient_function`` is the
    closed-form gradient of H; without it gradient-based operations raise
    ``UnsupportedRepresentationError``.
    """

    def __init__(self, n: int, profile=None, function=None, gradient_function=None, label: str = "radial"):
        if (profile is None) == (function is None):
            raise ValueError("give exactly one of profile or function")
        self.n = int(n)
        self._profile = profile
        self._function = function
        self._grad = gradient_function
        self.label = label

    def evaluate(self, X):
        X2, squeeze = _check_point(X)
        if self._function is not None:
            v = np.asarray(self._function(X2), dtype=np.float64)
        else:
            r2 = np.einsum("ij,ij->i", X2, X2)
            U = X2 / np.sqrt(r2)[:, None]
            v = r2 / np.asarray(self._profile(U), dtype=np.float64) ** 2
        return float(v[0]) if squeeze else v

    def gradient(self, X):
        if self._grad is None:
            raise UnsupportedRepresentationError("radial Hamiltonian without a closed-form gradient")
        X2, squeeze = _check_point(X)
        g = np.asarray(self._grad(X2), dtype=np.float64)
        return g[0] if squeeze else g

    def hessian(self, X):
        raise UnsupportedRepresentationError("radial Hamiltonians have no Hessian")

    def scaled(self, factor) -> "Radial":
        f = float(factor)
        grad = None if self._grad is None else (lambda X, g=self._grad: f * np.asarray(g(X)))
        return Radial(self.n, function=lambda X, h=self.evaluate: f * np.asarray(h(X)), gradient_function=grad,
                      label=self.label)

    def bracket(self, other):
        raise UnsupportedRepresentationError("symbolic bracket needs Quadratic or PolyOverH inputs")

    def __repr__(self):
        return f"Radial(n={self.n}, {self.label})"


# -- module-level operations --------------------------------------------------


def hst(n: int) -> PolyOverH:
    """``H_st = sum |z_j|^2``; all its orbits are closed with period pi."""
    return PolyOverH.hst(n)


def ellipsoid_hamiltonian(axes) -> PolyOverH:
    """``sum |z_j|^2 / a_j``; bounds the ellipsoid E(a_1, ..., a_n)."""
    axes = [Fraction(a) for a in axes]
    n = len(axes)
    terms = {}
    for j, a in enumerate(axes):
        if a <= 0:
            raise StarShapednessError("ellipsoid axes must be positive")
        e = tuple(1 if i == j else 0 for i in range(n))
        terms[(e, e)] = 1 / a
    return PolyOverH(n, terms)


def evaluate(H, x):
    """H(x); raises ``DomainError`` at the origin."""
    return H.evaluate(x)


def gradient(H, x):
    return H.gradient(x)


def hamiltonian_vector_field(H, x):
    """``(dH/dp, -dH/dq)`` at x."""
    return H.vector_field(x)


def poisson_bracket(F, G) -> PolyOverH:
    """Exact ``{F, G}`` for Quadratic / PolyOverH inputs."""
    for h in (F, G):
        if isinstance(h, Radial):
            raise UnsupportedRepresentationError("symbolic bracket needs Quadratic or PolyOverH inputs")
    F = F.as_poly()
    G = G.as_poly()
    return F.bracket(G)


def numeric_bracket(F, G, X) -> np.ndarray:
    """Pointwise ``dF(X_G)`` from numeric gradients."""
    gF = np.atleast_2d(F.gradient(X))
    XG = np.atleast_2d(G.vector_field(X))
    out = np.einsum("ij,ij->i", gF, XG)
    return out[0] if np.asarray(X).ndim == 1 else out


class RadialProfile:
    """``rho = 1/sqrt(H)`` on a round base sphere of radius ``base_radius``.

    ``delta(x) = rho(x) x`` maps the base sphere onto ``{H = 1}``.
    """

    def __init__(self, H, base_radius: float = 1.0):
        self.hamiltonian = H
        self.base_radius = float(base_radius)

    def _on_base(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=np.float64))
        return self.base_radius * U / np.linalg.norm(U, axis=1, keepdims=True)

    def rho(self, U):
        X = self._on_base(U)
        vals = np.asarray(self.hamiltonian.evaluate(X), dtype=np.float64)
        if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            raise StarShapednessError("nonpositive H sample: surface is not star-shaped")
        out = 1.0 / np.sqrt(vals)
        return out[0] if np.asarray(U).ndim == 1 else out

    def delta(self, U):
        X = self._on_base(U)
        out = np.atleast_1d(self.rho(X))[:, None] * X
        return out[0] if np.asarray(U).ndim == 1 else out

    __call__ = rho


def radial_profile(H, base_radius: float = 1.0, check_samples: int = 256) -> RadialProfile:
    """``rho = 1/sqrt(H)`` restricted to the sphere; validates positivity."""
    prof = RadialProfile(H, base_radius)
    prof.rho(sphere_points(H.n, check_samples))
    return prof


# -- deformation series -------------------------------------------------------


@dataclass(frozen=True)
class DeformationSeries:
    """``H_t = base + t jet[0] + ... + t^N jet[N-1]`` truncated at order N."""

    base: PolyOverH
    jet: tuple

    def __post_init__(self):
        object.__setattr__(self, "base", self.base.as_poly())
        object.__setattr__(self, "jet", tuple(h.as_poly() for h in self.jet))
        if not self.jet:
            raise ValueError("a deformation series needs at least one jet coefficient")
        for h in self.jet:
            if h.n != self.base.n:
                raise ValueError("dimension mismatch in jet")

    @property
    def order(self) -> int:
        return len(self.jet)

    @property
    def n(self) -> int:
        return self.base.n

    def coefficients(self):
        return [self.base, *self.jet]

    def at(self, t) -> PolyOverH:
        """Exact truncated sum at rational ``t``."""
        t = Fraction(t)
        out = self.base
        tp = Fraction(1)
        for h in self.jet:
            tp *= t
            out = out + h * tp
        return out

    def evaluate(self, t: float, X):
        """Numeric ``H_t(X)`` without forming the exact sum."""
        v = np.asarray(self.base.evaluate(X), dtype=np.float64)
        tp = 1.0
        for h in self.jet:
            tp *= t
            v = v + tp * np.asarray(h.evaluate(X))
        return v
