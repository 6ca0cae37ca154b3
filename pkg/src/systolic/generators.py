"""Random exact Hamiltonians for tests, sweeps and the acceptance suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from .gaussq import GQ
from .hamcore import DeformationSeries, PolyOverH, hst


def _compositions(total: int, parts: int):
    """All multi-indices of length ``parts`` summing to ``total``."""
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cut + (total + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)


def monomial_pairs(n: int, degree: int, weight=None):
    """All ``(a, b)`` with ``|a| + |b| = degree``, ``a >= b`` and optional weight."""
    out = []
    for la in range(degree + 1):
        lb = degree - la
        if weight is not None and la - lb != weight and lb - la != weight:
            continue
        for a in _compositions(la, n):
            for b in _compositions(lb, n):
                if a >= b:
                    out.append((a, b))
    return sorted(out)


def _rand_rational(rng, denom: int = 8) -> Fraction:
    return Fraction(int(rng.integers(-denom, denom + 1)), denom)


def random_poly(n: int, rng, degrees=(4,), n_terms: int = 3, resonant=None, sup_bound=None,
                denom: int = 8) -> PolyOverH:
    """Random element of the ``PolyOverH`` class with rational coefficients.

    Parameters
    ----------
    degrees : sequence of int
        Allowed numerator degrees ``2m``.
    resonant : None, True or False
        Restrict to weight-0 monomials (True), to nonzero weight (False), or
        no restriction.
    sup_bound : Fraction, optional
        Rescale so that the exact coefficient bound (which dominates the sup
        over the unit sphere) equals this value.
    """
    while True:
        terms = {}
        for _ in range(n_terms):
            deg = int(rng.choice(degrees))
            pairs = monomial_pairs(n, deg)
            if resonant is True:
                pairs = [(a, b) for a, b in pairs if sum(a) == sum(b)]
            elif resonant is False:
                pairs = [(a, b) for a, b in pairs if sum(a) != sum(b)]
            if not pairs:
                continue
            a, b = pairs[int(rng.integers(len(pairs)))]
            if a == b:
                c = GQ(_rand_rational(rng, denom))
            else:
                c = GQ(_rand_rational(rng, denom), _rand_rational(rng, denom))
            terms[(a, b)] = terms[(a, b)] + c if (a, b) in terms else c
        terms = {k: c for k, c in terms.items() if not c.is_zero()}
        P = PolyOverH(n, terms)
        if not P.is_zero():
            break
    if sup_bound is not None:
        P = P * (Fraction(sup_bound) / P.coefficient_bound())
    return P


def random_circular(n: int, rng, amplitude, degrees=(4, 6), n_terms: int = 3) -> PolyOverH:
    """``H_st + P`` with ``P`` resonant and ``sup_{S} |P| <= amplitude < 1``.

    The result commutes with ``H_st`` exactly, so its level set bounds a
    circular domain.
    """
    P = random_poly(n, rng, degrees=degrees, n_terms=n_terms, resonant=True, sup_bound=amplitude)
    return hst(n) + P


def random_jet(n: int, rng, order: int = 2, degrees=(4,), n_terms: int = 3, size="1/4") -> DeformationSeries:
    """Random jet ``[H_1..H_N]`` around ``H_st`` with mixed weights."""
    jet = [random_poly(n, rng, degrees=degrees, n_terms=n_terms, sup_bound=Fraction(size)) for _ in range(order)]
    return DeformationSeries(hst(n), tuple(jet))


def rng_from_seed(seed: int):
    return np.random.default_rng(seed)
