"""Averaging, the homological equation, the normal form and the deformed family."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from systolic.errors import DegreeCapError, InputError, TRangeError
from systolic.flow import loop_action, reference_flow_hst, sample_orbit
from systolic.gaussq import GQ
from systolic.generators import random_circular, random_jet, random_poly, rng_from_seed
from systolic.hamcore import DeformationSeries, PolyOverH, hst, numeric_bracket, sphere_points
from systolic.normalform import (
    SymplecticJet,
    build_theorem_deformation,
    lie_series,
    loglog_slope,
    normal_form,
    s1_average,
    solve_homological,
)

RE_Z1_4 = PolyOverH(2, {((4, 0), (0, 0)): Fraction(1, 2)})  # Re(z1^4) / H_st
Z1Z2_SQ = PolyOverH(2, {((1, 1), (1, 1)): 1})  # |z1 z2|^2 / H_st


def orbit_average(G, X, m=64):
    """Numeric mean of G along the H_st circle through each point (trapezoid, exact for trig polynomials)."""
    return np.mean([G.evaluate(reference_flow_hst(X, math.pi * j / m)) for j in range(m)], axis=0)


# -- averaging and the homological equation ------------------------------------------------


def test_average_examples():
    assert s1_average(RE_Z1_4).is_zero()
    assert s1_average(Z1Z2_SQ) == Z1Z2_SQ
    assert s1_average(RE_Z1_4 + Z1Z2_SQ) == Z1Z2_SQ
    assert s1_average(hst(2)) == hst(2)


@given(st.integers(0, 10_000))
def test_average_matches_orbit_mean(seed):
    G = random_poly(2, rng_from_seed(seed), degrees=(2, 4, 6))
    X = sphere_points(2, 20, seed)
    np.testing.assert_allclose(s1_average(G).evaluate(X), orbit_average(G, X), atol=1e-12)


def test_homological_example():
    # weight 4 coefficient 1/2 is divided by -8i
    W = solve_homological(RE_Z1_4)
    assert W == PolyOverH(2, {((4, 0), (0, 0)): GQ(0, Fraction(1, 16))})
    assert solve_homological(Z1Z2_SQ).is_zero()


@given(st.integers(0, 10_000))
def test_homological_identity_exact_and_numeric(seed):
    G = random_poly(2, rng_from_seed(seed), degrees=(4, 6))
    W = solve_homological(G)
    assert W.bracket(hst(2)) == G - s1_average(G)
    assert s1_average(W).is_zero()
    X = sphere_points(2, 30, seed)
    np.testing.assert_allclose(numeric_bracket(W, hst(2), X), (G - s1_average(G)).evaluate(X), atol=1e-10)


def test_lie_series_of_commuting_pair_is_trivial():
    assert lie_series(hst(2), PolyOverH.zero(2), 5) == hst(2)
    assert lie_series(Z1Z2_SQ, hst(2), 5) == Z1Z2_SQ


# -- normal form -------------------------------------------------------------------


def test_resonant_jet_needs_no_transformation():
    series = DeformationSeries(hst(2), (Z1Z2_SQ * Fraction(1, 4),))
    jet, res, rep = normal_form(series)
    assert jet.is_identity()
    assert res.terms == (Z1Z2_SQ * Fraction(1, 4),)
    assert max(rep.residuals) < 1e-14


def test_first_order_example():
    series = DeformationSeries(hst(2), (RE_Z1_4 + Z1Z2_SQ,))
    jet, res, rep = normal_form(series)
    assert res.terms == (Z1Z2_SQ,)
    assert jet.generators[0] == solve_homological(RE_Z1_4)
    assert rep.resonant_exact
    assert rep.slope > 1.9


@pytest.mark.parametrize("N", [1, 2])
def test_residual_slope(N):
    series = random_jet(2, rng_from_seed(30 + N), order=N)
    _, res, rep = normal_form(series)
    assert res.is_exactly_resonant()
    assert rep.slope >= N + 1 - 0.1


def test_pullback_reproduces_normal_form_exactly():
    series = random_jet(2, rng_from_seed(4), order=2)
    jet, res, _ = normal_form(series, residual=False)
    coeffs = jet.pullback(series)
    assert coeffs[1:] == list(res.terms)


def test_degree_cap():
    series = random_jet(2, rng_from_seed(5), order=2)
    with pytest.raises(DegreeCapError):
        normal_form(series, degree_cap=4)
    with pytest.raises(InputError):
        normal_form(DeformationSeries(hst(2) * 2, (RE_Z1_4,)))


# -- the symplectic jet ---------------------------------------------------------------


@pytest.fixture(scope="module")
def sample_jet():
    return normal_form(random_jet(2, rng_from_seed(6), order=2), residual=False)


def test_jet_homogeneous_and_invertible(sample_jet, rng):
    jet = sample_jet[0]
    X = rng.normal(size=(8, 4))
    Y = jet.apply(X, 0.3)
    np.testing.assert_allclose(jet.apply(2.0 * X, 0.3), 2.0 * Y, rtol=1e-11, atol=1e-12)
    np.testing.assert_allclose(jet.inverse(Y, 0.3), X, atol=1e-11)


def test_jet_preserves_loop_actions(sample_jet):
    jet = sample_jet[0]
    H = random_circular(2, rng_from_seed(7), Fraction(1, 5))
    from systolic.geometry import ContactSurface

    x0, T = ContactSurface.circular(H).census()[0]
    loop = sample_orbit(H, x0, T, m=256)
    assert abs(loop_action(jet.apply(loop, 0.4)) - loop_action(loop)) < 1e-7


def test_loglog_slope_example():
    ts = np.array([0.1, 0.05, 0.025])
    assert loglog_slope(ts, 3 * ts**3) == pytest.approx(3.0, abs=1e-12)


# -- deformed family --------------------------------------------------------------------


def test_zero_jet_gives_ball():
    fam = build_theorem_deformation([PolyOverH.zero(2)], n=2)
    assert fam.jet.is_identity()
    pt = fam.metrics_at(0.1, seeds=2)
    assert pt.ratio == pytest.approx(0.5, rel=1e-8)
    assert pt.holds and pt.certified


def test_resonant_jet_family_is_resonant_surface():
    fam = build_theorem_deformation([Z1Z2_SQ * Fraction(1, 4)])
    X = sphere_points(2, 50, 3)
    np.testing.assert_allclose(fam.hamiltonian(0.2).evaluate(X), fam.resonant_hamiltonian(Fraction(1, 5)).evaluate(X),
                               atol=1e-15)


def test_family_matches_jet_to_order():
    fam = build_theorem_deformation(random_jet(2, rng_from_seed(8), order=2))
    ts = [2.0**-k for k in range(3, 7)]
    mism = [fam.jet_mismatch(t) for t in ts]
    assert loglog_slope(ts, mism) >= 3 - 0.1


def test_t_range_error_reports_t_max():
    # a large negative resonant coefficient makes H_t vanish at t = 4
    fam = build_theorem_deformation([Z1Z2_SQ * -1])
    assert fam.t_max == pytest.approx(4.0, rel=1e-9)
    with pytest.raises(TRangeError) as info:
        fam.hamiltonian(5.0)
    assert info.value.t_max == pytest.approx(4.0, rel=1e-9)


def test_family_point_consistency():
    fam = build_theorem_deformation(random_jet(2, rng_from_seed(9), order=2))
    pt = fam.metrics_at(0.1, seeds=4)
    assert abs(pt.volume - pt.resonant_volume) < 1e-6 * pt.volume
    assert pt.action_defect < 1e-7
    assert pt.surface_defect < 1e-7
    assert pt.holds
    assert SymplecticJet(fam.jet.generators).order == 2
