"""Representations, evaluation and the exact Poisson algebra."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from systolic.errors import DomainError, StarShapednessError, UnsupportedRepresentationError
from systolic.gaussq import GQ
from systolic.generators import random_poly, rng_from_seed
from systolic.hamcore import (
    DeformationSeries,
    PolyOverH,
    Quadratic,
    Radial,
    ellipsoid_hamiltonian,
    evaluate,
    from_complex,
    gradient,
    hamiltonian_vector_field,
    hst,
    numeric_bracket,
    phase_point,
    poisson_bracket,
    radial_profile,
    sphere_points,
    to_complex,
)

Z1_FOURTH = PolyOverH(2, {((2, 0), (2, 0)): 1})  # |z1|^4 / H_st


def complex_oracle(P: PolyOverH, X):
    """Evaluate from the half terms with complex arithmetic (no real expansion)."""
    Z = to_complex(X)
    S = np.sum(np.abs(Z) ** 2, axis=-1)
    out = np.zeros(Z.shape[0])
    for (a, b), c in P.terms():
        mono = np.prod(Z ** np.array(a) * np.conj(Z) ** np.array(b), axis=-1)
        level = (sum(a) + sum(b)) // 2 - 1
        val = complex(c) * mono
        part = val.real if a == b else 2 * val.real
        out += part / S**level
    return out


def fd_gradient(H, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (H.evaluate(x + e) - H.evaluate(x - e)) / (2 * h)
    return g


poly_seeds = st.integers(min_value=0, max_value=10_000)


def rpoly(seed, n=2, degrees=(2, 4, 6)):
    return random_poly(n, rng_from_seed(seed), degrees=degrees, n_terms=3)


# -- phase points ------------------------------------------------------------------


def test_complex_round_trip_is_exact(rng):
    x = rng.normal(size=(5, 6))
    assert np.array_equal(from_complex(to_complex(x)), x)
    assert np.array_equal(phase_point([1.0, 2.0], [3.0, 4.0]), np.array([1.0, 2.0, 3.0, 4.0]))


# -- evaluate ----------------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(hst(1), np.array([1.0, 0.0])) == pytest.approx(1.0, abs=1e-15)
    assert evaluate(hst(1), np.array([0.6, 0.8])) == pytest.approx(1.0, abs=1e-15)
    x = np.array([2.0, 0.0, 0.0, 0.0])
    assert evaluate(Z1_FOURTH, x) == pytest.approx(4.0, abs=1e-14)


def test_evaluate_origin_raises():
    with pytest.raises(DomainError):
        evaluate(hst(2), np.zeros(4))


def test_table_matches_complex_oracle(rng):
    X = rng.normal(size=(50, 4))
    for seed in range(10):
        P = rpoly(seed, degrees=(2, 4, 6, 8))
        np.testing.assert_allclose(P.evaluate(X), complex_oracle(P, X), rtol=1e-11, atol=1e-11)
    # |z1|^4/H_st against its defining formula
    Z = to_complex(X)
    direct = np.abs(Z[:, 0]) ** 4 / np.sum(np.abs(Z) ** 2, axis=1)
    np.testing.assert_allclose(Z1_FOURTH.evaluate(X), direct, rtol=1e-12, atol=1e-14)


def test_quadratic_converts_exactly(rng):
    A = rng.integers(-3, 4, size=(4, 4))
    A = A + A.T
    Q = Quadratic(A.tolist())
    X = rng.normal(size=(20, 4))
    direct = np.einsum("ij,jk,ik->i", X, A, X)
    np.testing.assert_allclose(Q.evaluate(X), direct, rtol=1e-13)
    np.testing.assert_allclose(Q.as_poly().evaluate(X), direct, rtol=1e-12)


def test_pairing_rules():
    with pytest.raises(ValueError):
        PolyOverH(1, {((1,), (1,)): GQ(1, 1)})
    with pytest.raises(ValueError):
        PolyOverH(1, {((2,), (0,)): 1, ((0,), (2,)): 1})
    P = PolyOverH(2, {((2, 0), (0, 0)): GQ(1, 2)})
    assert P.conjugate_pairing_ok()
    # storing the conjugate key gives the conjugate coefficient on the canonical key
    Q = PolyOverH(2, {((0, 0), (2, 0)): GQ(1, -2)})
    assert P == Q


def test_canonical_form_detects_hidden_zero():
    # |z1|^2 + |z2|^2 - H_st written two ways is exactly zero
    P = PolyOverH(2, {((1, 0), (1, 0)): 1, ((0, 1), (0, 1)): 1}) - hst(2)
    assert P.is_zero()
    # (|z1|^2 H_st) / H_st reduces to |z1|^2
    Q = PolyOverH(2, {((2, 0), (2, 0)): 1, ((1, 1), (1, 1)): 1})
    assert Q == PolyOverH(2, {((1, 0), (1, 0)): 1})


# -- gradient and vector field -----------------------------------------------------


def test_gradient_examples(rng):
    np.testing.assert_allclose(gradient(hst(1), np.array([1.0, 2.0])), [2.0, 4.0])
    Q = Quadratic([[1, 0], [0, 0]])
    np.testing.assert_allclose(gradient(Q, np.array([1.0, 1.0])), [2.0, 0.0])
    for _ in range(5):
        x = rng.normal(size=4)
        np.testing.assert_allclose(gradient(Z1_FOURTH, x), fd_gradient(Z1_FOURTH, x), atol=1e-7)


def test_gradient_of_radial_without_closed_form():
    R = Radial(2, profile=lambda U: np.ones(len(U)))
    with pytest.raises(UnsupportedRepresentationError):
        R.gradient(np.array([1.0, 0.0, 0.0, 0.0]))
    assert R.evaluate(np.array([2.0, 0.0, 0.0, 0.0])) == pytest.approx(4.0)


def test_vector_field_examples(rng):
    np.testing.assert_allclose(hamiltonian_vector_field(hst(1), np.array([1.0, 0.0])), [0.0, -2.0])
    F, G = rpoly(1), rpoly(2)
    X = rng.normal(size=(10, 4))
    np.testing.assert_allclose((F + G).vector_field(X), F.vector_field(X) + G.vector_field(X), atol=1e-12)
    a = (1.0, 2.0)
    E = ellipsoid_hamiltonian(a)
    for x in rng.normal(size=(5, 4)):
        z = to_complex(x)
        zdot = -2j * z / np.array(a)
        np.testing.assert_allclose(E.vector_field(x), from_complex(zdot), atol=1e-13)


def test_hessian_matches_finite_differences(rng):
    P = rpoly(7, degrees=(4, 6))
    x = rng.normal(size=4)
    h = 1e-5
    Hs = np.zeros((4, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        Hs[:, i] = (P.gradient(x + e) - P.gradient(x - e)) / (2 * h)
    np.testing.assert_allclose(P.hessian(x), Hs, atol=1e-6)


# -- Poisson bracket -----------------------------------------------------------------


def test_bracket_examples(rng):
    assert poisson_bracket(hst(2), hst(2)).is_zero()
    qq = Quadratic([[1, 0], [0, 0]])
    pp = Quadratic([[0, 0], [0, 1]])
    # 4 q p as a quadratic form
    assert poisson_bracket(qq, pp) == Quadratic([[0, 2], [2, 0]]).as_poly()
    z1sq = PolyOverH(2, {((1, 0), (1, 0)): 1})
    assert poisson_bracket(z1sq, hst(2)).is_zero()
    X = rng.normal(size=(20, 4))
    np.testing.assert_allclose(numeric_bracket(z1sq, hst(2), X), 0.0, atol=1e-12)


def test_bracket_sign_convention(rng):
    # {F, G} = dF(X_G): pointwise against the numeric definition
    F, G = Quadratic([[1, 0], [0, 0]]), Quadratic([[0, 0], [0, 1]])
    x = np.array([0.3, 0.7])
    assert poisson_bracket(F, G).evaluate(x) == pytest.approx(4 * 0.3 * 0.7)
    assert numeric_bracket(F, G, x) == pytest.approx(4 * 0.3 * 0.7)


def test_weight_eigenvalue(rng):
    # {z^a zbar^b, H_st} = -2i(|a|-|b|) z^a zbar^b on Re(z1^4)/H_st
    G = PolyOverH(2, {((4, 0), (0, 0)): Fraction(1, 2)})
    B = G.bracket(hst(2))
    expected = PolyOverH(2, {((4, 0), (0, 0)): GQ(0, -4)})
    assert B == expected


def test_radial_bracket_unsupported():
    R = Radial(2, function=lambda X: np.sum(X**2, axis=1))
    with pytest.raises(UnsupportedRepresentationError):
        poisson_bracket(R, hst(2))


@given(poly_seeds, poly_seeds)
def test_antisymmetry(s1, s2):
    F, G = rpoly(s1), rpoly(s2)
    assert F.bracket(G) == -G.bracket(F)


@given(poly_seeds, poly_seeds, poly_seeds, st.fractions(min_value=-3, max_value=3, max_denominator=7))
def test_bilinearity(s1, s2, s3, a):
    F, G, K = rpoly(s1), rpoly(s2), rpoly(s3)
    assert F.bracket(G * a + K) == F.bracket(G) * a + F.bracket(K)


@given(poly_seeds, poly_seeds, poly_seeds)
def test_jacobi_up_to_degree_8(s1, s2, s3):
    F = random_poly(2, rng_from_seed(s1), degrees=(2, 4, 6, 8), n_terms=2)
    G = random_poly(2, rng_from_seed(s2), degrees=(2, 4, 6, 8), n_terms=2)
    K = random_poly(2, rng_from_seed(s3), degrees=(2, 4, 6, 8), n_terms=2)
    total = F.bracket(G.bracket(K)) + G.bracket(K.bracket(F)) + K.bracket(F.bracket(G))
    assert total.is_zero()


@given(poly_seeds, poly_seeds, poly_seeds)
def test_leibniz_within_class(s1, s2, s3):
    # {F, G K / S} = {F,G} K/S + G {F,K}/S - (G K/S) {F,S}/S
    F, G, K = rpoly(s1), rpoly(s2), rpoly(s3)
    S = hst(2)
    lhs = F.bracket(G.mul_over_hst(K))
    rhs = (F.bracket(G).mul_over_hst(K) + G.mul_over_hst(F.bracket(K))
           - G.mul_over_hst(K).mul_over_hst(F.bracket(S)))
    assert lhs == rhs


def test_pointwise_consistency_100_points(rng):
    X = rng.normal(size=(100, 4))
    for seed in range(8):
        F = random_poly(2, rng_from_seed(seed), degrees=(2, 4, 6, 8))
        G = random_poly(2, rng_from_seed(seed + 100), degrees=(2, 4, 6, 8))
        sym = F.bracket(G).evaluate(X)
        num = numeric_bracket(F, G, X)
        scale = np.maximum(np.abs(num), 1e-3 * np.sum(X**2, axis=1))
        assert np.max(np.abs(sym - num) / scale) < 1e-8


def test_bracket_is_homogeneous(rng):
    B = rpoly(3).bracket(rpoly(4))
    X = rng.normal(size=(10, 4))
    for lam in (0.5, 2.0, 3.0):
        np.testing.assert_allclose(B.evaluate(lam * X), lam**2 * B.evaluate(X), rtol=1e-11, atol=1e-12)


def test_euler_identity(rng):
    X = rng.normal(size=(30, 4))
    for H in (rpoly(5), Z1_FOURTH, Quadratic([[2, 1, 0, 0], [1, 3, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])):
        lhs = 0.5 * np.sum(X * H.gradient(X), axis=1)
        np.testing.assert_allclose(lhs, H.evaluate(X), rtol=1e-10, atol=1e-12)


# -- radial profile ----------------------------------------------------------------------


def test_radial_profile_examples():
    U = sphere_points(2, 64, 1)
    np.testing.assert_allclose(radial_profile(hst(2)).rho(U), 1.0)
    np.testing.assert_allclose(radial_profile(hst(2) * 4).rho(U), 0.5)
    prof = radial_profile(ellipsoid_hamiltonian((1, 2)))
    Z = to_complex(U)
    expected = (np.abs(Z[:, 0]) ** 2 + np.abs(Z[:, 1]) ** 2 / 2) ** -0.5
    np.testing.assert_allclose(prof.rho(U), expected, rtol=1e-14)
    # delta maps the sphere onto {H = 1}
    H = ellipsoid_hamiltonian((1, 2))
    np.testing.assert_allclose(H.evaluate(prof.delta(U)), 1.0, atol=1e-12)


def test_radial_profile_rejects_nonpositive():
    bad = hst(2) - PolyOverH(2, {((1, 0), (1, 0)): 2})
    with pytest.raises(StarShapednessError):
        radial_profile(bad)


def test_homogeneity_sampled(rng):
    X = rng.normal(size=(10, 4))
    R = Radial(2, profile=lambda U: 1.0 + 0.1 * U[:, 0] ** 2)
    for H in (rpoly(9), R):
        for lam in (0.5, 2.0, 3.0):
            np.testing.assert_allclose(H.evaluate(lam * X), lam**2 * H.evaluate(X), rtol=1e-12)


# -- deformation series ----------------------------------------------------------------


def test_deformation_series_truncated_sum(rng):
    H1, H2 = rpoly(11), rpoly(12)
    s = DeformationSeries(hst(2), (H1, H2))
    assert s.order == 2
    t = Fraction(1, 3)
    exact = s.at(t)
    assert exact == hst(2) + H1 * t + H2 * t**2
    X = rng.normal(size=(5, 4))
    np.testing.assert_allclose(s.evaluate(float(t), X), exact.evaluate(X), rtol=1e-13)
