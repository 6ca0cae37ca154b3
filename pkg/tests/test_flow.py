"""Flows, monodromy, actions and the exact H_st rotation."""

import math
import warnings

import numpy as np
import pytest

from systolic.errors import DomainError, IntegrationError
from systolic.flow import (
    OpenPathWarning,
    action_integral,
    flow_map,
    integrate,
    loop_action,
    reference_flow_hst,
    sample_orbit,
)
from systolic.generators import random_circular, random_poly, rng_from_seed
from systolic.hamcore import ellipsoid_hamiltonian, from_complex, hst, sphere_points, to_complex

J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])


def perturbed(seed=0, eps=0.05):
    return hst(2) + random_poly(2, rng_from_seed(seed), degrees=(4,), sup_bound=eps)


def test_hst_period_pi(rng):
    for x0 in sphere_points(2, 5, 3):
        seg = integrate(hst(2), x0, math.pi)
        assert seg.closure < 1e-9
        assert seg.energy_ok


def test_hst_half_period_rotation():
    seg = integrate(hst(1), np.array([1.0, 0.0]), math.pi / 2)
    np.testing.assert_allclose(seg.final, [-1.0, 0.0], atol=1e-10)


def test_ellipsoid_long_circle():
    E = ellipsoid_hamiltonian((1, 2))
    x0 = np.array([0.0, math.sqrt(2.0), 0.0, 0.0])
    seg = integrate(E, x0, 2 * math.pi)
    assert seg.closure < 1e-9
    # the closed-form rotation z2(t) = exp(-i t) z2(0) at t = pi/2
    mid = integrate(E, x0, math.pi / 2).final
    expected = from_complex(np.array([0.0, math.sqrt(2.0) * np.exp(-0.5j * math.pi)]))
    np.testing.assert_allclose(mid, expected, atol=1e-10)


def test_reference_flow_examples(rng):
    x = rng.normal(size=(4, 4))
    np.testing.assert_allclose(reference_flow_hst(x, math.pi), x, atol=1e-14)
    z = to_complex(reference_flow_hst(np.array([1.0, 0.0]), math.pi / 4))
    np.testing.assert_allclose(z, [-1j], atol=1e-15)
    y = reference_flow_hst(x, 0.7)
    np.testing.assert_allclose(hst(2).evaluate(y), hst(2).evaluate(x), rtol=1e-14)


def test_integrate_matches_reference_flow(rng):
    x0 = rng.normal(size=4)
    for t in (0.3, 1.7, 2.9):
        np.testing.assert_allclose(integrate(hst(2), x0, t).final, reference_flow_hst(x0, t), atol=1e-10)


def test_energy_drift_within_tolerance():
    H = perturbed(1)
    x0 = sphere_points(2, 1, 5)[0]
    x0 = x0 / math.sqrt(H.evaluate(x0))
    seg = integrate(H, x0, 10.0)
    assert seg.energy_drift <= 1e-9 * 10.0


def test_monodromy_symplectic():
    H = perturbed(2)
    x0 = np.array([0.6, -0.2, 0.3, 0.7])
    seg = integrate(H, x0, 4.0, monodromy=True)
    M = seg.monodromy
    assert np.max(np.abs(M.T @ J4 @ M - J4)) < 1e-7


def test_monodromy_matches_finite_differences():
    H = perturbed(3)
    x0 = np.array([0.6, -0.2, 0.3, 0.7])
    M = integrate(H, x0, 1.5, monodromy=True).monodromy
    h = 1e-6
    fd = np.zeros((4, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        fd[:, i] = (integrate(H, x0 + e, 1.5, record=False).final
                    - integrate(H, x0 - e, 1.5, record=False).final) / (2 * h)
    np.testing.assert_allclose(M, fd, atol=1e-6)


def test_action_examples():
    seg = integrate(hst(2), np.array([1.0, 0.0, 0.0, 0.0]), math.pi)
    assert action_integral(seg, expect_closed=True) == pytest.approx(math.pi, abs=1e-9)
    E = ellipsoid_hamiltonian((1, 2))
    short = integrate(E, np.array([1.0, 0.0, 0.0, 0.0]), math.pi)
    assert action_integral(short, expect_closed=True) == pytest.approx(math.pi, abs=1e-9)
    twice = integrate(hst(2), np.array([1.0, 0.0, 0.0, 0.0]), 2 * math.pi)
    assert action_integral(twice) == pytest.approx(2 * math.pi, abs=1e-9)


def test_action_equals_period_on_closed_orbit():
    H = random_circular(2, rng_from_seed(4), 0.2)
    from systolic.geometry import ContactSurface

    x0, T = ContactSurface.circular(H).census()[0]
    seg = integrate(H, x0, T)
    assert seg.closure < 1e-8
    assert abs(seg.action - T) < 1e-7
    assert abs(loop_action(sample_orbit(H, x0, T, 256)) - T) < 1e-7


def test_open_path_flagged_not_raised():
    seg = integrate(hst(2), np.array([1.0, 0.0, 0.0, 0.0]), 1.0)
    with pytest.warns(OpenPathWarning):
        val = action_integral(seg, expect_closed=True)
    assert val == pytest.approx(1.0, abs=1e-9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        action_integral(seg)


def test_loop_action_of_hopf_circle():
    ts = np.arange(128) * math.pi / 128
    loop = np.stack([reference_flow_hst(np.array([0.6, 0.0, 0.0, 0.8]), t) for t in ts])
    assert loop_action(loop) == pytest.approx(math.pi, abs=1e-13)


def test_fixed_step_order_eight():
    x0 = np.array([1.0, 0.0, 0.0, 0.0])
    exact = reference_flow_hst(x0, math.pi)
    e1 = np.abs(flow_map(hst(2), x0, math.pi, steps=6) - exact).max()
    e2 = np.abs(flow_map(hst(2), x0, math.pi, steps=12) - exact).max()
    assert e1 > 1e-12
    # eighth-order scheme: halving the step divides the error by about 2^8
    assert 2**7 < e1 / e2 < 2**10


def test_flow_map_inverse_and_homogeneity(rng):
    W = random_poly(2, rng_from_seed(5), degrees=(4,))
    X = rng.normal(size=(10, 4))
    Y = flow_map(W, X, 0.4)
    np.testing.assert_allclose(flow_map(W, Y, -0.4), X, atol=1e-12)
    np.testing.assert_allclose(flow_map(W, 2.5 * X, 0.4), 2.5 * Y, rtol=1e-12, atol=1e-13)


def test_integration_failure_reports_state():
    with pytest.raises(IntegrationError) as info:
        integrate(perturbed(6), np.array([1.0, 0.0, 0.0, 0.0]), 50.0, max_steps=5)
    assert info.value.t > 0
    assert info.value.state.shape == (4,)


def test_domain_errors():
    with pytest.raises(DomainError):
        integrate(hst(2), np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        integrate(hst(2), np.ones(4), -1.0)


def test_csv_dump(tmp_path):
    seg = integrate(hst(1), np.array([1.0, 0.0]), 1.0)
    p = tmp_path / "path.csv"
    seg.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,q1,p1"
    assert len(lines) == len(seg.times) + 1
