"""The compiled and numpy kernels must agree."""

import math

import numpy as np
import pytest

from systolic._kernels import backends
from systolic.generators import random_poly, rng_from_seed
from systolic.hamcore import hst

BACKENDS = backends()
needs_both = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")


def tables():
    out = [hst(2).table(), hst(3).table()]
    for s in range(4):
        out.append((hst(2) + random_poly(2, rng_from_seed(s), degrees=(4, 6, 8), sup_bound=0.2)).table())
    return out


@needs_both
def test_table_kernels_agree(rng):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for tab in tables():
        X = rng.normal(size=(40, tab.dim))
        for name in ("table_eval", "table_grad", "table_hess"):
            a = getattr(py, name)(*tab.args, X)
            b = getattr(cy, name)(*tab.args, X)
            np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-12)


@needs_both
def test_flow_kernels_agree(rng):
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    tab = (hst(2) + random_poly(2, rng_from_seed(9), degrees=(4,), sup_bound=0.1)).table()
    x0 = np.array([0.7, 0.1, -0.2, 0.6])
    ra = py.flow_adaptive(*tab.args, x0, 2.0, 1e-12, 1e-12, 0.0, True, False, 100000)
    rb = cy.flow_adaptive(*tab.args, x0, 2.0, 1e-12, 1e-12, 0.0, True, False, 100000)
    assert ra[0] == rb[0] == 0
    np.testing.assert_allclose(ra[2], rb[2], atol=1e-11)
    assert ra[3] == pytest.approx(rb[3], abs=1e-11)
    np.testing.assert_allclose(ra[4], rb[4], atol=1e-9)
    X = rng.normal(size=(5, 4))
    np.testing.assert_allclose(py.flow_fixed(*tab.args, X, 0.01, 30), cy.flow_fixed(*tab.args, X, 0.01, 30),
                               atol=1e-12)
    np.testing.assert_allclose(py.flow_fixed_path(*tab.args, x0, 0.01, 30, 3),
                               cy.flow_fixed_path(*tab.args, x0, 0.01, 30, 3), atol=1e-12)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_each_backend_closes_hst_orbit(name):
    k = BACKENDS[name]
    tab = hst(2).table()
    res = k.flow_adaptive(*tab.args, np.array([1.0, 0.0, 0.0, 0.0]), math.pi, 1e-12, 1e-12, 0.0, False, True, 10000)
    status, t, x, act = res[:4]
    assert status == 0
    np.testing.assert_allclose(x, [1.0, 0.0, 0.0, 0.0], atol=1e-9)
    assert act == pytest.approx(math.pi, abs=1e-9)
