import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarwave import kernels
from polarwave.fields import Grid

needs_numba = pytest.mark.skipif(not kernels.USING_NUMBA, reason="numba disabled")


def test_lagrange_weights_partition_of_unity():
    a = np.linspace(0, 0.999, 17)
    for order in (2, 4, 8):
        w = kernels.lagrange_weights(a, order)
        assert np.allclose(w.sum(axis=-1), 1)


@pytest.mark.parametrize("order", [4, 8])
def test_interp_exact_on_nodes_and_polynomials(order):
    g = Grid(1, 64, 8.0)
    x = g.axes[0]
    vals = np.sin(2 * np.pi * x / 8.0)
    out = kernels.interp_periodic_numpy(vals, x, g.origin, g.spacing, order)
    assert np.allclose(out, vals, atol=1e-14)
    pts = np.linspace(-4, 4, 101)
    out = kernels.interp_periodic_numpy(vals, pts, g.origin, g.spacing, order)
    tol = {4: 1e-4, 8: 1e-8}[order]
    assert np.max(np.abs(out - np.sin(2 * np.pi * pts / 8.0))) < tol


def test_interp_wraps_periodically():
    g = Grid(1, 32, 4.0)
    vals = np.cos(2 * np.pi * g.axes[0] / 4.0)
    a = kernels.interp_periodic_numpy(vals, np.array([0.3]), g.origin, g.spacing)
    b = kernels.interp_periodic_numpy(vals, np.array([0.3 + 8.0]), g.origin, g.spacing)
    assert np.allclose(a, b)


@needs_numba
@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 4, 8]))
def test_numba_matches_numpy_1d(seed, order):
    rng = np.random.default_rng(seed)
    g = Grid(1, 128, 10.0)
    vals = rng.normal(size=g.shape)
    pts = rng.uniform(-30, 30, size=257)
    a = kernels.interp_periodic_numpy(vals, pts, g.origin, g.spacing, order)
    b = kernels.interp_periodic_numba(vals, pts, g.origin, g.spacing, order)
    assert np.allclose(a, b, rtol=0, atol=1e-13)


@needs_numba
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([4, 8]))
def test_numba_matches_numpy_2d(seed, order):
    rng = np.random.default_rng(seed)
    g = Grid(2, (32, 64), (5.0, 9.0))
    vals = rng.normal(size=g.shape)
    pts = rng.uniform(-12, 12, size=(300, 2))
    a = kernels.interp_periodic_numpy(vals, pts, g.origin, g.spacing, order)
    b = kernels.interp_periodic_numba(vals, pts, g.origin, g.spacing, order)
    assert np.allclose(a, b, rtol=0, atol=1e-13)


@needs_numba
def test_stencil_touches_agree():
    rng = np.random.default_rng(3)
    for g, shape in ((Grid(1, 64, 10.0), (500,)), (Grid(2, 32, 6.0), (500, 2))):
        mask = rng.random(g.shape) < 0.05
        pts = rng.uniform(-8, 8, size=shape)
        for order in (2, 4):
            a = kernels.stencil_touches_numpy(mask, pts, g.origin, g.spacing, order)
            b = kernels.stencil_touches_numba(mask, pts, g.origin, g.spacing, order)
            assert np.array_equal(a, b)


def test_stencil_touches_detects_mask():
    g = Grid(1, 16, 16.0)
    mask = np.zeros(16, dtype=bool)
    mask[8] = True  # node at x = 0
    hit = kernels.stencil_touches_numpy(mask, np.array([0.5, -1.5, 5.0]), g.origin, g.spacing, 4)
    assert hit.tolist() == [True, True, False]
