import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarwave.fields import (
    Action,
    Grid,
    PolarPair,
    Potential,
    compose,
    decompose,
    divergence,
    gaussian_amplitude,
    gradient,
    laplacian,
    moments,
    norm,
    quantum_potential,
    velocity_field,
)

G1 = Grid(1, 256, 40.0)
G2 = Grid(2, 64, 20.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(3, 64, 10.0)
    with pytest.raises(ValueError):
        Grid(1, 100, 10.0)
    with pytest.raises(ValueError):
        Grid(1, 64, -1.0)
    assert G1.spacing == (40.0 / 256,)
    assert G2.shape == (64, 64)


def test_grid_wrap_is_periodic():
    pts = np.array([[19.9], [20.1], [-20.1], [60.0]])
    w = G1.wrap(pts)
    assert np.all(w >= -20) and np.all(w < 20)
    assert np.allclose(w[:, 0], [19.9, -19.9, 19.9, -20.0])


def test_compose_trivial_cases():
    one = np.ones(G1.shape)
    assert np.allclose(compose(PolarPair(one, Action.zero(G1))), 1 + 0j)
    q = compose(PolarPair(one, Action(G1, np.pi / 2)))
    assert np.allclose(q, 1j, atol=1e-15)


def test_compose_gaussian_plane_wave():
    R = gaussian_amplitude(G1, [0.0], 1.5)
    psi = compose(PolarPair(R, Action.plane(G1, 1.3)))
    x = G1.axes[0]
    ref = np.array([r * complex(np.cos(1.3 * xi), np.sin(1.3 * xi)) for r, xi in zip(R, x)])
    assert np.allclose(psi, ref, atol=1e-14)
    assert np.allclose(np.abs(psi), R, atol=1e-15)


def test_compose_rejects_negative_R():
    with pytest.raises(ValueError):
        PolarPair(-np.ones(G1.shape), Action.zero(G1))


def test_decompose_examples():
    p = decompose(np.full(G1.shape, 3 + 0j), G1)
    assert np.allclose(p.R, 3) and np.allclose(p.S.values, 0)
    p = decompose(np.full(G1.shape, -1 + 0j), G1)
    assert np.allclose(p.R, 1) and np.allclose(p.S.values, np.pi)
    with pytest.raises(ValueError):
        decompose(np.zeros(G1.shape, dtype=complex), G1)


def test_decompose_plane_wave_velocity():
    x = G1.axes[0]
    k = 2 * np.pi * 13 / 40.0  # periodic plane wave near 2
    psi = np.exp(1j * k * x)
    p = decompose(psi, G1)
    assert np.allclose(p.R, 1)
    assert np.all(p.S.values > -np.pi) and np.all(p.S.values <= np.pi)
    v, mask = velocity_field(psi, G1)
    assert not mask.any()
    assert np.allclose(v[0], k, atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(0.8, 3.0), st.floats(-5, 5))
def test_compose_decompose_roundtrip(p0, width, c):
    R = gaussian_amplitude(G1, [c], width) + 0.1
    S = Action(G1, np.sin(2 * np.pi * G1.axes[0] / 40.0) * p0)
    psi = compose(PolarPair(R, S))
    back = decompose(psi, G1)
    assert np.allclose(compose(back), psi, rtol=1e-12, atol=1e-13)
    assert np.array_equal(back.R, np.abs(psi))
    dS = np.angle(np.exp(1j * (back.S.values - S.values)))
    assert np.max(np.abs(dS)) < 1e-12


def test_decompose_masks_nodes():
    R = gaussian_amplitude(G1, [0.0], 0.5)
    p = decompose(R.astype(complex), G1)
    assert p.mask.any() and not p.mask[128]
    assert np.all(p.S.values[p.mask] == 0)


def test_velocity_field_examples():
    x = G1.axes[0]
    k = 2 * np.pi * 5 / 40.0
    R = gaussian_amplitude(G1, [0.0], 1.5)
    v, mask = velocity_field(R * np.exp(1j * k * x), G1)
    assert np.allclose(v[0][~mask], k, rtol=1e-8)
    # smooth periodic amplitude and action: v = grad S / m everywhere
    R = np.exp(np.cos(2 * np.pi * x / 40.0))
    S = Action(G1, 0.8 * np.sin(2 * np.pi * x / 40.0))
    v, mask = velocity_field(compose(PolarPair(R, S)), G1)
    assert not mask.any()
    assert np.allclose(v[0], S.gradient()[0], rtol=1e-8, atol=1e-12)
    v, _ = velocity_field(R.astype(complex), G1)
    assert np.allclose(v, 0)


def test_quantum_potential():
    assert np.allclose(quantum_potential(np.full(G1.shape, 2.0), G1), 0)
    l = 1.0
    x = G1.axes[0]
    R = np.exp(-(x**2) / (2 * l**2))
    Q = quantum_potential(R, G1)
    for xi in (0.0, l):
        i = int(np.argmin(np.abs(x - xi)))
        assert Q[i] == pytest.approx(-0.5 * (x[i] ** 2 / l**4 - 1 / l**2), rel=1e-8)


def test_quantum_potential_finite_difference_oracle():
    g = Grid(1, 512, 2 * np.pi)
    x = g.axes[0]
    R = np.sqrt(np.cos(x) ** 2 + 0.2)
    Q = quantum_potential(R, g)
    h = 1e-4
    f = lambda y: np.sqrt(np.cos(y) ** 2 + 0.2)  # noqa: E731
    fd = (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    assert np.allclose(Q, -0.5 * fd / R, rtol=1e-6, atol=1e-6)


def test_spectral_operators():
    L = 40.0
    x = G1.axes[0]
    f = np.sin(2 * np.pi * x / L)
    assert np.allclose(gradient(f, G1)[0], 2 * np.pi / L * np.cos(2 * np.pi * x / L), atol=1e-10)
    assert np.allclose(laplacian(np.full(G1.shape, 4.0), G1), 0)
    rng = np.random.default_rng(1)
    X, Y = G2.positions
    h = np.exp(np.sin(2 * np.pi * X / 20) + np.cos(4 * np.pi * Y / 20))
    assert np.allclose(laplacian(h, G2), divergence(gradient(h, G2), G2), atol=1e-10)
    a, b = rng.normal(size=2)
    g = np.cos(2 * np.pi * Y / 20)
    assert np.allclose(laplacian(a * h + b * g, G2), a * laplacian(h, G2) + b * laplacian(g, G2), atol=1e-10)


def test_norm_of_gaussian():
    assert norm(gaussian_amplitude(G1, [1.0], 1.0) ** 2, G1) == pytest.approx(1, abs=1e-8)
    assert norm(gaussian_amplitude(G2, [0, 0], [1.0, 1.5]) ** 2, G2) == pytest.approx(1, abs=1e-8)


def test_gaussian_width_convention():
    mean, w = moments(gaussian_amplitude(G1, [2.0], 1.2) ** 2, G1)
    assert mean[0] == pytest.approx(2.0, abs=1e-10)
    assert w[0] == pytest.approx(1.2, rel=1e-8)


def test_action_polynomial_representation():
    S = Action.quadratic_profile(G1, 0.7, [1.0], [0.3])
    x = G1.axes[0]
    ref = 0.35 * (x - 1) ** 2 + 0.3 * (x - 1)
    assert np.allclose(S.values, ref)
    assert np.allclose(S.gradient()[0], 0.7 * (x - 1) + 0.3)
    assert np.allclose(S.laplacian(), 0.7)
    pts = np.array([[0.123], [-7.5]])
    assert np.allclose(S.gradient_at(pts)[:, 0], 0.7 * (pts[:, 0] - 1) + 0.3)


def test_potentials():
    V = Potential.harmonic(G1, 2.0, center=1.0)
    x = G1.axes[0]
    assert np.allclose(V.values, 2.0 * (x - 1) ** 2)
    assert np.allclose(V.force_at(np.array([[3.0]])), -4.0 * 2.0)
    F = Potential.linear(G1, 0.5)
    assert np.allclose(F.values, -0.5 * x)
    with pytest.raises(ValueError):
        Potential.sampled(G1, np.full(G1.shape, np.nan))
    td = Potential(G1, 0.0, evaluator=lambda t: Potential.constant(G1, t))
    assert td.time_dependent and np.allclose(td.at(2.0).values, 2.0)
