import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarwave.errors import MaskedRegionError
from polarwave.fields import Grid
from polarwave.quantization import LoopPath, bohr_check, coulomb_circular_spectrum, winding_number

G2 = Grid(2, 128, 20.0)
LOOP = LoopPath.angular(256)


def azimuth(center=(0.0, 0.0)):
    X, Y = G2.positions
    return np.arctan2(Y - center[1], X - center[0])


def test_integer_winding_on_angles():
    w = winding_number(lambda a: 3 * a, LOOP)
    assert w.n == 3 and w.residual < 1e-10 and w.single_valued
    w = winding_number(lambda a: -2 * a, LOOP)
    assert w.n == -2 and w.residual < 1e-10


def test_half_integer_rejected():
    w = winding_number(lambda a: 2.5 * a, LOOP)
    assert w.residual == pytest.approx(0.5, abs=1e-10)
    assert not w.single_valued


def test_contractible_smooth_is_zero():
    X, Y = G2.positions
    S = np.sin(X / 3) * np.cos(Y / 4) * 2
    loop = LoopPath.circle(G2, (1.0, -2.0), 4.0)
    w = winding_number(S, loop)
    assert w.n == 0 and w.residual < 1e-12


def test_lattice_loop_around_vortex():
    loop = LoopPath.circle(G2, (0.0, 0.0), 5.0)
    # the grid field is stored wrapped; the phase factor is what matters
    w = winding_number(np.angle(np.exp(3j * azimuth())), loop)
    assert w.n == 3 and w.residual < 1e-10
    off = LoopPath.circle(G2, (6.0, 6.0), 2.0)
    assert winding_number(3 * azimuth(), off).n == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(-5, 5))
def test_gauge_and_constant_invariance(seed, n):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=(2, 4))
    c = rng.normal() * 10

    def smooth(phi):
        return sum(a[k] * np.sin((k + 1) * phi + b[k]) for k in range(4))

    w = winding_number(lambda p: n * p + smooth(p) + c, LOOP)
    assert w.n == n and w.residual < 1e-10


def test_start_point_rotation():
    for k in (1, 17, 100):
        w = winding_number(lambda a: 4 * a, LOOP.rotated(k))
        assert w.n == 4 and w.residual < 1e-10
    loop = LoopPath.circle(G2, (0.0, 0.0), 5.0)
    S = np.angle(np.exp(2j * azimuth()))
    for k in (3, 40):
        assert winding_number(S, loop.rotated(k)) == winding_number(S, loop)


def test_hbar_halving_doubles_winding():
    L = 4.0
    assert winding_number(lambda a: L * a, LOOP, hbar=1.0).n == 4
    assert winding_number(lambda a: L * a, LOOP, hbar=0.5).n == 8
    assert winding_number(lambda a: L * a, LOOP, hbar=0.25).n == 16


def test_aliasing_and_mask_errors():
    with pytest.raises(ValueError):
        winding_number(lambda a: 128 * a, LOOP)
    loop = LoopPath.circle(G2, (0.0, 0.0), 5.0)
    mask = np.zeros(G2.shape, dtype=bool)
    mask[tuple(loop.indices[10])] = True
    with pytest.raises(MaskedRegionError):
        winding_number(azimuth(), loop, mask=mask)
    vals = np.append(np.linspace(0, 1, 10), np.nan)
    with pytest.raises(MaskedRegionError):
        winding_number(vals)


def test_loop_validation():
    with pytest.raises(ValueError):
        LoopPath(indices=[[0, 0], [0, 5], [5, 5]], grid=G2)
    with pytest.raises(ValueError):
        LoopPath()
    with pytest.raises(ValueError):
        LoopPath(angles=[0.0, 1.0])
    with pytest.raises(ValueError):
        LoopPath.circle(Grid(1, 64, 10.0), (0.0,), 1.0)
    loop = LoopPath(indices=[[0, 0], [0, 1], [1, 1], [1, 0]], grid=G2)
    assert len(loop) == 5
    # neighbours across the periodic seam are allowed
    LoopPath(indices=[[127, 0], [0, 0], [0, 1], [127, 1]], grid=G2)


def test_bohr_check_examples():
    assert bohr_check(3.0) == (3, 0.0)
    assert bohr_check(0.0) == (0, 0.0)
    n, dev = bohr_check(2.4)
    assert n == 2 and dev == pytest.approx(0.4)
    n, dev = bohr_check(1.5, hbar=0.5)
    assert n == 3 and dev == pytest.approx(0.0)
    with pytest.raises(ValueError):
        bohr_check(-1.0)


def test_coulomb_spectrum():
    sp = coulomb_circular_spectrum(1.0, 1.0, 1.0, n_max=4)
    assert sp.energy[0] == pytest.approx(-0.5, abs=1e-15)
    assert sp.energy[0] / sp.energy[1] == pytest.approx(4, abs=1e-12)
    assert sp.radius[1] / sp.radius[0] == pytest.approx(4, abs=1e-12)
    assert np.allclose(sp.energy, -0.5 / sp.n**2, rtol=0, atol=1e-10)
    assert np.all(sp.winding_ok)
    assert np.max(sp.hj_residual) < 1e-10
    # circular-orbit force balance m v^2 / r = k / r^2 with v = n hbar / (m r)
    v = sp.n / sp.radius
    assert np.allclose(v**2 / sp.radius, 1 / sp.radius**2, rtol=1e-12)


def test_coulomb_scaling_and_errors(tmp_path):
    sp = coulomb_circular_spectrum(2.0, 3.0, 0.5, n_max=2)
    assert sp.energy[0] == pytest.approx(-3.0 * 4.0 / (2 * 0.25))
    with pytest.raises(ValueError):
        coulomb_circular_spectrum(-1.0)
    with pytest.raises(ValueError):
        coulomb_circular_spectrum(1.0, n_max=0)
    path = tmp_path / "spectrum.csv"
    sp.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "n,r_n,E_n,winding_ok"
    assert lines[1].startswith("1,") and lines[1].endswith(",1")
