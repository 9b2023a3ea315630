import numpy as np
import pytest

from polarwave.classical_solver import (
    ClassicalStepper,
    caustic_monitor,
    evolve_classical,
    schrodinger_residual,
    step_classical,
    step_continuity,
    step_hj,
    superpose_nonoverlapping,
)
from polarwave.errors import CausticError, OverlapError
from polarwave.fields import (
    Action,
    Grid,
    PolarPair,
    Potential,
    compose,
    gaussian_amplitude,
    gaussian_packet,
    moments,
    norm,
)
from polarwave.linear_solver import LinearStepper, evolve_linear, packet_width
from polarwave.observe import FrameRecorder
from polarwave.trajectories import crest_track

G = Grid(1, 1024, 40.0)
T = 2 * np.pi


def test_stepper_validation():
    with pytest.raises(ValueError):
        ClassicalStepper(G, Potential.zero(G), -1.0)
    with pytest.raises(ValueError):
        ClassicalStepper(G, Potential.zero(G), 0.1, caustic_threshold=0.0)


def test_hj_plane_wave_exact():
    p0, dt = 1.7, 0.01
    st = ClassicalStepper(G, Potential.zero(G), dt)
    S = step_hj(Action.plane(G, p0), st)
    ref = p0 * G.axes[0] - p0**2 / 2 * dt
    assert np.max(np.abs(S.values - ref)) < 1e-12


def test_hj_zero_stays_zero():
    st = ClassicalStepper(G, Potential.zero(G), 0.01)
    S = Action.zero(G)
    for _ in range(10):
        S = step_hj(S, st)
    assert np.all(S.values == 0)


def test_hj_uniform_force():
    F, dt, n = 0.8, 0.01, 100
    st = ClassicalStepper(G, Potential.linear(G, F), dt)
    S = Action.zero(G)
    for k in range(n):
        S = step_hj(S, st, k * dt)
    t = n * dt
    ref = F * G.axes[0] * t - F**2 * t**3 / 6
    assert np.max(np.abs(S.values - ref)) < 1e-8


def test_continuity_static_when_gradient_vanishes():
    R = gaussian_amplitude(G, [1.0], 0.7)
    st = ClassicalStepper(G, Potential.zero(G), 0.05)
    assert np.allclose(step_continuity(R, Action.zero(G), st), R, rtol=0, atol=1e-15)


def test_rigid_advection_full_traversal():
    p0, dt = 1.0, 0.05
    n = int(round(G.extent[0] / (p0 * dt)))
    _, pair = gaussian_packet(G, [0.0], 1.0, p0)
    st = ClassicalStepper(G, Potential.zero(G), dt)
    out, _ = evolve_classical(pair, st, n, cadence=n)
    assert np.max(np.abs(out.R - pair.R)) < 1e-6 * np.max(pair.R)


def test_expanding_flow_conserves_norm():
    R = gaussian_amplitude(G, [0.0], 0.8)
    pair = PolarPair(R, Action.quadratic_profile(G, 0.5))
    st = ClassicalStepper(G, Potential.zero(G), 0.002)
    out, _ = evolve_classical(pair, st, 1000, cadence=1000)
    assert abs(norm(out.R**2, G) - norm(R**2, G)) < 1e-8
    assert packet_width(out.R**2, G)[0] == pytest.approx(0.8 * (1 + 0.5 * 2.0), rel=1e-6)


def test_static_state_unchanged():
    R = gaussian_amplitude(G, [2.0], 1.0) + 0.01
    pair = PolarPair(R, Action.zero(G))
    out = step_classical(pair, ClassicalStepper(G, Potential.zero(G), 0.1))
    assert np.allclose(out.R, R, atol=1e-15) and np.all(out.S.values == 0)


def test_scaling_closure():
    _, pair = gaussian_packet(G, [-3.0], 0.6, 0.8)
    pot = Potential.harmonic(G, 0.3)
    big = PolarPair(2 * pair.R, pair.S.copy())
    a, _ = evolve_classical(pair, ClassicalStepper(G, pot, 0.002), 1000, cadence=1000)
    b, _ = evolve_classical(big, ClassicalStepper(G, pot, 0.002), 1000, cadence=1000)
    assert np.max(np.abs(b.R - 2 * a.R)) < 1e-12 * np.max(b.R)
    assert np.array_equal(a.S.values, b.S.values)


def test_positivity_and_clamp_budget():
    _, pair = gaussian_packet(G, [0.0], 0.3, 1.0)
    st = ClassicalStepper(G, Potential.harmonic(G, 0.5), 0.005)
    out, _ = evolve_classical(pair, st, 200, cadence=200)
    assert np.all(out.R >= 0)
    assert max(st.clamped) < 1e-6


def test_harmonic_crest_in_caustic_free_window():
    y0, w0, dt = 5.0, 0.2, 0.002
    _, pair = gaussian_packet(G, [y0], w0)
    st = ClassicalStepper(G, Potential.harmonic(G, 1.0), dt)
    rec = FrameRecorder(lambda s: s.R**2, 10)
    n = int(round(0.2 * T / dt))
    out, _ = evolve_classical(pair, st, n, observers=[rec])
    times, frames = rec.stacked()
    track = crest_track(times, frames, G)
    assert np.max(np.abs(track.positions[:, 0] - y0 * np.cos(times))) < 1e-3 * y0
    widths = [moments(f, G)[1][0] for f in frames]
    assert max(widths) < 1.05 * w0


def test_linear_contrast_disperses():
    y0, w0 = 5.0, 0.2
    psi, pair = gaussian_packet(G, [y0], w0)
    dt = T / 4 / 500
    out, _ = evolve_linear(psi, LinearStepper(G, Potential.harmonic(G, 1.0), dt), 500)
    # quantum breathing: width at a quarter period is hbar / (2 m omega w0)
    assert packet_width(np.abs(out) ** 2, G)[0] == pytest.approx(1 / (2 * w0), rel=1e-3)


def test_caustic_monitor_plane_wave_never_triggers():
    st = ClassicalStepper(G, Potential.zero(G), 0.01)
    S = Action.plane(G, 3.0)
    assert not caustic_monitor(S, st).triggered
    for _ in range(100):
        S = step_hj(S, st)


def test_caustic_monitor_free_focus():
    a, dt = 0.5, 0.001
    t_star = 1 / (2 * a)
    st = ClassicalStepper(G, Potential.zero(G), dt)
    S = Action.quadratic_profile(G, -2 * a)
    t = 0.0
    with pytest.raises(CausticError) as info:
        for _ in range(int(2 * t_star / dt)):
            S = step_hj(S, st, t)
            t += dt
    rep = info.value.report
    assert rep.triggered and abs(rep.time - t_star) < 0.1 * t_star
    assert rep.value >= st.caustic_threshold / (dt / G.mass)


def test_harmonic_flow_smooth_before_quarter_period():
    dt = 0.002
    st = ClassicalStepper(G, Potential.harmonic(G, 1.0), dt)
    S = Action.zero(G)
    n = int(0.95 * (T / 4) / dt)
    for k in range(n):
        S = step_hj(S, st, k * dt)
    assert not caustic_monitor(S, st, n * dt).triggered
    assert S.quadratic[0, 0] == pytest.approx(-np.tan(n * dt), rel=1e-7)


def test_caustic_line_in_log():
    st = ClassicalStepper(G, Potential.zero(G), 0.01)
    pair = PolarPair(gaussian_amplitude(G, [0.0], 3.0), Action.quadratic_profile(G, -1.0))
    with pytest.raises(CausticError) as info:
        evolve_classical(pair, st, 500)
    assert info.value.log.comments[-1].startswith("caustic t=")


def _disjoint_pair(grid, speed):
    return [gaussian_packet(grid, [-10.0], 1.0, -speed)[1], gaussian_packet(grid, [10.0], 1.0, speed)[1]]


def test_superposition_matches_componentwise():
    g = Grid(1, 1024, 60.0)
    st = ClassicalStepper(g, Potential.zero(g), 0.002)
    parts = _disjoint_pair(g, 2.0)
    combined = superpose_nonoverlapping(parts)
    joint, _ = evolve_classical(combined, st, 500)
    sep = [evolve_classical(p, st, 500)[0] for p in parts]
    ref = sum(s.R for s in sep)
    assert np.max(np.abs(joint.R - ref)) < 1e-8 * np.max(ref)


def test_superposition_phases_on_supports():
    g = Grid(1, 1024, 60.0)
    parts = _disjoint_pair(g, 1.0)
    comb = superpose_nonoverlapping(parts, coefficients=[1.0, 1j])
    for part, ph in zip(parts, (0.0, np.pi / 2)):
        sup = part.R**2 > 1e-6 * np.max(part.R**2)
        d = np.angle(np.exp(1j * (comb.S.values[sup] - part.S.values[sup] - ph)))
        assert np.max(np.abs(d)) < 1e-8


def test_single_state_scaled():
    _, pair = gaussian_packet(G, [0.0], 1.0, 0.5)
    st = ClassicalStepper(G, Potential.harmonic(G, 0.2), 0.005)
    doubled = superpose_nonoverlapping([pair], coefficients=[2.0])
    a, _ = evolve_classical(pair, st, 100)
    b, _ = evolve_classical(doubled, st, 100)
    assert np.max(np.abs(b.R - 2 * a.R)) < 1e-12


def test_superposition_errors():
    with pytest.raises(ValueError):
        superpose_nonoverlapping([])
    a = gaussian_packet(G, [-1.0], 1.0)[1]
    b = gaussian_packet(G, [1.0], 1.0)[1]
    with pytest.raises(OverlapError):
        superpose_nonoverlapping([a, b])


def test_schrodinger_residual_second_order():
    L = G.extent[0]
    x = G.axes[0]
    p0 = 2 * np.pi * 8 / L
    R = 1 + 0.3 * np.cos(2 * np.pi * x / L)
    S0 = Action(G, 0.2 * np.sin(2 * np.pi * x / L), linear=[p0])
    res = []
    for dt in (0.02, 0.01):
        st = ClassicalStepper(G, Potential.zero(G), dt)
        rec = FrameRecorder(lambda s: compose(s), 1)
        n = int(round(0.4 / dt))
        evolve_classical(PolarPair(R, S0), st, n + 1, observers=[rec])
        res.append(schrodinger_residual(rec.frames[n - 1], rec.frames[n], rec.frames[n + 1], dt, G,
                                        Potential.zero(G)))
    assert res[0] / res[1] > 3.5
