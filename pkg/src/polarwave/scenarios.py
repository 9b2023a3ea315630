"""Named experiments run by the ``sim`` command.

Each scenario takes a :class:`ScenarioConfig`, writes ``log.csv``,
``snapshots/`` and ``summary.csv`` under ``config.output`` and returns the
summary metrics.
"""

import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from . import io
from .classical_solver import (
    ClassicalStepper,
    evolve_classical,
    superpose_nonoverlapping,
)
from .ensembles import (
    bump_basis,
    ehrenfest_residuals,
    evolve_phase_space,
    exchange_density,
    expect_diagonal,
    mixed_density,
    phase_space_average,
    phase_space_from_R,
    phase_space_from_pure,
    potential_at,
    pure_density,
)
from .errors import ConfigError, OverlapError
from .fields import (
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
from .linear_solver import LinearStepper, evolve_linear, packet_width
from .observe import FrameRecorder, ObservationLog
from .quantization import LoopPath, bohr_check, coulomb_circular_spectrum, winding_number
from .trajectories import (
    VelocityFrames,
    crest_track,
    crest_velocity,
    histogram_l1,
    make_rng,
    propagate_ensemble,
)

TWO_PI = 2 * np.pi


@dataclass
class ScenarioConfig:
    scenario: str = ""
    # grid
    dim: int = 1
    n: int = 1024
    extent: float = 40.0
    hbar: float = 1.0
    mass: float = 1.0
    # potential: none | harmonic | linear | coulomb | file
    potential: str = "none"
    omega: float = 1.0
    force: float = 0.0
    coulomb_k: float = 1.0
    potential_file: str = ""
    # initial state
    center: float = 0.0
    width: float = 0.5
    momentum: float = 0.0
    chirp: float = 0.0
    separation: float = 20.0
    L: float = 1.0
    # solver and stepping
    solver: str = "both"
    dt: float = 0.001
    t_end: float = 0.5
    cadence: int = 10
    caustic_threshold: float = 0.5
    order: int = 8
    # ensembles
    ensemble_size: int = 20000
    seed: int = 12345
    checkpoints: int = 10
    bins: int = 64
    basis_size: int = 8
    trials: int = 100
    p_low: float = -1.0
    p_high: float = 1.0
    # spectrum
    n_max: int = 3
    # output
    output: str = "sim-out"
    threads: int = 1

    @property
    def n_steps(self):
        return int(round(self.t_end / self.dt))


POSITIVE = ("n", "extent", "hbar", "mass", "dt", "t_end", "cadence", "caustic_threshold",
            "order", "ensemble_size", "checkpoints", "bins", "basis_size", "trials", "n_max",
            "threads", "width", "coulomb_k", "omega")
FINITE = ("center", "momentum", "chirp", "force", "separation", "L", "p_low", "p_high")


def field_types():
    return {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def coerce(name, text):
    """Parse a textual override into the field's type."""
    types = field_types()
    if name not in types:
        raise ConfigError(f"unknown config key '{name}'")
    kind = types[name]
    try:
        if kind in (int, "int"):
            return int(text)
        if kind in (float, "float"):
            return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot parse '{text}'") from None
    return str(text)


def validate(cfg):
    if cfg.scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario '{cfg.scenario}'; valid: {', '.join(REGISTRY)}")
    for name in POSITIVE:
        v = getattr(cfg, name)
        if not (np.isfinite(v) and v > 0):
            raise ConfigError(f"{name} must be positive and finite (got {v})")
    for name in FINITE:
        if not np.isfinite(getattr(cfg, name)):
            raise ConfigError(f"{name} must be finite")
    if cfg.dim not in (1, 2):
        raise ConfigError("dim must be 1 or 2")
    if cfg.n < 4 or cfg.n & (cfg.n - 1):
        raise ConfigError("n must be a power of two >= 4")
    if cfg.potential not in ("none", "harmonic", "linear", "coulomb", "file"):
        raise ConfigError(f"unknown potential '{cfg.potential}'")
    if cfg.potential == "file" and not os.path.isfile(cfg.potential_file):
        raise ConfigError(f"potential_file '{cfg.potential_file}' not found")
    if cfg.solver not in ("linear", "classical", "both"):
        raise ConfigError("solver must be linear, classical or both")
    if cfg.order % 2:
        raise ConfigError("order must be even")
    if cfg.p_high < cfg.p_low:
        raise ConfigError("p_high must be >= p_low")
    if cfg.n_steps < 1:
        raise ConfigError("t_end must cover at least one dt")
    return cfg


# ---------------------------------------------------------------------------
# helpers


def make_grid(cfg):
    return Grid(cfg.dim, cfg.n, cfg.extent, cfg.hbar, cfg.mass)


def make_potential(cfg, grid):
    if cfg.potential == "harmonic":
        return Potential.harmonic(grid, cfg.omega)
    if cfg.potential == "linear":
        return Potential.linear(grid, cfg.force)
    if cfg.potential == "file":
        vals = np.loadtxt(cfg.potential_file, delimiter=",", ndmin=1).reshape(grid.shape)
        return Potential.sampled(grid, vals)
    if cfg.potential == "coulomb":
        raise ConfigError("the coulomb potential is only available through the bohr scenario")
    return Potential.zero(grid)


class Output:
    def __init__(self, cfg):
        self.root = io.ensure_dir(cfg.output)
        self.snap = io.ensure_dir(os.path.join(self.root, "snapshots"))

    def path(self, name):
        return os.path.join(self.root, name)

    def snapshot(self, name, values, grid):
        io.write_field_csv(os.path.join(self.snap, name + ".csv"), values, grid)
        io.write_field_raw(os.path.join(self.snap, name + ".f64"), values, grid)


def _center(cfg):
    return [cfg.center] * cfg.dim


def initial_state(cfg, grid):
    """Gaussian R with S = chirp/2 |x-c|^2 + p.(x-c); returns (psi, pair)."""
    c = _center(cfg)
    R = gaussian_amplitude(grid, c, cfg.width)
    S = Action.quadratic_profile(grid, cfg.chirp, c, [cfg.momentum] * cfg.dim)
    pair = PolarPair(R, S)
    return compose(pair), pair


def _rows_log(path, grid, header, rows, comments=()):
    with open(path, "w", encoding="utf-8") as fh:
        if grid is not None:
            fh.write(f"# grid: {grid.describe()}\n")
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in r) + "\n")


def visibility(rho, x, center, period):
    """(max - min) / (max + min) over one fringe period centred on ``center``."""
    sel = np.abs(x - center) <= 0.5 * period
    hi, lo = float(np.max(rho[sel])), float(np.min(rho[sel]))
    return (hi - lo) / (hi + lo)


def fourier_two_packet(x, t, packets, hbar=1.0, mass=1.0, nk=4001):
    """Free evolution of a sum of Gaussian packets by direct k-quadrature.

    ``packets``: (center, width, momentum) with width the density std.
    """
    psi = np.zeros_like(x, dtype=complex)
    for c, l, p in packets:
        k0 = p / hbar
        k = np.linspace(k0 - 12 / l, k0 + 12 / l, nk)
        dk = k[1] - k[0]
        amp = (2 * np.pi * l**2) ** -0.25 * np.sqrt(4 * np.pi) * l
        phik = amp * np.exp(-1j * (k - k0) * c - l**2 * (k - k0) ** 2)
        phase = np.exp(1j * (np.outer(x, k) - hbar * k**2 * t / (2 * mass)))
        w = np.full(nk, dk)
        w[[0, -1]] *= 0.5
        psi += phase @ (phik * w) / (2 * np.pi)
    return psi


# ---------------------------------------------------------------------------
# scenarios


def run_free_dispersion(cfg, out):
    grid = make_grid(cfg)
    l0 = cfg.width
    psi, pair = gaussian_packet(grid, _center(cfg), l0, 0.0)
    pot = Potential.zero(grid)
    m = {}
    expected = np.sqrt(1 + (cfg.hbar * cfg.t_end / (2 * cfg.mass * l0**2)) ** 2)
    log = ObservationLog(grid)
    log.comment("solver=linear")
    if cfg.solver in ("linear", "both"):
        psi_t, log = evolve_linear(psi, LinearStepper(grid, pot, cfg.dt), cfg.n_steps,
                                   cadence=cfg.cadence, log=log)
        ratio = float(packet_width(np.abs(psi_t) ** 2, grid)[0] / packet_width(np.abs(psi) ** 2, grid)[0])
        m["linear_width_ratio"] = ratio
        m["linear_width_ratio_expected"] = float(expected)
        m["linear_width_ratio_error"] = abs(ratio - expected)
        out.snapshot("linear_rho_final", np.abs(psi_t) ** 2, grid)
    if cfg.solver in ("classical", "both"):
        clog = ObservationLog(grid)
        st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
        final, clog = evolve_classical(pair, st, cfg.n_steps, cadence=cfg.cadence, log=clog)
        ratio = float(packet_width(final.R**2, grid)[0] / packet_width(pair.R**2, grid)[0])
        m["classical_width_ratio"] = ratio
        m["classical_norm_drift"] = abs(norm(final.R**2, grid) - 1)
        out.snapshot("classical_rho_final", final.R**2, grid)
        clog.to_csv(out.path("log_classical.csv"))
    m["width_ratio_expected_closed_form"] = float(expected)
    log.to_csv(out.path("log.csv"))
    return m


def run_harmonic_soliton(cfg, out):
    if cfg.potential != "harmonic":
        raise ConfigError("harmonic-soliton needs potential = harmonic")
    grid = make_grid(cfg)
    pot = Potential.harmonic(grid, cfg.omega)
    y0 = cfg.center
    _, pair = gaussian_packet(grid, _center(cfg), cfg.width, 0.0)
    st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
    rec = FrameRecorder(lambda s: s.R**2, 1)
    vel = FrameRecorder(lambda s: s.S.gradient() / grid.mass, 1)
    rec.cadence = vel.cadence = cfg.cadence
    log = ObservationLog(grid)
    log.comment(f"classical harmonic omega={cfg.omega} y0={y0}")
    final, log = evolve_classical(pair, st, cfg.n_steps, observers=[rec, vel], cadence=cfg.cadence, log=log)
    log.to_csv(out.path("log.csv"))
    times, frames = rec.stacked()
    _, vframes = vel.stacked()
    track = crest_track(times, frames, grid)
    xs = track.unwrapped()[:, 0]
    oracle = y0 * np.cos(cfg.omega * times)
    crest_v = crest_velocity(track)[:, 0]
    v_at = np.array([np.interp(x, grid.axes[0], vf[0]) for x, vf in zip(xs, vframes)])
    vmax = abs(y0 * cfg.omega)
    w = np.array([moments(f, grid)[1][0] for f in frames])
    _rows_log(out.path("crest.csv"), grid, ["t", "crest_x", "oracle_x", "crest_v", "field_v"],
              zip(times, xs, oracle, crest_v, v_at))
    out.snapshot("classical_rho_final", final.R**2, grid)
    return {
        "crest_max_error": float(np.max(np.abs(xs - oracle))),
        "crest_max_error_over_amplitude": float(np.max(np.abs(xs - oracle)) / abs(y0)),
        "crest_velocity_residual_over_vmax": float(np.max(np.abs(crest_v - v_at)) / vmax),
        "width_growth": float(np.max(w) / w[0] - 1),
        "t_end": float(times[-1]),
        "norm_drift": abs(norm(final.R**2, grid) - 1),
    }


def double_slit_packets(cfg):
    c = 0.5 * cfg.separation
    return [(-c, cfg.width, abs(cfg.momentum)), (c, cfg.width, -abs(cfg.momentum))]


def run_double_slit(cfg, out):
    grid = make_grid(cfg)
    x = grid.axes[0]
    pot = Potential.zero(grid)
    packets = double_slit_packets(cfg)
    t_cross = 0.5 * cfg.separation * cfg.mass / abs(cfg.momentum)
    n_steps = int(round(t_cross / cfg.dt))
    t_cross = n_steps * cfg.dt
    period = TWO_PI * cfg.hbar / (2 * abs(cfg.momentum))

    psi0 = sum(gaussian_packet(grid, [c], l, p)[0] for c, l, p in packets) / np.sqrt(2)
    psi, log = evolve_linear(psi0, LinearStepper(grid, pot, cfg.dt), n_steps, cadence=cfg.cadence)
    log.to_csv(out.path("log.csv"))
    rho_lin = np.abs(psi) ** 2
    oracle = np.abs(fourier_two_packet(x, t_cross, packets, cfg.hbar, cfg.mass)) ** 2 / 2
    agreement = float(np.max(np.abs(rho_lin - oracle)) / np.max(oracle))

    st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
    comps = []
    for c, l, p in packets:
        _, pair = gaussian_packet(grid, [c], l, p)
        comps.append(evolve_classical(pair, st, n_steps)[0])
    rho_cl = 0.5 * sum(s.R**2 for s in comps)

    out.snapshot("linear_rho_crossing", rho_lin, grid)
    out.snapshot("oracle_rho_crossing", oracle, grid)
    out.snapshot("classical_mixture_rho_crossing", rho_cl, grid)
    closure = locality_closure(grid, cfg)
    return {
        "t_cross": t_cross,
        "fringe_period": period,
        "linear_visibility": visibility(rho_lin, x, 0.0, period),
        "oracle_visibility": visibility(oracle, x, 0.0, period),
        "linear_oracle_max_deviation": agreement,
        "classical_visibility": visibility(rho_cl, x, 0.0, period),
        "classical_combined_vs_componentwise": closure,
    }


def locality_closure(grid, cfg, t_end=1.0, half_gap=10.0, width=1.0, speed=2.0):
    """max |R_combined - sum R_a| / max R for two packets moving apart."""
    pot = Potential.zero(grid)
    st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
    n = int(round(t_end / cfg.dt))
    parts = [gaussian_packet(grid, [-half_gap], width, -speed)[1],
             gaussian_packet(grid, [half_gap], width, speed)[1]]
    combined = superpose_nonoverlapping(parts)
    joint = evolve_classical(combined, st, n)[0]
    sep = [evolve_classical(p, st, n)[0] for p in parts]
    ref = sum(s.R for s in sep)
    return float(np.max(np.abs(joint.R - ref)) / np.max(ref))


def _harmonic_frames(cfg, grid, pot, t_end, frame_every, solver):
    """Density and velocity-source frames from either solver."""
    n_steps = int(round(t_end / cfg.dt))
    psi, pair = initial_state(cfg, grid)
    if solver == "linear":
        rec = FrameRecorder(lambda p: p.copy(), frame_every)
        evolve_linear(psi, LinearStepper(grid, pot, cfg.dt), n_steps, observers=[rec], cadence=frame_every)
        times, psis = rec.stacked()
        return times, np.abs(psis) ** 2, list(psis)
    rec = FrameRecorder(lambda s: s.copy(), frame_every)
    st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
    evolve_classical(pair, st, n_steps, observers=[rec], cadence=frame_every)
    return np.array(rec.times), np.stack([s.R**2 for s in rec.frames]), [s.S for s in rec.frames]


def run_equivariance(cfg, out):
    grid = make_grid(cfg)
    pot = make_potential(cfg, grid)
    period = TWO_PI / cfg.omega
    t_end = min(cfg.t_end, period)
    times, rhos, psis = _harmonic_frames(cfg, grid, pot, t_end, 1, "linear")
    src = VelocityFrames.from_wavefunctions(grid, times, np.stack(psis))
    nt = len(times) - 1
    every = max(1, nt // cfg.checkpoints)
    ens = propagate_ensemble(rhos[0], grid, cfg.ensemble_size, src, times[0], times[-1], cfg.dt,
                             cfg.seed, record_every=every)
    rows, l1s = [], []
    for k, t in enumerate(ens.times):
        j = int(np.argmin(np.abs(times - t)))
        l1 = histogram_l1(ens.at_index(k), rhos[j], grid, cfg.bins)
        mean, width = moments(rhos[j], grid)
        rows.append((t, mean, width, l1))
        l1s.append(l1)
    io.write_ensemble_summary(out.path("ensemble_summary.csv"), rows, grid.dim)
    sub = dataclasses.replace(ens, positions=ens.positions[:100], aborted=ens.aborted[:100])
    io.write_trajectories_csv(out.path("trajectories.csv"), sub)
    _rows_log(out.path("log.csv"), grid, ["t", "L1_to_rho"], [(r[0], r[3]) for r in rows])
    out.snapshot("linear_rho_final", rhos[-1], grid)
    return {
        "checkpoints": len(l1s) - 1,
        "l1_max": float(max(l1s[1:])),
        "l1_initial": float(l1s[0]),
        "abort_fraction": ens.abort_fraction,
        "ensemble_size": cfg.ensemble_size,
    }


def ehrenfest_run(cfg, grid, pot, solver, t_end, frame_every):
    times, rhos, frames = _harmonic_frames(cfg, grid, pot, t_end, frame_every, solver)
    return ehrenfest_residuals(times, rhos, frames, pot, grid)


def run_ehrenfest(cfg, out):
    grid = make_grid(cfg)
    pot = make_potential(cfg, grid)
    period = TWO_PI / cfg.omega
    scale = cfg.mass * cfg.omega**2 * abs(cfg.center)
    frame_dt = period / 500
    every = max(1, int(round(frame_dt / cfg.dt)))
    m = {"frame_dt": every * cfg.dt}
    rows = []
    solvers = ("linear", "classical") if cfg.solver == "both" else (cfg.solver,)
    for solver in solvers:
        # every regular classical flow in the well focuses within half a period;
        # stay inside the caustic-free window
        t_end = period if solver == "linear" else min(cfg.t_end, 0.2 * period)
        coarse = ehrenfest_run(cfg, grid, pot, solver, t_end, every)
        fine = ehrenfest_run(cfg, grid, pot, solver, t_end, max(1, every // 2))
        r2c, r2f = float(np.max(coarse.r2)), float(np.max(fine.r2))
        m[f"{solver}_r1_max"] = float(np.max(coarse.r1))
        m[f"{solver}_r2_max"] = r2c
        m[f"{solver}_r2_over_scale"] = r2c / scale
        m[f"{solver}_r2_halving_factor"] = r2c / r2f
        m[f"{solver}_t_end"] = t_end
        rows += [(solver, t, x[0], a[0], b[0]) for t, x, a, b in zip(coarse.times, coarse.mean_x, coarse.r1, coarse.r2)]
    _rows_log(out.path("log.csv"), grid, ["solver", "t", "mean_x", "r1", "r2"], rows)
    return m


def run_pure_vs_mixed(cfg, out):
    grid = make_grid(cfg)
    basis = bump_basis(grid, cfg.basis_size)
    rng = make_rng(cfg.seed)
    rows, worst, worst_field = [], 0.0, 0.0
    for i in range(cfg.trials):
        w = rng.dirichlet(np.ones(cfg.basis_size))
        A = rng.normal(size=grid.shape)
        pure = expect_diagonal(pure_density(w, basis), A)
        mix = expect_diagonal(mixed_density(w, basis), A)
        direct = norm(basis.combine(w) ** 2 * A, grid)
        worst = max(worst, abs(pure - mix))
        worst_field = max(worst_field, abs(direct - mix))
        rows.append((i, pure, mix, abs(pure - mix)))
    _rows_log(out.path("log.csv"), grid, ["trial", "pure", "mixed", "abs_diff"], rows)
    dm = pure_density(np.full(cfg.basis_size, 1.0 / cfg.basis_size), basis)
    dm.to_csv(out.path("density_matrix_pure.csv"))
    ex = exchange_density(basis.members[0], basis.members[1], grid)
    return {
        "trials": cfg.trials,
        "basis_size": cfg.basis_size,
        "max_abs_pure_minus_mixed": worst,
        "max_abs_field_minus_mixed": worst_field,
        "exchange_term": ex.exchange,
    }


def run_exchange_term(cfg, out):
    grid = make_grid(cfg)
    basis = bump_basis(grid, 2)
    ex = exchange_density(basis.members[0], basis.members[1], grid)
    if ex.density is not None:
        out.snapshot("two_particle_density_x0", ex.density[:, int(np.argmax(basis.members[0]))], grid)
    R1 = gaussian_amplitude(grid, [-0.5 * cfg.width], cfg.width)
    R2 = gaussian_amplitude(grid, [0.5 * cfg.width], cfg.width)
    try:
        exchange_density(R1, R2, grid)
        overlapping = 0.0
        rejected = 0
    except OverlapError as exc:
        overlapping = exc.exchange
        rejected = 1
    _rows_log(out.path("log.csv"), grid, ["case", "exchange", "total"],
              [("disjoint", ex.exchange, ex.total), ("overlapping", overlapping, float("nan"))])
    return {
        "disjoint_exchange": ex.exchange,
        "disjoint_total": ex.total,
        "overlapping_exchange": overlapping,
        "overlapping_rejected": rejected,
    }


def run_phase_space(cfg, out):
    grid = make_grid(cfg)
    pot = make_potential(cfg, grid)
    period = TWO_PI / cfg.omega
    t_end = min(cfg.t_end, 0.2 * period)
    n_steps = int(round(t_end / cfg.dt))
    t_end = n_steps * cfg.dt
    _, pair = initial_state(cfg, grid)
    st = ClassicalStepper(grid, pot, cfg.dt, cfg.caustic_threshold, cfg.order)
    final, log = evolve_classical(pair, st, n_steps, cadence=cfg.cadence)
    log.to_csv(out.path("log.csv"))

    ens = phase_space_from_pure(pair, cfg.ensemble_size, cfg.seed)
    moved = evolve_phase_space(ens, pot, 0.0, t_end, cfg.dt)
    rho_t = final.R**2
    l1 = histogram_l1(moved.positions, rho_t, grid, cfg.bins)
    p_field = final.S.gradient_at(moved.positions)
    p_err = float(np.max(np.abs(moved.momenta - p_field)))

    def energy(x, p):
        return np.sum(p**2, axis=1) / (2 * grid.mass) + potential_at(pot, x)

    e_ens = phase_space_average(ens, energy)
    g = pair.S.gradient()
    e_field = norm(pair.R**2 * (np.sum(g**2, axis=0) / (2 * grid.mass) + pot.values), grid)
    box = phase_space_from_R(pair.R, grid, (cfg.p_low, cfg.p_high), cfg.ensemble_size, cfg.seed)
    kin_box = (cfg.p_low**2 + cfg.p_low * cfg.p_high + cfg.p_high**2) / (6 * grid.mass)
    e_box_expected = kin_box * grid.dim + norm(pair.R**2 * pot.values, grid)
    moved.to_csv(out.path("phase_space.csv"))
    out.snapshot("classical_rho_final", rho_t, grid)
    return {
        "t_end": t_end,
        "liouville_position_l1": l1,
        "liouville_momentum_max_error": p_err,
        "energy_ensemble": e_ens,
        "energy_field": e_field,
        "box_energy": phase_space_average(box, energy),
        "box_energy_expected": e_box_expected,
    }


def run_bohr(cfg, out):
    sp = coulomb_circular_spectrum(cfg.coulomb_k, cfg.mass, cfg.hbar, cfg.n_max)
    sp.to_csv(out.path("spectrum.csv"))
    loop = LoopPath.angular(256)
    half = winding_number(lambda a: 2.5 * cfg.hbar * a, loop, cfg.hbar)
    n_L, dev_L = bohr_check(cfg.L, cfg.hbar)
    _rows_log(out.path("log.csv"), None, ["n", "r_n", "E_n", "winding_ok", "hj_residual"],
              zip(sp.n, sp.radius, sp.energy, sp.winding_ok.astype(int), sp.hj_residual))
    m = {f"E_{n}": float(e) for n, e in zip(sp.n, sp.energy)}
    m.update({f"r_{n}": float(r) for n, r in zip(sp.n, sp.radius)})
    m["winding_all_ok"] = bool(np.all(sp.winding_ok))
    m["max_hj_residual"] = float(np.max(sp.hj_residual))
    m["half_integer_residual"] = half.residual
    m["L_nearest_n"] = n_L
    m["L_deviation"] = dev_L
    return m


@dataclass
class Scenario:
    run: object
    description: str
    defaults: dict = field(default_factory=dict)


REGISTRY = {
    "free-dispersion": Scenario(
        run_free_dispersion, "free Gaussian: linear spreading versus classical non-dispersion",
        dict(width=0.5, t_end=0.5, dt=0.001)),
    "harmonic-soliton": Scenario(
        run_harmonic_soliton, "classical crest in a harmonic well against the oscillator ODE",
        dict(potential="harmonic", center=5.0, width=0.2, t_end=0.2 * TWO_PI, dt=0.002, cadence=5)),
    "double-slit": Scenario(
        run_double_slit, "two crossing packets: linear fringes versus classical mixture",
        dict(extent=60.0, width=2.0, separation=24.0, momentum=3.0, dt=0.002, cadence=50)),
    "equivariance": Scenario(
        run_equivariance, "Bohmian ensemble histogram against |psi|^2 in a harmonic well",
        dict(potential="harmonic", center=2.0, width=1 / np.sqrt(2), t_end=TWO_PI, dt=0.01)),
    "ehrenfest": Scenario(
        run_ehrenfest, "Ehrenfest residuals for both solvers in a harmonic well",
        dict(potential="harmonic", center=3.0, width=0.5, chirp=0.5, t_end=TWO_PI, dt=TWO_PI / 10000)),
    "pure-vs-mixed": Scenario(
        run_pure_vs_mixed, "pure and mixed states over a disjoint positive basis",
        dict()),
    "exchange-term": Scenario(
        run_exchange_term, "two-particle exchange term for disjoint and overlapping supports",
        dict(width=1.0)),
    "phase-space": Scenario(
        run_phase_space, "Hamilton flow of a phase-space ensemble against the field solution",
        dict(potential="harmonic", center=2.0, width=0.5, momentum=0.5, t_end=1.0, dt=0.002)),
    "bohr": Scenario(
        run_bohr, "circular Coulomb orbits from single-valued S",
        dict(potential="coulomb")),
}


def build_config(scenario, file_values=None, overrides=None):
    """Scenario defaults, then config-file values, then overrides."""
    if scenario not in REGISTRY:
        raise ConfigError(f"unknown scenario '{scenario}'; valid: {', '.join(REGISTRY)}")
    values = dict(REGISTRY[scenario].defaults)
    for src in (file_values or {}), (overrides or {}):
        for k, v in src.items():
            values[k] = coerce(k, v) if isinstance(v, str) else v
    values["scenario"] = scenario
    return validate(ScenarioConfig(**values))


def run(cfg):
    out = Output(cfg)
    metrics = REGISTRY[cfg.scenario].run(cfg, out)
    io.write_summary(out.path("summary.csv"), {"scenario": cfg.scenario, "seed": cfg.seed, **metrics})
    return metrics
