"""Classical statistical dynamics of the polar pair (R, S).

S follows the classical Hamilton-Jacobi equation
    dS/dt = -|grad S|^2 / 2m - V
and R the continuity equation written as a linear operator on R,
    [d/dt + (grad S / m).grad + lap S / 2m] R = 0.
R never feeds back into S, which is what makes the pair equivalent to the
nonlinear Schrödinger equation with the quantum potential subtracted.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import CausticError, ClampBudgetError, OverlapError
from .fields import (
    Action,
    PolarPair,
    density_floor,
    gradient,
    laplacian,
    periodic_antiderivative,
    quantum_potential,
)
from .kernels import interp_periodic
from .observe import ObservationLog, run_observers


@dataclass
class CausticReport:
    triggered: bool
    time: float
    location: tuple
    value: float
    threshold: float

    def line(self):
        loc = " ".join(f"{c!r}" for c in self.location)
        return f"caustic t={self.time!r} x={loc} value={self.value!r}"


class ClassicalStepper:
    """Time step, potential and numerical knobs for the classical solver.

    ``caustic_threshold`` bounds max|lap S| * dt / m.  ``order`` is the
    Lagrange stencil used to transport R; ``velocity_order`` the stencil used
    for grad S and lap S at departure points.  ``departure`` selects how the
    feet of the characteristics are found: "midpoint" is one fixed-point
    sweep of the implicit midpoint rule, "rk4" a backward RK4 step in the
    frozen midpoint field.  Only "rk4" matches the exp(-dt lap S / 2m)
    Jacobian closely enough to hold the norm to 1e-8 over 1000 steps of a
    stretching flow.
    """

    def __init__(self, grid, potential, dt, caustic_threshold=0.5, order=8,
                 velocity_order=4, clamp_budget=1e-6, departure="rk4"):
        if not dt > 0:
            raise ValueError("dt must be positive")
        if not caustic_threshold > 0:
            raise ValueError("caustic_threshold must be positive")
        if order % 2 or order < 2:
            raise ValueError("interpolation order must be even")
        if departure not in ("rk4", "midpoint"):
            raise ValueError("departure must be 'rk4' or 'midpoint'")
        self.departure = departure
        self.grid = grid
        self.potential = potential
        self.dt = float(dt)
        self.caustic_threshold = float(caustic_threshold)
        self.order = int(order)
        self.velocity_order = int(velocity_order)
        self.clamp_budget = float(clamp_budget)
        self._flat = grid.positions.reshape(grid.dim, -1).T.copy()
        self.clamped = []

    @property
    def lap_limit(self):
        return self.caustic_threshold * self.grid.mass / self.dt


# ---------------------------------------------------------------------------
# Hamilton-Jacobi


def _lap_action(s, A, grid):
    return laplacian(s, grid) + np.trace(A)


def _check(stepper, s, A, t):
    lap = _lap_action(s, A, stepper.grid)
    idx = int(np.argmax(np.abs(lap)))
    value = float(np.abs(lap).flat[idx])
    if not np.isfinite(value) or value >= stepper.lap_limit:
        loc = tuple(float(x.flat[idx]) for x in stepper.grid.coords)
        report = CausticReport(True, float(t), loc, value, stepper.caustic_threshold)
        raise CausticError(report)


def _hj_rhs(s, b, A, pot, grid):
    m = grid.mass
    g = gradient(s, grid)
    x = grid.positions
    drift = np.einsum("ij,j...->i...", A, x) + b.reshape((-1,) + (1,) * grid.dim)
    ds = -(np.sum(drift * g, axis=0) + 0.5 * np.sum(g * g, axis=0)) / m
    ds = ds - pot.periodic - 0.5 * (b @ b) / m
    db = -(A @ b) / m - pot.slope
    dA = -(A @ A) / m - pot.curvature
    return ds, db, dA


def step_hj(S, stepper, t=0.0, dt=None):
    """One classical RK4 step of the Hamilton-Jacobi equation."""
    dt = stepper.dt if dt is None else dt
    grid = stepper.grid
    pot = stepper.potential
    s0, b0, A0 = S.periodic, S.linear, S.quadratic
    _check(stepper, s0, A0, t)
    k1 = _hj_rhs(s0, b0, A0, pot.at(t), grid)
    st = [u + 0.5 * dt * k for u, k in zip((s0, b0, A0), k1)]
    _check(stepper, st[0], st[2], t + 0.5 * dt)
    k2 = _hj_rhs(*st, pot.at(t + 0.5 * dt), grid)
    st = [u + 0.5 * dt * k for u, k in zip((s0, b0, A0), k2)]
    _check(stepper, st[0], st[2], t + 0.5 * dt)
    k3 = _hj_rhs(*st, pot.at(t + 0.5 * dt), grid)
    st = [u + dt * k for u, k in zip((s0, b0, A0), k3)]
    _check(stepper, st[0], st[2], t + dt)
    k4 = _hj_rhs(*st, pot.at(t + dt), grid)
    new = [u + dt / 6 * (a + 2 * b + 2 * c + d)
           for u, a, b, c, d in zip((s0, b0, A0), k1, k2, k3, k4)]
    if not np.all(np.isfinite(new[0])):
        raise CausticError(CausticReport(True, t + dt, (np.nan,), np.inf, stepper.caustic_threshold))
    out = Action(grid, new[0], new[1], 0.5 * (new[2] + new[2].T))
    _check(stepper, out.periodic, out.quadratic, t + dt)
    return out


def caustic_monitor(S, stepper, t=0.0):
    """Report max|lap S| and whether it crosses the stepper threshold."""
    lap = S.laplacian()
    idx = int(np.argmax(np.abs(lap)))
    value = float(np.abs(lap).flat[idx])
    loc = tuple(float(x.flat[idx]) for x in stepper.grid.coords)
    return CausticReport(value >= stepper.lap_limit, float(t), loc, value, stepper.caustic_threshold)


# ---------------------------------------------------------------------------
# continuity


def _velocity(points, S, grad_s, stepper):
    grid = stepper.grid
    v = points @ S.quadratic.T + S.linear
    for i in range(grid.dim):
        v[:, i] += interp_periodic(grad_s[i], points, grid.origin, grid.spacing,
                                   stepper.velocity_order)
    return v / grid.mass


def departure_points(S_mid, stepper, dt=None):
    """Feet of the characteristics of grad S / m that land on the grid nodes.

    Returns ``(x_dep, x_mid)``, both unwrapped.
    """
    dt = stepper.dt if dt is None else dt
    grid = stepper.grid
    X = stepper._flat
    grad_s = gradient(S_mid.periodic, grid)
    v0 = (X @ S_mid.quadratic.T + S_mid.linear + grad_s.reshape(grid.dim, -1).T) / grid.mass
    if stepper.departure == "midpoint":
        x_dep = X - dt * v0
        x_dep = X - dt * _velocity(0.5 * (X + x_dep), S_mid, grad_s, stepper)
        return x_dep, 0.5 * (X + x_dep)
    k2 = _velocity(X - 0.5 * dt * v0, S_mid, grad_s, stepper)
    k3 = _velocity(X - 0.5 * dt * k2, S_mid, grad_s, stepper)
    k4 = _velocity(X - dt * k3, S_mid, grad_s, stepper)
    x_dep = X - dt / 6 * (v0 + 2 * k2 + 2 * k3 + k4)
    return x_dep, 0.5 * (X + x_dep)


def step_continuity(R, S_mid, stepper, dt=None):
    """Semi-Lagrangian update R(x, t+dt) = R(x_dep, t) exp(-dt lap S / 2m).

    Interpolation undershoot is clamped to zero; the clamped fraction of the
    norm is appended to ``stepper.clamped``.
    """
    dt = stepper.dt if dt is None else dt
    grid = stepper.grid
    if np.any(R < 0):
        raise ValueError("R must be nonnegative")
    x_dep, x_mid = departure_points(S_mid, stepper, dt)
    lap_s = laplacian(S_mid.periodic, grid)
    lap = np.trace(S_mid.quadratic) + interp_periodic(
        lap_s, x_mid, grid.origin, grid.spacing, stepper.velocity_order)
    Rd = interp_periodic(R, x_dep, grid.origin, grid.spacing, stepper.order)
    new = (Rd * np.exp(-0.5 * dt * lap / grid.mass)).reshape(grid.shape)
    neg = new < 0
    total = float(np.sum(new**2))
    frac = float(np.sum(new[neg] ** 2)) / total if total > 0 else 0.0
    stepper.clamped.append(frac)
    if frac > stepper.clamp_budget:
        raise ClampBudgetError(f"clamped mass fraction {frac:.3e} exceeds {stepper.clamp_budget:.1e}")
    new[neg] = 0.0
    return new


def step_classical(state, stepper, t=0.0):
    """Strang step: half HJ, continuity with the midpoint action, half HJ."""
    half = 0.5 * stepper.dt
    S_mid = step_hj(state.S, stepper, t, half)
    R = step_continuity(state.R, S_mid, stepper)
    S = step_hj(S_mid, stepper, t + half, half)
    return PolarPair(R, S)


def evolve_classical(state, stepper, n_steps, observers=(), cadence=1, t0=0.0, log=None):
    """Apply ``n_steps`` classical steps, logging every ``cadence`` steps.

    A caustic adds a ``caustic ...`` comment line to the log and re-raises.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    log = ObservationLog(stepper.grid) if log is None else log
    t = t0

    def observe(step):
        extra = run_observers(observers, step, t, state)
        if step % cadence == 0:
            log.record(t, state.R**2, extra)

    observe(0)
    for step in range(1, n_steps + 1):
        try:
            state = step_classical(state, stepper, t)
        except CausticError as exc:
            log.comment(exc.report.line())
            exc.log = log
            raise
        t = t0 + step * stepper.dt
        observe(step)
    return state, log


# ---------------------------------------------------------------------------
# closure under disjoint superposition


def _voronoi(supports, grid):
    """Index of the nearest support for every grid point (periodic)."""
    reps = (3,) * grid.dim
    dist = []
    for sup in supports:
        tiled = np.tile(~sup, reps)
        d = ndimage.distance_transform_edt(tiled, sampling=grid.spacing)
        center = tuple(slice(k, 2 * k) for k in grid.n)
        dist.append(d[center])
    return np.argmin(np.stack(dist), axis=0)


def _mollify(f, grid, width):
    k2 = sum((k * width) ** 2 for k in grid.kmesh())
    return np.fft.ifftn(np.exp(-0.5 * k2) * np.fft.fftn(f)).real


def partition_of_unity(supports, grid, width):
    owner = _voronoi(supports, grid)
    chis = [_mollify((owner == a).astype(float), grid, width) for a in range(len(supports))]
    total = sum(chis)
    return [c / total for c in chis]


def _smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        f = np.where(u > 0, np.exp(-1 / np.where(u > 0, u, 1)), 0.0)
        g = np.where(u < 1, np.exp(-1 / np.where(u < 1, 1 - u, 1)), 0.0)
    return f / (f + g)


def gap_partition(supports, grid):
    """1D partition of unity: 1 on each support, a smooth step across each
    gap spanning the whole gap, so transitions are as gentle as possible."""
    n = grid.n[0]
    owner = np.full(n, -1)
    for a, sup in enumerate(supports):
        owner[sup] = a
    chis = [(owner == a).astype(float) for a in range(len(supports))]
    if np.all(owner < 0):
        raise ValueError("no support contains any grid point")
    start = int(np.flatnonzero(owner >= 0)[0])
    order = np.roll(np.arange(n), -start)
    i = 0
    while i < n:
        if owner[order[i]] >= 0:
            i += 1
            continue
        j = i
        while j < n and owner[order[j]] < 0:
            j += 1
        left, right = owner[order[i - 1]], owner[order[j % n]]
        gap = order[i:j]
        tau = _smoothstep(np.arange(1, j - i + 1) / (j - i + 1))
        chis[left][gap] += 1 - tau
        chis[right][gap] += tau
        i = j
    return chis


def superpose_nonoverlapping(states, supports=None, coefficients=None,
                             rho_floor=None, blend_width=None):
    """Combine disjoint-support states into one PolarPair.

    R is sum_a |c_a| R_a.  The combined action equals S_a + hbar arg(c_a) on
    each support; between supports it is blended through a smooth partition
    of unity (1D: by blending velocities across each gap and integrating,
    2D: by blending the periodic remainders, which requires equal polynomial
    parts).
    """
    states = list(states)
    if not states:
        raise ValueError("no states to superpose")
    grid = states[0].grid
    coeffs = np.ones(len(states), dtype=complex) if coefficients is None else np.asarray(coefficients, dtype=complex)
    if coeffs.shape != (len(states),):
        raise ValueError("one coefficient per state required")
    rho_max = max(float(np.max(st.R**2)) for st in states)
    floor = density_floor(np.array([rho_max]), rho_floor)
    for a in range(len(states)):
        for b in range(a + 1, len(states)):
            overlap = float(np.max(states[a].R * states[b].R))
            if overlap > floor:
                raise OverlapError(f"states {a} and {b} overlap: max R_a R_b = {overlap:.3e}")
    if supports is None:
        supports = [st.R**2 >= floor for st in states]
    supports = [np.asarray(s, dtype=bool) for s in supports]
    for a in range(len(supports)):
        for b in range(a + 1, len(supports)):
            if np.any(supports[a] & supports[b]):
                raise OverlapError(f"supports {a} and {b} intersect")
    R = sum(abs(c) * st.R for c, st in zip(coeffs, states))
    phases = grid.hbar * np.angle(coeffs)
    if len(states) == 1:
        S = states[0].S.copy()
        S.periodic = S.periodic + phases[0]
        return PolarPair(R, S)

    A = states[0].S.quadratic
    if any(not np.allclose(st.S.quadratic, A) for st in states):
        raise ValueError("superposed actions must share their quadratic part")
    if grid.dim == 1:
        chis = gap_partition(supports, grid)
        u = sum(chi * (st.S.linear[0] + gradient(st.S.periodic, grid)[0])
                for chi, st in zip(chis, states))
        b = float(np.mean(u))
        s = periodic_antiderivative(u, grid)
        comb = Action(grid, s, [b], A)
        full = comb.values
        for chi, st, ph, sup in zip(chis, states, phases, supports):
            w = st.R[sup] ** 2
            offset = np.sum(w * (st.S.values[sup] + ph - full[sup])) / np.sum(w)
            comb.periodic = comb.periodic + offset * chi
        return PolarPair(R, comb)

    width = 8 * max(grid.spacing) if blend_width is None else blend_width
    chis = partition_of_unity(supports, grid, width)
    b = states[0].S.linear
    if any(not np.allclose(st.S.linear, b) for st in states):
        raise ValueError("2D superposition requires equal linear action parts")
    s = sum(chi * (st.S.periodic + ph) for chi, st, ph in zip(chis, states, phases))
    return PolarPair(R, Action(grid, s, b, A))


# ---------------------------------------------------------------------------
# consistency with the complex form


def schrodinger_residual(psi_prev, psi, psi_next, dt, grid, potential, t=0.0):
    """Relative L2 residual of i hbar dpsi/dt = (p^2/2m + V - Q) psi.

    Uses a centred time difference; psi must be periodic on the grid.
    """
    hb, m = grid.hbar, grid.mass
    dpsi = (psi_next - psi_prev) / (2 * dt)
    kinetic = -(hb**2 / (2 * m)) * laplacian(psi, grid)
    Q = quantum_potential(np.abs(psi), grid)
    res = 1j * hb * dpsi - (kinetic + (potential.at(t).values - Q) * psi)
    return float(np.sqrt(np.sum(np.abs(res) ** 2) / np.sum(np.abs(psi) ** 2)))

