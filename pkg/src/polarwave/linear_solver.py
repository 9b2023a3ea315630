"""Split-step Fourier propagation of the linear Schrödinger equation."""

import numpy as np

from .errors import NormDriftError
from .fields import moments, norm
from .observe import ObservationLog, run_observers


class LinearStepper:
    """Strang splitting: half potential kick, exact kinetic drift in k-space,
    half potential kick.  Time-dependent potentials are sampled at the step
    midpoint."""

    def __init__(self, grid, potential, dt):
        if not dt > 0:
            raise ValueError("dt must be positive")
        self.grid = grid
        self.potential = potential
        self.dt = float(dt)
        k2 = sum(k**2 for k in grid.kmesh())
        self.kinetic = np.exp(-1j * grid.hbar * k2 * self.dt / (2 * grid.mass))
        self._half_kick = None if potential.time_dependent else self._kick(potential)

    def _kick(self, potential):
        return np.exp(-0.5j * potential.values * self.dt / self.grid.hbar)

    def half_kick(self, t):
        if self._half_kick is not None:
            return self._half_kick
        return self._kick(self.potential.at(t + 0.5 * self.dt))


def step_linear(psi, stepper, t=0.0):
    kick = stepper.half_kick(t)
    out = np.fft.ifftn(stepper.kinetic * np.fft.fftn(kick * psi))
    return kick * out


def evolve_linear(psi, stepper, n_steps, observers=(), cadence=1, t0=0.0,
                  norm_tol=1e-8, log=None):
    """Apply ``n_steps`` split steps, logging every ``cadence`` steps.

    Each observer is called as ``obs(t, psi)`` on its own ``cadence`` (default:
    every logged step) and may return a dict of extra log columns.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    grid = stepper.grid
    log = ObservationLog(grid) if log is None else log
    norm0 = norm(np.abs(psi) ** 2, grid)
    t = t0

    def observe(step):
        rho = np.abs(psi) ** 2
        extra = run_observers(observers, step, t, psi)
        if step % cadence == 0:
            log.record(t, rho, extra)
        drift = abs(norm(rho, grid) - norm0) / norm0
        if drift > norm_tol:
            log.comment(f"norm_drift t={t!r} value={drift!r}")
            raise NormDriftError(t, drift, norm_tol)

    observe(0)
    for step in range(1, n_steps + 1):
        psi = step_linear(psi, stepper, t)
        t = t0 + step * stepper.dt
        observe(step)
    return psi, log


def packet_width(rho, grid):
    """Standard deviation of ``rho / norm(rho)`` along each axis."""
    if not norm(rho, grid) > 0:
        raise ValueError("density has zero norm")
    return moments(rho, grid)[1]
