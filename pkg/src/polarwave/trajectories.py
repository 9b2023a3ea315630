"""Particle trajectories along grad S / m, ensembles and crest tracking."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LostCrestError, MaskedRegionError, SamplingError
from .fields import moments, velocity_field
from .kernels import interp_periodic, stencil_touches


def make_rng(seed, stream=0):
    """Counter-based generator; ``stream`` selects an independent substream."""
    ss = np.random.SeedSequence(seed)
    child = ss.spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(child))


class VelocityFrames:
    """Gridded velocity fields at stored times.

    Values between nodes use ``order``-point Lagrange interpolation, values
    between frames linear interpolation in time.
    """

    def __init__(self, grid, times, frames, masks=None, order=4, static=False):
        self.grid = grid
        self.static = static
        self.times = np.asarray(times, dtype=float)
        self.frames = np.asarray(frames, dtype=float)
        if self.frames.shape != (len(self.times), grid.dim) + grid.shape:
            raise ValueError(f"frames must have shape (nt, dim, *grid.shape), got {self.frames.shape}")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("frame times must be increasing")
        self.masks = None if masks is None else np.asarray(masks, dtype=bool)
        self.order = order

    @classmethod
    def from_wavefunctions(cls, grid, times, psis, rho_floor=None, order=4):
        vs, ms = zip(*(velocity_field(p, grid, rho_floor) for p in psis))
        return cls(grid, times, np.stack(vs), np.stack(ms), order)

    @classmethod
    def from_actions(cls, grid, times, actions, order=4):
        return cls(grid, times, np.stack([S.gradient() / grid.mass for S in actions]), None, order)

    @classmethod
    def frozen(cls, grid, velocity, mask=None, order=4):
        """A time-independent field, valid at every t."""
        v = np.asarray(velocity, dtype=float)
        masks = None if mask is None else np.stack([mask, mask])
        return cls(grid, [0.0, 1.0], np.stack([v, v]), masks, order, static=True)

    def covers(self, t0, t1):
        if self.static:
            return True
        eps = 1e-9 * max(1.0, abs(self.times[-1]))
        return self.times[0] - eps <= min(t0, t1) and max(t0, t1) <= self.times[-1] + eps

    def _eval(self, k, pts):
        g = self.grid
        return np.stack([interp_periodic(self.frames[k, i], pts, g.origin, g.spacing, self.order)
                         for i in range(g.dim)], axis=1)

    def _bad(self, k, pts):
        if self.masks is None:
            return np.zeros(len(pts), dtype=bool)
        return stencil_touches(self.masks[k], pts, self.grid.origin, self.grid.spacing, self.order)

    def __call__(self, points, t):
        """Velocities ``(npts, dim)`` and a flag for points touching a mask."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.grid.dim)
        if self.static:
            return self._eval(0, pts), self._bad(0, pts)
        if not self.covers(t, t):
            raise ValueError(f"t={t} outside stored frames [{self.times[0]}, {self.times[-1]}]")
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        theta = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        if theta <= 1e-12:
            return self._eval(k, pts), self._bad(k, pts)
        if theta >= 1 - 1e-12:
            return self._eval(k + 1, pts), self._bad(k + 1, pts)
        v = (1 - theta) * self._eval(k, pts) + theta * self._eval(k + 1, pts)
        return v, self._bad(k, pts) | self._bad(k + 1, pts)


@dataclass
class Trajectory:
    times: np.ndarray
    positions: np.ndarray
    extent: Optional[tuple] = None
    aborted: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float).reshape(len(self.times), -1)
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def unwrapped(self):
        if self.extent is None:
            return self.positions
        out = self.positions.copy()
        for i, L in enumerate(self.extent):
            out[:, i] = np.unwrap(out[:, i], period=L)
        return out

    def at(self, t):
        """Position at time t from 4-point Lagrange interpolation in time."""
        if not (self.times[0] - 1e-12 <= t <= self.times[-1] + 1e-12):
            raise ValueError(f"t={t} outside trajectory range [{self.times[0]}, {self.times[-1]}]")
        x = self.unwrapped()
        nt = len(self.times)
        if nt < 4:
            return np.array([np.interp(t, self.times, x[:, i]) for i in range(x.shape[1])])
        k = int(np.clip(np.searchsorted(self.times, t) - 2, 0, nt - 4))
        ts = self.times[k:k + 4]
        out = np.zeros(x.shape[1])
        for j in range(4):
            w = np.prod([(t - ts[m]) / (ts[j] - ts[m]) for m in range(4) if m != j])
            out += w * x[k + j]
        return out


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray
    positions: np.ndarray  # (n, nt, dim), wrapped into the box
    aborted: np.ndarray
    seed: Optional[int] = None
    extent: Optional[tuple] = None

    @property
    def trajectories(self):
        return [Trajectory(self.times, p, self.extent, bool(a))
                for p, a in zip(self.positions, self.aborted)]

    @property
    def abort_fraction(self):
        return float(np.mean(self.aborted))

    def at_index(self, k):
        """Positions of the surviving members at recorded time ``k``."""
        return self.positions[~self.aborted, k]


def _rk4(x0, source, t0, t1, dt, record_every=1, wrap=None):
    """Vectorised RK4 on dx/dt = v(x, t); returns times, states, aborted flags."""
    span = t1 - t0
    nsteps = max(1, int(np.ceil(abs(span) / dt - 1e-9)))
    h = span / nsteps
    x = np.array(x0, dtype=float)
    aborted = np.zeros(len(x), dtype=bool)
    times = [t0]
    out = [x.copy()]
    t = t0
    for step in range(1, nsteps + 1):
        k1, b1 = source(x, t)
        k2, b2 = source(x + 0.5 * h * k1, t + 0.5 * h)
        k3, b3 = source(x + 0.5 * h * k2, t + 0.5 * h)
        k4, b4 = source(x + h * k3, t + h)
        bad = b1 | b2 | b3 | b4
        x_new = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        aborted |= bad
        x = np.where(aborted[:, None], x, x_new)
        t = t0 + step * h
        if step % record_every == 0 or step == nsteps:
            times.append(t)
            out.append(x.copy())
    states = np.stack(out, axis=1)
    if wrap is not None:
        states = wrap(states)
    return np.array(times), states, aborted


def integrate_trajectory(x0, source, t0, t1, dt):
    """Classic RK4 on dx/dt = grad S(x, t)/m along one path."""
    if not source.covers(t0, t1):
        raise ValueError("velocity frames do not cover the requested interval")
    grid = source.grid
    x0 = np.asarray(x0, dtype=float).reshape(1, grid.dim)
    times, states, aborted = _rk4(x0, source, t0, t1, dt, wrap=grid.wrap)
    if aborted[0]:
        raise MaskedRegionError(f"trajectory from {x0[0]} entered a masked region")
    return Trajectory(times, states[0], grid.extent)


def sample_density(rho, grid, n, rng, max_rounds=200):
    """Draw ``n`` points from a gridded density (piecewise constant on cells).

    1D uses the inverse CDF; 2D uses rejection on cells inside the support's
    bounding box.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0) or not np.sum(rho) > 0:
        raise SamplingError("density must be nonnegative with positive mass")
    h = np.array(grid.spacing)
    if grid.dim == 1:
        cdf = np.cumsum(rho) / np.sum(rho)
        u = rng.random(n)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), grid.n[0] - 1)
        return (grid.axes[0][idx] + (rng.random(n) - 0.5) * h[0]).reshape(n, 1)
    top = float(np.max(rho))
    live = np.argwhere(rho > 1e-14 * top)
    lo, hi = live.min(axis=0), live.max(axis=0)
    out = []
    have = 0
    for _ in range(max_rounds):
        m = max(2 * (n - have), 1024)
        ix = rng.integers(lo[0], hi[0] + 1, size=m)
        iy = rng.integers(lo[1], hi[1] + 1, size=m)
        keep = rng.random(m) * top < rho[ix, iy]
        ix, iy = ix[keep], iy[keep]
        pts = np.stack([grid.axes[0][ix], grid.axes[1][iy]], axis=1)
        pts += (rng.random(pts.shape) - 0.5) * h
        out.append(pts)
        have += len(pts)
        if have >= n:
            return np.concatenate(out)[:n]
    raise SamplingError(f"rejection sampling produced {have} of {n} points")


def propagate_ensemble(rho0, grid, n, source, t0, t1, dt, seed, record_every=1):
    """Sample ``n`` points from rho0 and carry them along the velocity frames."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not source.covers(t0, t1):
        raise ValueError("velocity frames do not cover the requested interval")
    rng = make_rng(seed)
    x0 = sample_density(rho0, grid, n, rng)
    times, states, aborted = _rk4(x0, source, t0, t1, dt, record_every, wrap=grid.wrap)
    return TrajectoryEnsemble(times, states, aborted, seed, grid.extent)


# ---------------------------------------------------------------------------
# histogram comparison


def _cell_overlap(axis, h, edges):
    """Fraction of each grid cell falling in each bin, shape (ncells, nbins)."""
    lo = axis[:, None] - h / 2
    hi = axis[:, None] + h / 2
    a = np.maximum(lo, edges[None, :-1])
    b = np.minimum(hi, edges[None, 1:])
    return np.clip(b - a, 0, None) / h


def bin_masses(rho, grid, edges):
    """Probability mass of the cell-constant density in each bin."""
    p = rho / np.sum(rho)
    F = [_cell_overlap(ax, h, e) for ax, h, e in zip(grid.axes, grid.spacing, edges)]
    if grid.dim == 1:
        return p @ F[0]
    return F[0].T @ p @ F[1]


def default_edges(rho, grid, bins=64, span=6.0):
    mean, width = moments(rho, grid)
    edges = []
    for m, w, o, e in zip(mean, width, grid.origin, grid.extent):
        lo, hi = max(m - span * w, o), min(m + span * w, o + e)
        edges.append(np.linspace(lo, hi, bins + 1))
    return edges


def histogram_l1(points, rho, grid, bins=64, edges=None):
    """L1 distance between the sample histogram and the density's bin masses.

    Mass outside the binned window counts as one extra bin.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, grid.dim)
    edges = default_edges(rho, grid, bins) if edges is None else edges
    counts, _ = np.histogramdd(pts, bins=edges)
    emp = counts / len(pts)
    ref = bin_masses(rho, grid, edges)
    return float(np.sum(np.abs(emp - ref)) + abs((1 - emp.sum()) - (1 - ref.sum())))


# ---------------------------------------------------------------------------
# measurement by two positions


def indirect_momentum(traj, t, dt_meas, mass):
    """m (x(t + dt) - x(t)) / dt with the minimal-image displacement."""
    if not dt_meas > 0:
        raise ValueError("dt_meas must be positive")
    x1 = traj.at(t)
    x2 = traj.at(t + dt_meas)
    d = x2 - x1
    if traj.extent is not None:
        ext = np.asarray(traj.extent)
        d = d - ext * np.round(d / ext)
    return mass * d / dt_meas


# ---------------------------------------------------------------------------
# crest tracking


def _parabolic(lm, l0, lp):
    den = lm - 2 * l0 + lp
    return 0.0 if den == 0 else 0.5 * (lm - lp) / den


def crest_track(times, frames, grid, half_window=16, start=None):
    """Density maximum per frame, refined by a 3-point parabola on log(rho).

    The search window (``half_window`` nodes each side) follows the crest.
    """
    frames = np.asarray(frames, dtype=float)
    idx = np.array(np.unravel_index(np.argmax(frames[0]), grid.shape)) if start is None else np.asarray(start)
    n = np.array(grid.n)
    out = []
    for t, rho in zip(times, frames):
        offsets = np.arange(-half_window, half_window + 1)
        if grid.dim == 1:
            ids = (idx[0] + offsets) % n[0]
            k = int(np.argmax(rho[ids]))
            if k in (0, len(offsets) - 1):
                raise LostCrestError(f"crest reached the tracking window edge at t={t}")
            idx = np.array([ids[k]])
        else:
            ix = (idx[0] + offsets) % n[0]
            iy = (idx[1] + offsets) % n[1]
            win = rho[np.ix_(ix, iy)]
            kx, ky = np.unravel_index(np.argmax(win), win.shape)
            if kx in (0, len(offsets) - 1) or ky in (0, len(offsets) - 1):
                raise LostCrestError(f"crest reached the tracking window edge at t={t}")
            idx = np.array([ix[kx], iy[ky]])
        pos = []
        for axis in range(grid.dim):
            sl = list(idx)
            vals = []
            for d in (-1, 0, 1):
                sl[axis] = (idx[axis] + d) % n[axis]
                vals.append(rho[tuple(sl)])
            vals = np.log(np.maximum(vals, np.finfo(float).tiny))
            delta = _parabolic(*vals)
            pos.append(grid.axes[axis][idx[axis]] + delta * grid.spacing[axis])
        out.append(pos)
    return Trajectory(times, grid.wrap(np.array(out)), grid.extent)


def crest_velocity(track):
    """Centred-difference velocity of a crest track (one-sided at the ends)."""
    x = track.unwrapped()
    return np.gradient(x, track.times, axis=0, edge_order=2)
