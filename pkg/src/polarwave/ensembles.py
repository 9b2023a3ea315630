"""Density matrices over positive bases, Ehrenfest diagnostics and
phase-space ensembles."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import OverlapError
from .fields import Action, gradient, moments, norm
from .kernels import interp_periodic
from .trajectories import make_rng, sample_density


# ---------------------------------------------------------------------------
# positive bases and density matrices


class PositiveBasis:
    """Nonnegative, unit-norm, pairwise orthogonal fields.

    For nonnegative functions orthogonality forces disjoint supports, so the
    constructor checks the pointwise products as well as the overlaps.
    """

    def __init__(self, members, grid, tol=1e-10):
        members = [np.asarray(m, dtype=float) for m in members]
        if not members:
            raise ValueError("empty basis")
        for i, m in enumerate(members):
            if m.shape != grid.shape:
                raise ValueError(f"member {i} does not match the grid")
            if np.any(m < 0):
                raise ValueError(f"member {i} takes negative values")
            if abs(norm(m**2, grid) - 1) > tol:
                raise ValueError(f"member {i} is not normalised")
        gram = self._gram(members, grid)
        off = gram - np.diag(np.diag(gram))
        if np.max(np.abs(off)) > tol:
            raise OverlapError(f"basis members are not orthogonal (max overlap {np.max(np.abs(off)):.2e})")
        peak = max(float(np.max(m)) for m in members) ** 2
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if np.max(members[i] * members[j]) > tol * peak:
                    raise OverlapError(f"members {i} and {j} share support")
        self.members = members
        self.grid = grid

    @staticmethod
    def _gram(members, grid):
        M = np.stack([m.ravel() for m in members])
        return M @ M.T * grid.cell_volume

    def __len__(self):
        return len(self.members)

    def matrix_of(self, A):
        """Matrix elements <R_i|A|R_j> of a position-diagonal observable."""
        M = np.stack([m.ravel() for m in self.members])
        return (M * np.asarray(A, dtype=float).ravel()) @ M.T * self.grid.cell_volume

    def combine(self, weights):
        """R = sum_i sqrt(w_i) R_i."""
        w = np.asarray(weights, dtype=float)
        return sum(np.sqrt(wi) * m for wi, m in zip(w, self.members))


def bump_basis(grid, count, axis=0, fill=0.8):
    """``count`` disjoint sin^2 bumps along one axis, each of unit norm."""
    x = grid.coords[axis]
    lo, L = grid.origin[axis], grid.extent[axis]
    cell = L / count
    members = []
    for i in range(count):
        a = lo + (i + 0.5) * cell
        half = 0.5 * fill * cell
        inside = np.abs(x - a) < half
        b = np.where(inside, np.sin(np.pi * (x - a + half) / (2 * half)) ** 2, 0.0)
        members.append(b / np.sqrt(norm(b**2, grid)))
    return PositiveBasis(members, grid)


@dataclass
class DensityMatrix:
    basis: PositiveBasis
    entries: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.entries, dtype=float)
        n = len(self.basis)
        if E.shape != (n, n):
            raise ValueError("density matrix does not match the basis")
        if not np.allclose(E, E.T, atol=1e-14):
            raise ValueError("density matrix must be symmetric")
        if abs(np.trace(E) - 1) > 1e-12:
            raise ValueError(f"trace {np.trace(E)} != 1")
        if np.min(np.linalg.eigvalsh(E)) < -1e-12:
            raise ValueError("density matrix is not positive semidefinite")
        self.entries = E

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# basis: positive disjoint-support, size={len(self.basis)}, grid={self.basis.grid.describe()}\n")
            for row in self.entries:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _check_weights(weights, basis):
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(basis),):
        raise ValueError("one weight per basis member required")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1) > 1e-12:
        raise ValueError(f"weights sum to {w.sum()}, not 1")
    return w


def pure_density(weights, basis):
    """|R><R| with R = sum_i sqrt(w_i) R_i: entries sqrt(w_i w_j)."""
    w = _check_weights(weights, basis)
    r = np.sqrt(w)
    return DensityMatrix(basis, np.outer(r, r))


def mixed_density(weights, basis):
    """sum_i w_i |R_i><R_i|."""
    return DensityMatrix(basis, np.diag(_check_weights(weights, basis)))


def expect_diagonal(dm, A):
    """Tr(rho A) for a position-diagonal observable A(x)."""
    return float(np.sum(dm.entries * dm.basis.matrix_of(A)))


@dataclass
class ExchangeResult:
    density: np.ndarray  # rho(x, y), unnormalised; None on 2D grids
    exchange: float
    total: float


def exchange_density(R1, R2, grid, tol=1e-12):
    """Two-particle symmetric state R1(x)R2(y) + R2(x)R1(y) and its exchange part.

    ``exchange`` is 2 (int R1 R2)^2; it must vanish for disjoint supports.
    """
    R1 = np.asarray(R1, dtype=float)
    R2 = np.asarray(R2, dtype=float)
    overlap = float(np.sum(R1 * R2) * grid.cell_volume)
    n1 = norm(R1**2, grid)
    n2 = norm(R2**2, grid)
    exchange = 2 * overlap**2
    total = 2 * n1 * n2 + exchange
    if exchange > tol or np.max(R1 * R2) > tol * max(np.max(R1), np.max(R2)) ** 2:
        err = OverlapError(f"supports overlap: exchange integral {exchange:.3e}")
        err.exchange = exchange
        raise err
    dens = None
    if grid.dim == 1:
        dens = (np.outer(R1, R2) + np.outer(R2, R1)) ** 2
    return ExchangeResult(dens, exchange, total)


# ---------------------------------------------------------------------------
# Ehrenfest


@dataclass
class EhrenfestSeries:
    times: np.ndarray
    mean_x: np.ndarray
    r1: np.ndarray
    r2: np.ndarray


def mean_velocity(frame, rho, grid):
    """<grad S / m> under rho, from an Action or a wavefunction."""
    if isinstance(frame, Action):
        w = rho / np.sum(rho)
        g = frame.gradient()
        return np.array([np.sum(w * g[i]) for i in range(grid.dim)]) / grid.mass
    psi = np.asarray(frame)
    dpsi = gradient(psi, grid)
    p = grid.hbar * np.array([np.sum(np.imag(np.conj(psi) * dpsi[i])) for i in range(grid.dim)])
    return p / np.sum(np.abs(psi) ** 2) / grid.mass


def ehrenfest_residuals(times, densities, frames, potential, grid):
    """r1 = |d<x>/dt - <grad S/m>|, r2 = |m d2<x>/dt2 - <-grad V>| per interior frame.

    Time derivatives are centred differences over the uniformly spaced frames.
    ``frames`` holds Actions (classical) or wavefunctions (linear).
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise ValueError("need at least three frames")
    dt = np.diff(times)
    if np.max(np.abs(dt - dt[0])) > 1e-9 * abs(dt[0]):
        raise ValueError("frames must be uniformly spaced")
    h = dt[0]
    mean = np.array([moments(r, grid)[0] for r in densities])
    vel = np.array([mean_velocity(f, r, grid) for f, r in zip(frames, densities)])
    force = np.array([potential.at(t).mean_force(r) for t, r in zip(times, densities)])
    d1 = (mean[2:] - mean[:-2]) / (2 * h)
    d2 = (mean[2:] - 2 * mean[1:-1] + mean[:-2]) / h**2
    r1 = np.abs(d1 - vel[1:-1])
    r2 = np.abs(grid.mass * d2 - force[1:-1])
    return EhrenfestSeries(times[1:-1], mean[1:-1], r1, r2)


# ---------------------------------------------------------------------------
# phase space


@dataclass
class PhaseSpacePoint:
    position: np.ndarray
    momentum: np.ndarray
    weight: float


@dataclass
class PhaseSpaceEnsemble:
    positions: np.ndarray
    momenta: np.ndarray
    weights: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.momenta = np.asarray(self.momenta, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights < 0):
            raise ValueError("weights must be nonnegative")
        if self.normalized and abs(self.weights.sum() - 1) > 1e-10:
            raise ValueError("normalized ensemble weights must sum to 1")

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return PhaseSpacePoint(self.positions[i], self.momenta[i], float(self.weights[i]))

    def to_csv(self, path):
        dim = self.positions.shape[1]
        names = ["weight"] + [f"x{i}" for i in range(dim)] + [f"p{i}" for i in range(dim)]
        data = np.column_stack([self.weights, self.positions, self.momenta])
        np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")


def phase_space_from_pure(pair, n_samples, seed, order=4):
    """Positions drawn from R^2, each carrying momentum grad S at its position."""
    grid = pair.grid
    x = sample_density(pair.R**2, grid, n_samples, make_rng(seed, 0))
    p = pair.S.gradient_at(x, order)
    return PhaseSpaceEnsemble(x, p, np.full(n_samples, 1.0 / n_samples))


def phase_space_from_R(R, grid, p_box, n_samples, seed):
    """Positions from R^2, momenta independent and uniform in ``p_box``.

    ``p_box`` is ``(low, high)`` per axis; a zero-width axis pins the momentum.
    """
    lo, hi = (np.broadcast_to(np.asarray(b, dtype=float), (grid.dim,)) for b in p_box)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)) or np.any(hi < lo):
        raise ValueError("momentum box must be finite and nonempty")
    x = sample_density(np.asarray(R, dtype=float) ** 2, grid, n_samples, make_rng(seed, 0))
    u = make_rng(seed, 1).random((n_samples, grid.dim))
    return PhaseSpaceEnsemble(x, lo + (hi - lo) * u, np.full(n_samples, 1.0 / n_samples))


def phase_space_average(ensemble, observable: Callable):
    """sum_i w_i O(x_i, p_i); ``observable`` is vectorised over rows."""
    if not ensemble.normalized:
        raise ValueError("ensemble is not normalized")
    return float(np.sum(ensemble.weights * observable(ensemble.positions, ensemble.momenta)))


def potential_at(potential, points, order=4):
    pts = np.asarray(points, dtype=float).reshape(-1, potential.grid.dim)
    g = potential.grid
    quad = 0.5 * np.einsum("ni,ij,nj->n", pts, potential.curvature, pts)
    return quad + pts @ potential.slope + interp_periodic(potential.periodic, pts, g.origin, g.spacing, order)


def evolve_phase_space(ensemble, potential, t0, t1, dt):
    """Carry each point along Hamilton's equations with RK4."""
    m = potential.grid.mass
    n_steps = max(1, int(np.ceil(abs(t1 - t0) / dt - 1e-9)))
    h = (t1 - t0) / n_steps
    x, p = ensemble.positions.copy(), ensemble.momenta.copy()
    t = t0

    def rhs(x, p, t):
        return p / m, potential.at(t).force_at(x)

    for step in range(n_steps):
        k1 = rhs(x, p, t)
        k2 = rhs(x + 0.5 * h * k1[0], p + 0.5 * h * k1[1], t + 0.5 * h)
        k3 = rhs(x + 0.5 * h * k2[0], p + 0.5 * h * k2[1], t + 0.5 * h)
        k4 = rhs(x + h * k3[0], p + h * k3[1], t + h)
        x = x + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p = p + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        t = t0 + (step + 1) * h
    return PhaseSpaceEnsemble(potential.grid.wrap(x), p, ensemble.weights.copy(), ensemble.normalized)
