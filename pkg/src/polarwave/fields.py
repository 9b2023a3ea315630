"""Periodic grids, sampled fields, polar form and spectral operators.

Scalar and complex fields are plain numpy arrays of shape ``grid.shape``;
vector fields carry a leading axis of length ``grid.dim``.

Two quantities in this package are not periodic on the box even though the
grid is: harmonic or linear potentials, and action fields with a net drift
or a quadratic profile.  Both are therefore stored as a polynomial part of
degree <= 2 plus a periodic remainder sampled on the grid
(:class:`Potential`, :class:`Action`).  Spectral derivatives are only ever
applied to the periodic remainder.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .kernels import interp_periodic

DEFAULT_FLOOR = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice in 1 or 2 dimensions, centred on the origin."""

    dim: int
    n: int | tuple = 1024
    extent: float | tuple = 40.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        n = _per_axis(self.n, self.dim, int)
        extent = _per_axis(self.extent, self.dim, float)
        for k in n:
            if k < 4 or k & (k - 1):
                raise ValueError(f"points per axis must be a power of two >= 4, got {k}")
        for e in extent:
            if not np.isfinite(e) or e <= 0:
                raise ValueError(f"extent must be positive, got {e}")
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "extent", extent)

    @property
    def shape(self):
        return self.n

    @property
    def spacing(self):
        return tuple(e / k for e, k in zip(self.extent, self.n))

    @property
    def origin(self):
        return tuple(-e / 2 for e in self.extent)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def axes(self):
        return [o + h * np.arange(k) for o, h, k in zip(self.origin, self.spacing, self.n)]

    @property
    def coords(self):
        """Coordinate arrays, one per axis, each of ``shape``."""
        return np.meshgrid(*self.axes, indexing="ij")

    @property
    def positions(self):
        return np.stack(self.coords)

    @property
    def wavenumbers(self):
        return [2 * np.pi * np.fft.fftfreq(k, d=h) for k, h in zip(self.n, self.spacing)]

    def kmesh(self):
        return np.meshgrid(*self.wavenumbers, indexing="ij")

    def wrap(self, points):
        """Map points (shape ``(..., dim)`` or ``(npts,)`` in 1D) into the box."""
        pts = np.asarray(points, dtype=float)
        lo = np.array(self.origin)
        ext = np.array(self.extent)
        if self.dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            return (pts - lo[0]) % ext[0] + lo[0]
        return (pts - lo) % ext + lo

    def minimal_image(self, delta):
        ext = np.array(self.extent)
        if self.dim == 1:
            ext = ext[0]
        return delta - ext * np.round(delta / ext)

    def describe(self):
        return f"{self.dim},{','.join(map(str, self.n))},{','.join(map(repr, self.extent))},{self.hbar!r},{self.mass!r}"


def _per_axis(value, dim, cast):
    if np.ndim(value) == 0:
        return tuple(cast(value) for _ in range(dim))
    value = tuple(cast(v) for v in value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(value)}")
    return value


# ---------------------------------------------------------------------------
# spectral operators


def gradient(f, grid):
    """Spectral gradient of a periodic field; returns shape ``(dim, *shape)``."""
    f = np.asarray(f)
    fk = np.fft.fftn(f)
    out = []
    for axis, k in enumerate(grid.wavenumbers):
        k = k.copy()
        if grid.n[axis] % 2 == 0:
            k[grid.n[axis] // 2] = 0.0
        shape = [1] * grid.dim
        shape[axis] = -1
        d = np.fft.ifftn(1j * k.reshape(shape) * fk)
        out.append(d if np.iscomplexobj(f) else d.real)
    return np.stack(out)


def laplacian(f, grid):
    f = np.asarray(f)
    k2 = sum(k**2 for k in grid.kmesh())
    d = np.fft.ifftn(-k2 * np.fft.fftn(f))
    return d if np.iscomplexobj(f) else d.real


def divergence(v, grid):
    return sum(gradient(v[i], grid)[i] for i in range(grid.dim))


def norm(rho, grid):
    """Riemann sum of a density over the box."""
    return float(np.sum(rho) * grid.cell_volume)


def periodic_antiderivative(v, grid):
    """Zero-mean periodic ``s`` with ``ds/dx = v - mean(v)`` (1D)."""
    if grid.dim != 1:
        raise ValueError("antiderivative is defined for 1D grids")
    k = grid.wavenumbers[0]
    vk = np.fft.fft(v - np.mean(v))
    safe = np.where(k == 0, 1.0, k)
    sk = np.where(k == 0, 0.0, vk / (1j * safe))
    if grid.n[0] % 2 == 0:
        sk[grid.n[0] // 2] = 0.0
    return np.fft.ifft(sk).real


def density_floor(rho, rho_floor=None):
    """Absolute floor below which phase and velocity are undefined."""
    if rho_floor is None:
        return DEFAULT_FLOOR * float(np.max(rho))
    if not rho_floor > 0:
        raise ValueError("rho_floor must be positive")
    return float(rho_floor)


# ---------------------------------------------------------------------------
# potential and action: polynomial part + periodic remainder


def _as_vec(value, dim):
    if value is None:
        return np.zeros(dim)
    v = np.array(value, dtype=float).reshape(-1)
    if v.size == 1 and dim > 1:
        v = np.repeat(v, dim)
    if v.size != dim:
        raise ValueError(f"expected {dim} components")
    return v


def _as_mat(value, dim):
    if value is None:
        return np.zeros((dim, dim))
    m = np.array(value, dtype=float)
    if m.ndim == 0:
        return m * np.eye(dim)
    m = m.reshape(dim, dim)
    if not np.allclose(m, m.T):
        raise ValueError("quadratic coefficient must be symmetric")
    return m


def _poly_values(grid, quad, lin):
    x = grid.positions
    out = np.einsum("i...,i->...", x, lin)
    out = out + 0.5 * np.einsum("i...,ij,j...->...", x, quad, x)
    return out


def _poly_gradient(grid, quad, lin):
    x = grid.positions
    return np.einsum("ij,j...->i...", quad, x) + lin.reshape((-1,) + (1,) * grid.dim)


def _points(points, dim):
    pts = np.asarray(points, dtype=float)
    return pts.reshape(-1, 1) if dim == 1 else pts.reshape(-1, dim)


@dataclass
class Potential:
    """V(x) = 1/2 x.K.x + f.x + v(x) with ``v`` periodic on the grid.

    A time-dependent potential carries ``evaluator(t) -> Potential``; its own
    arrays then hold the value at t = 0.
    """

    grid: Grid
    periodic: np.ndarray
    slope: np.ndarray = None
    curvature: np.ndarray = None
    evaluator: Optional[Callable[[float], "Potential"]] = field(default=None, repr=False)

    def __post_init__(self):
        self.periodic = np.broadcast_to(np.asarray(self.periodic, dtype=float), self.grid.shape).copy()
        self.slope = _as_vec(self.slope, self.grid.dim)
        self.curvature = _as_mat(self.curvature, self.grid.dim)
        if not np.all(np.isfinite(self.periodic)):
            raise ValueError("potential values must be finite")

    @property
    def time_dependent(self):
        return self.evaluator is not None

    def at(self, t):
        if self.evaluator is None:
            return self
        pot = self.evaluator(t)
        if not np.all(np.isfinite(pot.values)):
            raise ValueError(f"potential not finite at t={t}")
        return pot

    @property
    def values(self):
        return self.periodic + _poly_values(self.grid, self.curvature, self.slope)

    def force_at(self, points, order=4):
        """-grad V at arbitrary points, shape ``(npts, dim)``."""
        pts = _points(points, self.grid.dim)
        f = -(pts @ self.curvature.T + self.slope)
        if np.any(self.periodic != self.periodic.flat[0]):
            g = gradient(self.periodic, self.grid)
            for i in range(self.grid.dim):
                f[:, i] -= interp_periodic(g[i], pts, self.grid.origin, self.grid.spacing, order)
        return f

    def mean_force(self, rho):
        """<-grad V> under the (unnormalised) density ``rho``, per axis."""
        w = rho / np.sum(rho)
        gv = gradient(self.periodic, self.grid) + _poly_gradient(self.grid, self.curvature, self.slope)
        return -np.array([np.sum(w * gv[i]) for i in range(self.grid.dim)])

    # constructors

    @classmethod
    def zero(cls, grid):
        return cls(grid, 0.0)

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, float(value))

    @classmethod
    def harmonic(cls, grid, omega, center=None):
        """1/2 m omega^2 |x - center|^2."""
        c = _as_vec(center, grid.dim)
        k = grid.mass * omega**2
        return cls(grid, 0.5 * k * float(c @ c), slope=-k * c, curvature=k)

    @classmethod
    def linear(cls, grid, force):
        """Uniform force F: V = -F.x."""
        return cls(grid, 0.0, slope=-_as_vec(force, grid.dim))

    @classmethod
    def sampled(cls, grid, values):
        return cls(grid, np.asarray(values, dtype=float))


@dataclass
class Action:
    """S(x) = 1/2 x.A.x + b.x + s(x) with ``s`` periodic on the grid."""

    grid: Grid
    periodic: np.ndarray
    linear: np.ndarray = None
    quadratic: np.ndarray = None

    def __post_init__(self):
        self.periodic = np.broadcast_to(np.asarray(self.periodic, dtype=float), self.grid.shape).copy()
        self.linear = _as_vec(self.linear, self.grid.dim)
        self.quadratic = _as_mat(self.quadratic, self.grid.dim)

    @classmethod
    def zero(cls, grid):
        return cls(grid, 0.0)

    @classmethod
    def plane(cls, grid, momentum):
        """S = p.x"""
        return cls(grid, 0.0, linear=momentum)

    @classmethod
    def quadratic_profile(cls, grid, curvature, center=None, momentum=None):
        """S = 1/2 (x-c).A.(x-c) + p.(x-c)"""
        A = _as_mat(curvature, grid.dim)
        c = _as_vec(center, grid.dim)
        p = _as_vec(momentum, grid.dim)
        const = 0.5 * c @ A @ c - p @ c
        return cls(grid, const, linear=p - A @ c, quadratic=A)

    def copy(self):
        return Action(self.grid, self.periodic.copy(), self.linear.copy(), self.quadratic.copy())

    def scaled(self, factor):
        return Action(self.grid, factor * self.periodic, factor * self.linear, factor * self.quadratic)

    @property
    def values(self):
        return self.periodic + _poly_values(self.grid, self.quadratic, self.linear)

    def gradient(self):
        return gradient(self.periodic, self.grid) + _poly_gradient(self.grid, self.quadratic, self.linear)

    def laplacian(self):
        return laplacian(self.periodic, self.grid) + np.trace(self.quadratic)

    def gradient_at(self, points, order=4, periodic_gradient=None):
        """grad S at arbitrary points (unwrapped coordinates), ``(npts, dim)``."""
        pts = _points(points, self.grid.dim)
        out = pts @ self.quadratic.T + self.linear
        g = gradient(self.periodic, self.grid) if periodic_gradient is None else periodic_gradient
        for i in range(self.grid.dim):
            out[:, i] += interp_periodic(g[i], pts, self.grid.origin, self.grid.spacing, order)
        return out


@dataclass
class PolarPair:
    """Amplitude R >= 0 and action S; ``mask`` marks points where S is undefined."""

    R: np.ndarray
    S: Action
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float)
        if self.R.shape != self.S.grid.shape:
            raise ValueError("R and S live on different grids")
        if np.any(self.R < 0):
            raise ValueError("amplitude R must be nonnegative")

    @property
    def grid(self):
        return self.S.grid

    @property
    def density(self):
        return self.R**2

    def copy(self):
        return PolarPair(self.R.copy(), self.S.copy(), None if self.mask is None else self.mask.copy())


# ---------------------------------------------------------------------------
# polar form


def compose(pair: PolarPair):
    """psi = R exp(iS/hbar)."""
    if np.any(pair.R < 0):
        raise ValueError("amplitude R must be nonnegative")
    return pair.R * np.exp(1j * pair.S.values / pair.grid.hbar)


def decompose(psi, grid, rho_floor=None):
    """Polar split of psi.  S is wrapped into (-pi hbar, pi hbar] and set to 0
    under the mask ``|psi|^2 < floor``."""
    psi = np.asarray(psi, dtype=complex)
    rho = np.abs(psi) ** 2
    if not np.any(rho > 0):
        raise ValueError("psi vanishes identically")
    floor = density_floor(rho, rho_floor)
    mask = rho < floor
    if np.all(mask):
        raise ValueError("psi lies below rho_floor everywhere")
    S = grid.hbar * np.angle(psi)
    S = np.where(S <= -np.pi * grid.hbar, S + 2 * np.pi * grid.hbar, S)
    S[mask] = 0.0
    return PolarPair(np.abs(psi), Action(grid, S), mask)


def velocity_field(psi, grid, rho_floor=None):
    """grad S / m from (hbar/m) Im(psi* grad psi)/|psi|^2, zero under the mask.

    Returns ``(v, mask)`` with ``v`` of shape ``(dim, *shape)``.
    """
    psi = np.asarray(psi, dtype=complex)
    rho = np.abs(psi) ** 2
    floor = density_floor(rho, rho_floor)
    mask = rho < floor
    dpsi = gradient(psi, grid)
    safe = np.where(mask, 1.0, rho)
    v = (grid.hbar / grid.mass) * np.imag(np.conj(psi) * dpsi) / safe
    v[:, mask] = 0.0
    return v, mask


def quantum_potential(R, grid, rho_floor=None):
    """Q = -(hbar^2/2m) lap R / R, zero where R^2 is below the floor."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise ValueError("amplitude R must be nonnegative")
    rho = R**2
    floor = density_floor(rho, rho_floor)
    mask = rho < floor
    lap = laplacian(R, grid)
    Q = -(grid.hbar**2 / (2 * grid.mass)) * lap / np.where(mask, 1.0, R)
    Q[mask] = 0.0
    return Q


# ---------------------------------------------------------------------------
# common initial data


def gaussian_amplitude(grid, center, width):
    """Normalised R with density standard deviation ``width`` per axis."""
    c = _as_vec(center, grid.dim)
    w = _as_vec(width, grid.dim)
    R = np.ones(grid.shape)
    for x, ci, wi in zip(grid.coords, c, w):
        R = R * (2 * np.pi * wi**2) ** -0.25 * np.exp(-((x - ci) ** 2) / (4 * wi**2))
    return R


def gaussian_packet(grid, center, width, momentum=0.0):
    """Complex Gaussian packet; returns ``(psi, PolarPair)``."""
    pair = PolarPair(gaussian_amplitude(grid, center, width),
                     Action.quadratic_profile(grid, 0.0, center, momentum))
    return compose(pair), pair


def moments(rho, grid):
    """Mean and standard deviation per axis under ``rho / norm(rho)``."""
    w = rho / np.sum(rho)
    mean = np.array([np.sum(w * x) for x in grid.coords])
    var = np.array([np.sum(w * (x - m) ** 2) for x, m in zip(grid.coords, mean)])
    return mean, np.sqrt(np.maximum(var, 0.0))
