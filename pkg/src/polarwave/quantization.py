"""Winding of S around closed loops and the circular Coulomb spectrum."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import MaskedRegionError


class LoopPath:
    """A closed path, either lattice indices on a grid or angles on a circle.

    ``samples`` always ends with a return to the starting point, so a field
    sampled along the loop has ``len(self)`` entries.
    """

    def __init__(self, indices=None, angles=None, grid=None):
        if (indices is None) == (angles is None):
            raise ValueError("give exactly one of indices or angles")
        self.grid = grid
        if angles is not None:
            self.angles = np.asarray(angles, dtype=float)
            self.indices = None
            if len(self.angles) < 3:
                raise ValueError("loop needs at least three points")
            return
        idx = np.asarray(indices, dtype=int)
        if idx.ndim != 2 or len(idx) < 3:
            raise ValueError("loop needs at least three lattice points")
        n = np.array(grid.n)
        step = np.diff(np.vstack([idx, idx[:1]]), axis=0)
        step = (step + n // 2) % n - n // 2
        if np.any(np.abs(step) > 1):
            raise ValueError("consecutive loop points must be lattice neighbours")
        self.indices = idx % n
        self.angles = None

    def __len__(self):
        if self.angles is not None:
            return len(self.angles)
        return len(self.indices) + 1

    @classmethod
    def angular(cls, samples=256):
        """phi_j = 2 pi j / samples for j = 0..samples (closed)."""
        return cls(angles=np.linspace(0, 2 * np.pi, samples + 1))

    @classmethod
    def circle(cls, grid, center, radius):
        """Lattice loop hugging a circle; consecutive points are neighbours."""
        if grid.dim != 2:
            raise ValueError("circle loops need a 2D grid")
        c = np.asarray(center, dtype=float)
        h = np.array(grid.spacing)
        m = int(np.ceil(8 * np.pi * radius / h.min())) + 8
        phi = np.linspace(0, 2 * np.pi, m, endpoint=False)
        pts = c + radius * np.stack([np.cos(phi), np.sin(phi)], axis=1)
        idx = np.rint((pts - grid.origin) / h).astype(int)
        keep = np.any(idx != np.roll(idx, 1, axis=0), axis=1)
        return cls(indices=idx[keep], grid=grid)

    def rotated(self, k):
        """Same loop, starting ``k`` points later."""
        if self.indices is not None:
            return LoopPath(indices=np.roll(self.indices, -k, axis=0), grid=self.grid)
        a = self.angles[:-1]
        start = a[k % len(a)]
        return LoopPath(angles=start + (self.angles - self.angles[0]))

    def sample(self, field):
        """Values of a grid field along the loop, first point repeated at the end."""
        if self.indices is None:
            raise ValueError("angular loops are sampled by evaluating S at .angles")
        vals = field[tuple(self.indices.T)]
        return np.append(vals, vals[0])

    def touches(self, mask):
        return self.indices is not None and bool(np.any(mask[tuple(self.indices.T)]))


class Winding(NamedTuple):
    n: int
    residual: float

    @property
    def single_valued(self):
        return self.residual < 1e-8


def winding_number(S, loop=None, hbar=1.0, mask=None):
    """Sum of wrapped phase increments of exp(iS/hbar) around a loop, over 2 pi hbar.

    ``S`` is a grid field (with a lattice ``loop``), a callable evaluated on
    an angular loop, or samples along the closed loop.  Returns the nearest
    integer and the distance to it.
    """
    if callable(S):
        if loop is None or loop.angles is None:
            raise ValueError("callable S needs an angular loop")
        vals = np.asarray(S(loop.angles), dtype=float)
    elif loop is not None and loop.indices is not None:
        if mask is not None and loop.touches(mask):
            raise MaskedRegionError("loop crosses a region where S is undefined")
        vals = loop.sample(np.asarray(S, dtype=float))
    else:
        vals = np.asarray(S, dtype=float)
    if vals.ndim != 1 or len(vals) < 3:
        raise ValueError("need samples along a closed loop")
    if not np.all(np.isfinite(vals)):
        raise MaskedRegionError("S is undefined somewhere on the loop")
    phase = vals / hbar
    raw = np.diff(phase)
    inc = np.angle(np.exp(1j * raw))
    if np.any(np.abs(inc) >= np.pi * (1 - 1e-9)):
        raise ValueError("loop under-resolves S: a segment increment reaches pi hbar")
    w = float(np.sum(inc) / (2 * np.pi))
    n = int(np.round(w))
    return Winding(n, abs(w - n))


def bohr_check(L, hbar=1.0):
    """Nearest integer n to L/hbar and the deviation |L/hbar - n|."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    r = L / hbar
    n = int(np.round(r))
    return n, abs(r - n)


@dataclass
class CoulombSpectrum:
    n: np.ndarray
    radius: np.ndarray
    energy: np.ndarray
    winding_ok: np.ndarray
    hj_residual: np.ndarray

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("n,r_n,E_n,winding_ok\n")
            for n, r, e, ok in zip(self.n, self.radius, self.energy, self.winding_ok):
                fh.write(f"{n},{r!r},{e!r},{int(ok)}\n")


def coulomb_circular_spectrum(k, mass=1.0, hbar=1.0, n_max=5, samples=256):
    """Circular orbits in V = -k/r with L = n hbar.

    r_n = n^2 hbar^2 / (m k), E_n = -m k^2 / (2 n^2 hbar^2).  Each level is
    cross-checked on an angular grid: S = n hbar phi must wind n times, and
    the stationary HJ equation evaluated with a spectral d/dphi must return
    E_n.
    """
    if not (k > 0 and mass > 0 and hbar > 0):
        raise ValueError("k, mass and hbar must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ns = np.arange(1, n_max + 1)
    r = ns**2 * hbar**2 / (mass * k)
    E = -mass * k**2 / (2 * ns**2 * hbar**2)
    loop = LoopPath.angular(samples)
    phi = loop.angles[:-1]
    kphi = np.fft.fftfreq(samples, 1.0 / samples)
    ok = np.zeros(n_max, dtype=bool)
    res = np.zeros(n_max)
    for i, n in enumerate(ns):
        w = winding_number(lambda a: n * hbar * a, loop, hbar)
        ok[i] = w.n == n and w.single_valued
        psi = np.exp(1j * n * phi)
        dpsi = np.fft.ifft(1j * kphi * np.fft.fft(psi))
        dS = hbar * np.imag(np.conj(psi) * dpsi) / np.abs(psi) ** 2
        e = (dS / r[i]) ** 2 / (2 * mass) - k / r[i]
        res[i] = float(np.max(np.abs(e - E[i])) / abs(E[i]))
    return CoulombSpectrum(ns, r, E, ok, res)
