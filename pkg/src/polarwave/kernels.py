"""Hot interpolation kernels on periodic grids.

Every kernel has a numba implementation and a pure-numpy twin with the same
signature.  The public names dispatch to numba unless it is unavailable or
disabled through ``POLARWAVE_DISABLE_NUMBA``.

Stencils are ``order``-point Lagrange stencils (order even).  For a point at
fractional grid coordinate ``u`` the stencil covers nodes
``floor(u) - order/2 + 1 ... floor(u) + order/2`` with periodic wrap.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit, prange

__all__ = [
    "interp_periodic",
    "stencil_touches",
    "interp_periodic_numpy",
    "stencil_touches_numpy",
    "interp_periodic_numba",
    "stencil_touches_numba",
    "lagrange_weights",
    "USING_NUMBA",
]


def lagrange_weights(alpha, order):
    """Weights of the ``order``-point stencil at offsets ``alpha`` in [0, 1).

    Returns an array of shape ``alpha.shape + (order,)``.
    """
    alpha = np.asarray(alpha, dtype=float)
    nodes = np.arange(order) - (order // 2 - 1)
    w = np.ones(alpha.shape + (order,))
    for j in range(order):
        for m in range(order):
            if m != j:
                w[..., j] *= (alpha - nodes[m]) / (nodes[j] - nodes[m])
    return w


# --------------------------------------------------------------------------
# numpy path


def _split(points, origin, spacing):
    u = (points - origin) / spacing
    base = np.floor(u)
    return base.astype(np.int64), u - base


def interp_periodic_numpy(values, points, origin, spacing, order=4):
    """Interpolate a 1D or 2D periodic array at ``points``.

    ``points`` has shape (npts,) for 1D or (npts, 2) for 2D; ``origin`` and
    ``spacing`` are per-axis sequences.
    """
    values = np.asarray(values, dtype=float)
    pts = np.asarray(points, dtype=float)
    half = order // 2 - 1
    if values.ndim == 1:
        pts = pts.reshape(-1)
        n = values.shape[0]
        base, alpha = _split(pts, origin[0], spacing[0])
        w = lagrange_weights(alpha, order)
        out = np.zeros(pts.shape[0])
        for j in range(order):
            out += w[:, j] * values[(base - half + j) % n]
        return out
    nx, ny = values.shape
    pts = pts.reshape(-1, 2)
    bx, ax = _split(pts[:, 0], origin[0], spacing[0])
    by, ay = _split(pts[:, 1], origin[1], spacing[1])
    wx = lagrange_weights(ax, order)
    wy = lagrange_weights(ay, order)
    out = np.zeros(pts.shape[0])
    for i in range(order):
        ix = (bx - half + i) % nx
        for j in range(order):
            out += wx[:, i] * wy[:, j] * values[ix, (by - half + j) % ny]
    return out


def stencil_touches_numpy(mask, points, origin, spacing, order=4):
    """True for points whose interpolation stencil contains a masked node."""
    mask = np.asarray(mask, dtype=bool)
    pts = np.asarray(points, dtype=float)
    half = order // 2 - 1
    if mask.ndim == 1:
        pts = pts.reshape(-1)
        n = mask.shape[0]
        base, _ = _split(pts, origin[0], spacing[0])
        hit = np.zeros(pts.shape[0], dtype=bool)
        for j in range(order):
            hit |= mask[(base - half + j) % n]
        return hit
    nx, ny = mask.shape
    pts = pts.reshape(-1, 2)
    bx, _ = _split(pts[:, 0], origin[0], spacing[0])
    by, _ = _split(pts[:, 1], origin[1], spacing[1])
    hit = np.zeros(pts.shape[0], dtype=bool)
    for i in range(order):
        ix = (bx - half + i) % nx
        for j in range(order):
            hit |= mask[ix, (by - half + j) % ny]
    return hit


# --------------------------------------------------------------------------
# numba path


@njit
def _weights_scalar(alpha, order, out):
    half = order // 2 - 1
    for j in range(order):
        wj = 1.0
        nj = j - half
        for m in range(order):
            if m != j:
                nm = m - half
                wj *= (alpha - nm) / (nj - nm)
        out[j] = wj


@njit(parallel=True)
def _interp1d_nb(values, pts, x0, h, order):
    n = values.shape[0]
    npts = pts.shape[0]
    half = order // 2 - 1
    out = np.empty(npts)
    for p in prange(npts):
        w = np.empty(order)
        u = (pts[p] - x0) / h
        b = np.floor(u)
        _weights_scalar(u - b, order, w)
        ib = np.int64(b) - half
        acc = 0.0
        for j in range(order):
            acc += w[j] * values[(ib + j) % n]
        out[p] = acc
    return out


@njit(parallel=True)
def _interp2d_nb(values, pts, x0, y0, hx, hy, order):
    nx, ny = values.shape
    npts = pts.shape[0]
    half = order // 2 - 1
    out = np.empty(npts)
    for p in prange(npts):
        wx = np.empty(order)
        wy = np.empty(order)
        ux = (pts[p, 0] - x0) / hx
        uy = (pts[p, 1] - y0) / hy
        bx = np.floor(ux)
        by = np.floor(uy)
        _weights_scalar(ux - bx, order, wx)
        _weights_scalar(uy - by, order, wy)
        ibx = np.int64(bx) - half
        iby = np.int64(by) - half
        acc = 0.0
        for i in range(order):
            ix = (ibx + i) % nx
            row = 0.0
            for j in range(order):
                row += wy[j] * values[ix, (iby + j) % ny]
            acc += wx[i] * row
        out[p] = acc
    return out


@njit(parallel=True)
def _touch1d_nb(mask, pts, x0, h, order):
    n = mask.shape[0]
    npts = pts.shape[0]
    half = order // 2 - 1
    out = np.zeros(npts, dtype=np.bool_)
    for p in prange(npts):
        ib = np.int64(np.floor((pts[p] - x0) / h)) - half
        for j in range(order):
            if mask[(ib + j) % n]:
                out[p] = True
                break
    return out


@njit(parallel=True)
def _touch2d_nb(mask, pts, x0, y0, hx, hy, order):
    nx, ny = mask.shape
    npts = pts.shape[0]
    half = order // 2 - 1
    out = np.zeros(npts, dtype=np.bool_)
    for p in prange(npts):
        ibx = np.int64(np.floor((pts[p, 0] - x0) / hx)) - half
        iby = np.int64(np.floor((pts[p, 1] - y0) / hy)) - half
        hit = False
        for i in range(order):
            ix = (ibx + i) % nx
            for j in range(order):
                if mask[ix, (iby + j) % ny]:
                    hit = True
                    break
            if hit:
                break
        out[p] = hit
    return out


def interp_periodic_numba(values, points, origin, spacing, order=4):
    values = np.ascontiguousarray(values, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    if values.ndim == 1:
        return _interp1d_nb(values, np.ascontiguousarray(pts.reshape(-1)),
                            float(origin[0]), float(spacing[0]), int(order))
    return _interp2d_nb(values, np.ascontiguousarray(pts.reshape(-1, 2)),
                        float(origin[0]), float(origin[1]),
                        float(spacing[0]), float(spacing[1]), int(order))


def stencil_touches_numba(mask, points, origin, spacing, order=4):
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    pts = np.asarray(points, dtype=np.float64)
    if mask.ndim == 1:
        return _touch1d_nb(mask, np.ascontiguousarray(pts.reshape(-1)),
                           float(origin[0]), float(spacing[0]), int(order))
    return _touch2d_nb(mask, np.ascontiguousarray(pts.reshape(-1, 2)),
                       float(origin[0]), float(origin[1]),
                       float(spacing[0]), float(spacing[1]), int(order))


USING_NUMBA = HAVE_NUMBA

if USING_NUMBA:
    interp_periodic = interp_periodic_numba
    stencil_touches = stencil_touches_numba
else:
    interp_periodic = interp_periodic_numpy
    stencil_touches = stencil_touches_numpy
