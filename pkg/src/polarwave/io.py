"""CSV and raw-binary export of fields, trajectories and ensemble summaries."""

import json
import os

import numpy as np

from .fields import Grid


def _grid_header(grid):
    return f"# grid: {grid.describe()}\n"


def parse_grid_header(line):
    """Inverse of ``Grid.describe`` as written in a ``# grid:`` line."""
    body = line.split(":", 1)[1].strip()
    parts = [p.strip() for p in body.split(",")]
    dim = int(parts[0])
    n = tuple(int(v) for v in parts[1:1 + dim])
    extent = tuple(float(v) for v in parts[1 + dim:1 + 2 * dim])
    hbar, mass = float(parts[1 + 2 * dim]), float(parts[2 + 2 * dim])
    return Grid(dim, n, extent, hbar, mass)


def write_field_csv(path, field, grid):
    """Rows ``i[, j], value`` in row-major order; complex fields get re, im columns."""
    field = np.asarray(field)
    if field.shape != grid.shape:
        raise ValueError("field does not match the grid")
    idx = np.indices(grid.shape).reshape(grid.dim, -1).T
    flat = field.ravel()
    is_complex = np.iscomplexobj(field)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_grid_header(grid))
        cols = [f"i{a}" for a in range(grid.dim)]
        cols += ["re", "im"] if is_complex else ["value"]
        fh.write(",".join(cols) + "\n")
        for ij, v in zip(idx, flat):
            head = ",".join(str(int(i)) for i in ij)
            if is_complex:
                fh.write(f"{head},{float(v.real)!r},{float(v.imag)!r}\n")
            else:
                fh.write(f"{head},{float(v)!r}\n")


def read_field_csv(path):
    """Returns ``(field, grid)``."""
    with open(path, encoding="utf-8") as fh:
        grid = parse_grid_header(fh.readline())
        cols = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    idx = tuple(data[:, a].astype(int) for a in range(grid.dim))
    if cols[-1] == "im":
        out = np.zeros(grid.shape, dtype=complex)
        out[idx] = data[:, -2] + 1j * data[:, -1]
    else:
        out = np.zeros(grid.shape)
        out[idx] = data[:, -1]
    return out, grid


def write_field_raw(path, field, grid):
    """Little-endian float64 dump plus ``path + '.json'`` descriptor."""
    field = np.asarray(field)
    is_complex = np.iscomplexobj(field)
    arr = np.stack([field.real, field.imag], axis=-1) if is_complex else field
    np.ascontiguousarray(arr, dtype="<f8").tofile(path)
    desc = {
        "dtype": "<f8",
        "order": "C",
        "shape": list(arr.shape),
        "complex": bool(is_complex),
        "grid": {"dim": grid.dim, "n": list(grid.n), "extent": list(grid.extent),
                 "hbar": grid.hbar, "mass": grid.mass},
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(desc, fh, indent=1)


def read_field_raw(path):
    with open(path + ".json", encoding="utf-8") as fh:
        desc = json.load(fh)
    arr = np.fromfile(path, dtype=desc["dtype"]).reshape(desc["shape"])
    if desc["complex"]:
        arr = arr[..., 0] + 1j * arr[..., 1]
    g = desc["grid"]
    return arr, Grid(g["dim"], tuple(g["n"]), tuple(g["extent"]), g["hbar"], g["mass"])


def write_trajectories_csv(path, ensemble):
    """``traj_id, t, x..., aborted_flag`` for every recorded time."""
    n, nt, dim = ensemble.positions.shape
    ids = np.repeat(np.arange(n), nt)
    t = np.tile(ensemble.times, n)
    x = ensemble.positions.reshape(n * nt, dim)
    ab = np.repeat(ensemble.aborted.astype(int), nt)
    header = ",".join(["traj_id", "t"] + [f"x{i}" for i in range(dim)] + ["aborted_flag"])
    fmt = ["%d", "%.17g"] + ["%.17g"] * dim + ["%d"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# seed: {ensemble.seed}\n")
        np.savetxt(fh, np.column_stack([ids, t, x, ab]), delimiter=",", header=header,
                   comments="", fmt=fmt)


def write_ensemble_summary(path, rows, dim):
    """``rows``: iterables of (t, mean (dim,), width (dim,), l1)."""
    names = ["t"] + [f"mean_{i}" for i in range(dim)] + [f"width_{i}" for i in range(dim)] + ["L1_to_rho"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(names) + "\n")
        for t, mean, width, l1 in rows:
            vals = [t, *np.atleast_1d(mean), *np.atleast_1d(width), l1]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def write_summary(path, metrics):
    """``metric,value`` rows in insertion order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("metric,value\n")
        for k, v in metrics.items():
            if isinstance(v, (bool, np.bool_)):
                v = int(v)
            val = repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
            fh.write(f"{k},{val}\n")


def read_summary(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            k, v = line.rstrip("\n").split(",", 1)
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
    return out


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
