"""Observation logs shared by both solvers."""

import csv

import numpy as np

from .fields import moments, norm


class ObservationLog:
    """Rows of ``t, norm, mean_*, width_*, extra...`` plus comment lines."""

    def __init__(self, grid):
        self.grid = grid
        self.rows = []
        self.comments = []

    def record(self, t, rho, extra=None):
        mean, width = moments(rho, self.grid)
        row = {"t": float(t), "norm": norm(rho, self.grid)}
        for name, m, w in zip("xy", mean, width):
            row[f"mean_{name}"] = float(m)
        for name, w in zip("xy", width):
            row[f"width_{name}"] = float(w)
        if extra:
            row.update(extra)
        self.rows.append(row)
        return row

    def comment(self, text):
        self.comments.append(text)

    def column(self, name):
        return np.array([r.get(name, np.nan) for r in self.rows])

    @property
    def fieldnames(self):
        names = []
        for r in self.rows:
            for k in r:
                if k not in names:
                    names.append(k)
        return names

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# grid: {self.grid.describe()}\n")
            for c in self.comments:
                fh.write(f"# {c}\n")
            writer = csv.DictWriter(fh, fieldnames=self.fieldnames, restval="")
            writer.writeheader()
            for r in self.rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def run_observers(observers, step, t, state):
    extra = {}
    for obs in observers:
        cadence = getattr(obs, "cadence", 1)
        if step % cadence == 0:
            out = obs(t, state)
            if out:
                extra.update(out)
    return extra


class FrameRecorder:
    """Observer storing a derived array every ``cadence`` steps."""

    def __init__(self, fn, cadence=1):
        self.fn = fn
        self.cadence = cadence
        self.times = []
        self.frames = []

    def __call__(self, t, state):
        self.times.append(float(t))
        self.frames.append(self.fn(state))
        return None

    def stacked(self):
        return np.array(self.times), np.stack(self.frames)
