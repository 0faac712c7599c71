"""Periodic grids and grid functions.

Space is the unit circle discretized by n_x equispaced nodes; time is tracked
as an integer step count (dt = 1/m_t), never as an accumulated float, so the
unit time period is exact.  Interpolation is periodic piecewise-linear: the
weights are nonnegative and sum to one, which makes it monotone, nonexpansive
and exactly compatible with adding constants.  Those three properties are load
bearing for the evolution operator and must not be traded for higher order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SizeMismatch

# Queries within this fraction of a node (in index units) are snapped onto it,
# so node coordinates recomputed through x*n_x round-trips stay exact.
_SNAP = 1e-12


def wrap(x):
    """Reduce a position (scalar or array) to the fundamental domain [0, 1)."""
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    r = np.where(r >= 1.0, r - 1.0, r)
    if r.ndim == 0:
        return float(r)
    return r


def circle_dist(x, y):
    """Distance on the circle: min over integers k of |x - y + k|, at most 1/2."""
    d = wrap(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    out = np.minimum(d, 1.0 - d)
    if out.ndim == 0:
        return float(out)
    return out


def split_index(s):
    """Split fractional node indices into (floor, weight), snapping near-nodes.

    Accepts scalars or arrays of positions already scaled to index units
    (x * n_x).  The weight is in [0, 1); values within _SNAP of a node give
    weight exactly 0 so that interpolation is exact at nodes.
    """
    s = np.asarray(s, dtype=float)
    i0 = np.floor(s)
    w = s - i0
    hi = w > 1.0 - _SNAP
    i0 = np.where(hi, i0 + 1.0, i0)
    w = np.where(hi | (w < _SNAP), 0.0, w)
    return i0.astype(np.int64), w


@dataclass(frozen=True)
class CircleGrid:
    """Equispaced nodes x_i = i/n_x covering [0, 1) exactly once."""

    n_x: int

    def __post_init__(self):
        if self.n_x < 8:
            raise ValueError(f"n_x must be at least 8, got {self.n_x}")

    @property
    def dx(self) -> float:
        return 1.0 / self.n_x

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_x) / self.n_x


@dataclass(frozen=True)
class TimeGrid:
    """m_t steps per unit period; times are integer step counts times dt."""

    m_t: int

    def __post_init__(self):
        if self.m_t < 4:
            raise ValueError(f"m_t must be at least 4, got {self.m_t}")

    @property
    def dt(self) -> float:
        return 1.0 / self.m_t


@dataclass(frozen=True)
class ValueField:
    """One spatial snapshot u(t, .) on the periodic grid.

    Immutable once constructed; global time equals step_index * dt.
    """

    values: np.ndarray
    step_index: int = 0

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim != 1:
            raise ValueError("ValueField values must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ValueError("ValueField values must all be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_x(self) -> int:
        return len(self.values)

    def shifted(self, c: float) -> "ValueField":
        """Same snapshot plus the constant c."""
        return ValueField(self.values + c, self.step_index)

    def at_step(self, step_index: int) -> "ValueField":
        return ValueField(self.values, step_index)

    def min(self) -> float:
        return float(self.values.min())


def interp(field: ValueField, x):
    """Periodic piecewise-linear interpolation of a grid function.

    Exact at nodes; for off-node x the value is a convex combination of the
    two bracketing node values.  Accepts scalar or array query points.
    """
    n = field.n_x
    s = np.asarray(wrap(x), dtype=float) * n
    i0, w = split_index(s)
    i0 = i0 % n
    i1 = (i0 + 1) % n
    v = field.values
    out = (1.0 - w) * v[i0] + w * v[i1]
    if out.ndim == 0:
        return float(out)
    return out


def sup_dist(f: ValueField, g: ValueField) -> float:
    """Sup norm of f - g over the nodes."""
    if f.n_x != g.n_x:
        raise SizeMismatch(f"field lengths differ: {f.n_x} vs {g.n_x}")
    return float(np.max(np.abs(f.values - g.values)))


def discrete_lipschitz(field: ValueField) -> float:
    """max_i |u_{i+1} - u_i| / dx over the circular node pairs."""
    v = field.values
    d = np.abs(np.diff(v, append=v[0]))
    return float(d.max() * len(v))


def node_values(grid: CircleGrid, fn, step_index: int = 0) -> ValueField:
    """ValueField holding fn evaluated at the grid nodes."""
    return ValueField(np.asarray(fn(grid.nodes), dtype=float), step_index)


def write_snapshots_csv(path, fields) -> None:
    """One CSV row per snapshot: step_index, v_0, ..., v_{n_x-1}."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for fld in fields:
            writer.writerow([fld.step_index] + [repr(float(v)) for v in fld.values])


def read_snapshots_csv(path) -> list:
    """Inverse of write_snapshots_csv."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            out.append(ValueField(np.array([float(c) for c in row[1:]]), int(row[0])))
    return out
