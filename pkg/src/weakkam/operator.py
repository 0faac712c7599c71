"""Discrete evolution operator on the periodic grid.

One semi-Lagrangian step updates every node by minimizing, over a truncated
symmetric velocity grid, the interpolated current value at the departure point
x - v dt plus the running cost dt * L(t_mid, x - v dt, v) with the midpoint
time rule.  The minimizing velocity per node is recorded in a foot table so
minimizing curves can be reconstructed later by walking the recorded feet
backwards.

The step inherits the structural properties of linear interpolation exactly:
it is monotone, commutes with adding constants up to rounding, and is
nonexpansive in the sup norm.  Ties in the minimization break toward smaller
|v|, then toward negative v, which makes foot tables deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import WindowExceeded
from .grid import CircleGrid, TimeGrid, ValueField, split_index, wrap
from .hamiltonian import HamiltonianSpec, feet_cost_evaluator, legendre, weyl_samples

DEFAULT_WINDOW = 64


@dataclass(frozen=True)
class VelocityGrid:
    """Symmetric velocity nodes -v_max + j * (2 v_max / (n_v - 1)).

    n_v is odd so v = 0 is a node; v_max should enclose the speeds of
    minimizing curves (see hamiltonian.default_v_max).
    """

    v_max: float
    n_v: int

    def __post_init__(self):
        if self.v_max <= 0.0:
            raise ValueError("v_max must be positive")
        if self.n_v < 9 or self.n_v % 2 == 0:
            raise ValueError(f"n_v must be odd and at least 9, got {self.n_v}")

    @property
    def velocities(self) -> np.ndarray:
        return np.linspace(-self.v_max, self.v_max, self.n_v)

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / (self.n_v - 1)


@dataclass(frozen=True)
class FootTable:
    """Per-node minimizing velocity for the step ending at step_index."""

    step_index: int
    argmin_velocity: np.ndarray

    def __post_init__(self):
        v = np.array(self.argmin_velocity, dtype=float, copy=True)
        v.setflags(write=False)
        object.__setattr__(self, "argmin_velocity", v)


class StepKernel:
    """Precomputed tables for one semi-Lagrangian step.

    Rows are ordered by tie-break priority (|v| ascending, negative first), so
    np.argmin's first-minimum rule implements the deterministic tie-breaking.
    """

    def __init__(self, spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid):
        n = cgrid.n_x
        dt = tgrid.dt
        vels = vgrid.velocities
        order = np.lexsort((vels, np.abs(vels)))
        vels = vels[order]
        feet = wrap(cgrid.nodes[None, :] - vels[:, None] * dt)
        i0, w = split_index(feet * n)
        i0 = i0 % n
        self.idx0 = i0
        self.idx1 = (i0 + 1) % n
        self.w = w
        self.one_minus_w = 1.0 - w
        self.velocities = vels
        self.cost = feet_cost_evaluator(spec, feet, vels)
        self.dt = dt
        self._cols = np.arange(n)

    def apply(self, values: np.ndarray, step_index: int):
        """One step from time step_index; returns (new values, argmin velocities)."""
        t_mid = (step_index + 0.5) * self.dt
        u_feet = self.one_minus_w * values[self.idx0] + self.w * values[self.idx1]
        cand = u_feet + self.dt * self.cost(t_mid)
        j = np.argmin(cand, axis=0)
        return cand[j, self._cols], self.velocities[j]


def step(u: ValueField, spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid, kernel: StepKernel | None = None):
    """One semi-Lagrangian step of length dt.  Returns (new field, foot table)."""
    if u.n_x != cgrid.n_x:
        raise ValueError("field length does not match the grid")
    if kernel is None:
        kernel = StepKernel(spec, cgrid, tgrid, vgrid)
    new_values, argv = kernel.apply(u.values, u.step_index)
    k1 = u.step_index + 1
    return ValueField(new_values, k1), FootTable(k1, argv)


def period_map(u: ValueField, spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid, kernel: StepKernel | None = None):
    """Composition of m_t steps over one unit period.

    Bitwise equal to applying step m_t times.  Returns (field, foot tables).
    """
    if u.step_index % tgrid.m_t != 0:
        raise ValueError("period_map must start at a period boundary")
    if kernel is None:
        kernel = StepKernel(spec, cgrid, tgrid, vgrid)
    values = u.values
    tables = []
    for k in range(tgrid.m_t):
        idx = u.step_index + k
        values, argv = kernel.apply(values, idx)
        tables.append(FootTable(idx + 1, argv))
    return ValueField(values, u.step_index + tgrid.m_t), tables


@dataclass
class EvolutionTrace:
    """Record of an evolution: boundary snapshots plus recent foot tables.

    Snapshots are kept at every period boundary; foot tables only for the most
    recent `window` periods (a ring buffer), which is all backtracking needs.
    """

    spec: HamiltonianSpec
    cgrid: CircleGrid
    tgrid: TimeGrid
    vgrid: VelocityGrid
    snapshots: list
    foot_tables: deque = field(repr=False)
    n_periods_run: int = 0
    window: int = DEFAULT_WINDOW

    @property
    def final(self) -> ValueField:
        return self.snapshots[-1]

    @property
    def final_step(self) -> int:
        return self.snapshots[-1].step_index

    @property
    def first_retained_step(self) -> int:
        """Earliest step index whose foot table is still buffered."""
        return self.final_step - len(self.foot_tables) + 1

    def boundary(self, period_index: int) -> ValueField:
        return self.snapshots[period_index]

    def foot_table(self, step_index: int) -> FootTable:
        pos = step_index - self.first_retained_step
        if pos < 0 or pos >= len(self.foot_tables):
            raise WindowExceeded(
                f"step {step_index} outside retained window "
                f"[{self.first_retained_step}, {self.final_step}]"
            )
        tab = self.foot_tables[pos]
        assert tab.step_index == step_index
        return tab


def evolve(u0: ValueField, spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid, n_periods: int, window: int = DEFAULT_WINDOW) -> EvolutionTrace:
    """Run n_periods unit periods from u0, keeping boundary snapshots.

    u0 must sit on a period boundary.  Two runs with identical inputs produce
    bitwise identical traces.
    """
    if n_periods < 1:
        raise ValueError("n_periods must be at least 1")
    if u0.step_index % tgrid.m_t != 0:
        raise ValueError("u0 must sit on a period boundary")
    if u0.n_x != cgrid.n_x:
        raise ValueError("field length does not match the grid")
    kernel = StepKernel(spec, cgrid, tgrid, vgrid)
    tables: deque = deque(maxlen=window * tgrid.m_t)
    snapshots = [u0]
    values = u0.values
    for per in range(n_periods):
        base = u0.step_index + per * tgrid.m_t
        for k in range(tgrid.m_t):
            values, argv = kernel.apply(values, base + k)
            tables.append(FootTable(base + k + 1, argv))
        snapshots.append(ValueField(values, base + tgrid.m_t))
    return EvolutionTrace(spec, cgrid, tgrid, vgrid, snapshots, tables, n_periods, window)


def intra_period_fields(trace: EvolutionTrace, period_index: int) -> list:
    """The m_t + 1 fields inside one recorded period, recomputed exactly.

    Stepping is deterministic, so re-running one period from its boundary
    snapshot reproduces the original intra-period values bitwise.
    """
    u = trace.boundary(period_index)
    kernel = StepKernel(trace.spec, trace.cgrid, trace.tgrid, trace.vgrid)
    fields = [u]
    values = u.values
    for k in range(trace.tgrid.m_t):
        values, _ = kernel.apply(values, u.step_index + k)
        fields.append(ValueField(values, u.step_index + k + 1))
    return fields


def discrete_lipschitz_bound(spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid) -> float:
    """An input-independent bound on the node Lipschitz constant after one period.

    A node's neighbor can reuse the node's minimizing foot by shifting its
    velocity by dx/dt (rounded to the velocity grid), so the iterate's slope
    contracts toward max |L_v| with per-step mixing factor
    alpha = dv * n_x / (2 m_t).  The returned value is that fixed point plus a
    unit margin; it diverges (inf) if the grids are too coarse to mix.
    """
    shift = tgrid.m_t / cgrid.n_x
    alpha = vgrid.dv * cgrid.n_x / (2.0 * tgrid.m_t)
    if alpha >= 1.0:
        return float("inf")
    vext = np.concatenate(
        [vgrid.velocities, [vgrid.v_max + shift, -vgrid.v_max - shift]]
    )
    p_max = 0.0
    for t, x in weyl_samples(16, 2):
        for v in vext:
            p_max = max(p_max, abs(legendre(spec, t, x, float(v)).argmax_p))
    return p_max / (1.0 - alpha) + 1.0


def dump_foot_tables(trace: EvolutionTrace, path) -> None:
    """Binary dump: int64 header (n_x, m_t, window), then float64 velocities
    row-major by step (oldest retained first) then node."""
    with open(path, "wb") as fh:
        np.array([trace.cgrid.n_x, trace.tgrid.m_t, trace.window], dtype="<i8").tofile(fh)
        for tab in trace.foot_tables:
            np.asarray(tab.argmin_velocity, dtype="<f8").tofile(fh)


def read_foot_tables(path):
    """Inverse of dump_foot_tables: ((n_x, m_t, window), (n_steps, n_x) array)."""
    with open(path, "rb") as fh:
        header = np.fromfile(fh, dtype="<i8", count=3)
        payload = np.fromfile(fh, dtype="<f8")
    n_x = int(header[0])
    return (int(header[0]), int(header[1]), int(header[2])), payload.reshape(-1, n_x)
