"""Critical value and periodic solutions of the discrete evolution.

The critical value lambda is the additive (min-plus) eigenvalue of the period
map: every iterate drifts by -lambda per period once transients die out.  It
is estimated from the drift of the spatial minimum, either per period (median,
robust to transients) or as a long-time average.  Periodic solutions are
computed by min-plus power iteration (apply the period map, renormalize the
additive gauge) and, independently, by the running-minimum construction that
realizes the pointwise lim inf of integer time shifts.

Gauge convention: a periodic solution is normalized so its phase-0 snapshot
has minimum zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, NoConvergence
from .grid import CircleGrid, TimeGrid, ValueField, sup_dist, write_snapshots_csv, read_snapshots_csv
from .hamiltonian import HamiltonianSpec, spec_from_json, spec_to_json
from .operator import EvolutionTrace, StepKernel, VelocityGrid, intra_period_fields, period_map

PER_PERIOD_DRIFT = "per_period_drift"
LONG_TIME_AVERAGE = "long_time_average"


@dataclass(frozen=True)
class LambdaEstimate:
    """Estimated critical value of the working equation.

    dispersion is the spread (max - min) of the per-period increments after
    burn-in; it bounds how settled the drift is.
    """

    value: float
    method: str
    n_periods_used: int
    dispersion: float


def _min_series(trace: EvolutionTrace) -> np.ndarray:
    return np.array([s.values.min() for s in trace.snapshots])


def estimate_lambda(trace: EvolutionTrace, burn_in_fraction: float = 0.5, method: str = PER_PERIOD_DRIFT) -> LambdaEstimate:
    """Estimate lambda from the drift of min_x u at period boundaries."""
    if trace.n_periods_run < 10:
        raise InsufficientData("lambda estimation needs at least 10 periods")
    if not 0.0 <= burn_in_fraction <= 0.9:
        raise ValueError("burn_in_fraction must be in [0, 0.9]")
    mins = _min_series(trace)
    n = trace.n_periods_run
    burn = int(np.floor(burn_in_fraction * n))
    increments = np.diff(mins)[burn:]
    if len(increments) < 5:
        raise InsufficientData("fewer than 5 post-burn-in periods")
    dispersion = float(increments.max() - increments.min())
    if method == PER_PERIOD_DRIFT:
        value = -float(np.median(increments))
    elif method == LONG_TIME_AVERAGE:
        value = -float((mins[-1] - mins[burn]) / (n - burn))
    else:
        raise ValueError(f"unknown method {method!r}")
    return LambdaEstimate(value, method, len(increments), dispersion)


@dataclass(frozen=True)
class PeriodicSolution:
    """A fixed point of the period map, sampled at every intra-period step.

    snapshots holds m_t + 1 fields over one period; snapshots[0] is gauge
    normalized to have minimum zero.  residual is the sup-norm fixed-point
    defect sup |period_map(phi_0) - phi_0|.  lam records the total drift per
    unit time that was removed from the raw evolution (the lambda_shift folded
    into the spec, plus any normalization passed explicitly).
    """

    snapshots: tuple
    residual: float
    lam: float
    normalization: str = "min over the circle at phase 0 equals 0"

    @property
    def phase0(self) -> ValueField:
        return self.snapshots[0]


def _fill_period(v0: ValueField, spec, cgrid, tgrid, vgrid, kernel) -> list:
    fields = [v0]
    values = v0.values
    for k in range(tgrid.m_t):
        values, _ = kernel.apply(values, v0.step_index + k)
        fields.append(ValueField(values, v0.step_index + k + 1))
    return fields


def periodic_solution(spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, vgrid: VelocityGrid, u0: ValueField, tol: float = 1e-9, max_periods: int = 500) -> PeriodicSolution:
    """Min-plus power iteration for a periodic solution of the working equation.

    Assumes lambda has already been folded into spec.lambda_shift so the
    working equation has (near) zero drift.  Iterates v <- period_map(v) with
    the additive gauge renormalized each period, until two consecutive
    normalized iterates agree within tol in sup norm.  Raises NoConvergence
    when max_periods is exhausted, reporting the last residual; rotation
    numbers of long period stall here by design and the caller falls back to
    period detection on the raw trace.
    """
    kernel = StepKernel(spec, cgrid, tgrid, vgrid)
    v = ValueField(u0.values - u0.values.min(), 0)
    last_residual = np.inf
    for _ in range(max_periods):
        w, _ = period_map(v, spec, cgrid, tgrid, vgrid, kernel=kernel)
        w_norm = ValueField(w.values - w.values.min(), 0)
        last_residual = sup_dist(w_norm, v)
        v = w_norm
        if last_residual <= tol:
            snaps = _fill_period(v, spec, cgrid, tgrid, vgrid, kernel)
            closing, _ = period_map(v, spec, cgrid, tgrid, vgrid, kernel=kernel)
            residual = sup_dist(ValueField(closing.values, 0), v)
            return PeriodicSolution(tuple(snaps), residual, spec.lambda_shift)
    raise NoConvergence(
        f"power iteration did not reach tol={tol} in {max_periods} periods",
        residual=last_residual,
        iterations=max_periods,
    )


def liminf_solution(trace: EvolutionTrace, lam: float) -> PeriodicSolution:
    """Pointwise running minimum over integer time shifts of the trace tail.

    For each intra-period phase, takes the minimum over the last half of the
    trace of the drift-normalized fields u(n + phase) + lam * (n + phase);
    this is the finite-window stand-in for the lim inf over all shifts, which
    is itself a periodic solution.  The intra-period fields are recomputed
    from the boundary snapshots (deterministically, bitwise).
    """
    n = trace.n_periods_run
    if n < 20:
        raise InsufficientData("liminf construction needs at least 20 periods")
    m_t = trace.tgrid.m_t
    dt = trace.tgrid.dt
    start = n // 2
    best = None
    for per in range(start, n):
        fields = intra_period_fields(trace, per)
        base_step = fields[0].step_index
        stack = np.stack(
            [f.values + lam * ((base_step + k) * dt) for k, f in enumerate(fields)]
        )
        best = stack if best is None else np.minimum(best, stack)
    gauge = best[0].min()
    snaps = tuple(ValueField(best[k] - gauge, k) for k in range(m_t + 1))
    closing, _ = period_map(
        snaps[0], trace.spec, trace.cgrid, trace.tgrid, trace.vgrid
    )
    residual = sup_dist(
        ValueField(closing.values + lam * 1.0, 0), snaps[0]
    )
    total_lam = trace.spec.lambda_shift + lam
    return PeriodicSolution(snaps, residual, total_lam)


def fixed_point_defect(solution: PeriodicSolution, spec, cgrid, tgrid, vgrid) -> float:
    """Recheck sup |period_map(phi_0) - phi_0| (e.g. after reloading from disk)."""
    phi0 = solution.phase0
    drift = solution.lam - spec.lambda_shift
    closing, _ = period_map(ValueField(phi0.values, 0), spec, cgrid, tgrid, vgrid)
    return sup_dist(ValueField(closing.values + drift, 0), phi0)


def save_periodic_solution(solution: PeriodicSolution, spec: HamiltonianSpec, cgrid: CircleGrid, tgrid: TimeGrid, header_path, snapshots_path) -> None:
    """JSON header (spec, grids, lambda, residual) plus a CSV snapshot block."""
    header = {
        "spec": spec_to_json(spec),
        "grids": {"n_x": cgrid.n_x, "m_t": tgrid.m_t},
        "lambda": float(solution.lam),
        "residual": float(solution.residual),
        "normalization": solution.normalization,
        "snapshots_csv": str(snapshots_path),
    }
    with open(header_path, "w") as fh:
        json.dump(header, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_snapshots_csv(snapshots_path, solution.snapshots)


def load_periodic_solution(header_path):
    """Inverse of save_periodic_solution: (solution, spec, n_x, m_t)."""
    with open(header_path) as fh:
        header = json.load(fh)
    snaps = read_snapshots_csv(header["snapshots_csv"])
    sol = PeriodicSolution(tuple(snaps), float(header["residual"]), float(header["lambda"]))
    return sol, spec_from_json(header["spec"]), header["grids"]["n_x"], header["grids"]["m_t"]
