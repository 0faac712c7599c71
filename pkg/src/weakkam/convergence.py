"""Period detection and the end-to-end convergence harness.

The harness runs the full pipeline: evolve, estimate the critical value
lambda, fold it into the Hamiltonian's normalization shift, re-evolve the
gauged equation, measure the rotation number of backtracked minimizers,
reduce it to a rational with bounded denominator (or declare it irrational at
this resolution), detect the integer time period T of the attractor, and
quantify the gap to the T-periodic limit built from the trace tail.

Periodicity verdicts: theorem_ok means the trailing quarter of the run is
within the period tolerance of the constructed periodic limit; addendum_ok
means the detected period is consistent with the rotation number (T = 1 when
the rotation number is irrational at resolution, T bounded by the denominator
q when it reduces to p/q).  A grid computation cannot distinguish an
irrational from a high-denominator rational, so the report states which
hypothesis was applied instead of claiming the true arithmetic type.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import CircleGrid, TimeGrid, ValueField
from .errors import InsufficientData, NoConvergence
from .hamiltonian import HamiltonianSpec, default_v_max, spec_to_json
from .operator import DEFAULT_WINDOW, EvolutionTrace, VelocityGrid, evolve
from .spectrum import (
    LambdaEstimate,
    estimate_lambda,
    periodic_solution,
)
from .characteristics import rotation_number


def rational_reduce(rho: float, denominator_cap: int, rho_spread: float = 0.0):
    """Best continued-fraction convergent p/q with q <= denominator_cap.

    Returns (p, q, error) when the best convergent is within
    rho_spread + 1/(2 denominator_cap^2) of rho, else None (irrational at this
    resolution).  The threshold is the classical half-square criterion
    anchored at the cap, widened by the measured spread of rho.
    """
    if denominator_cap < 1:
        raise ValueError("denominator_cap must be at least 1")
    a0 = math.floor(rho)
    candidates = [(a0, 1)]
    h_prev, h = 1, a0
    k_prev, k = 0, 1
    x = rho - a0
    for _ in range(64):
        if x <= 1e-15:
            break
        x = 1.0 / x
        a = math.floor(x)
        x -= a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        if k > denominator_cap:
            break
        candidates.append((h, k))
    p, q = min(candidates, key=lambda pq: abs(rho - pq[0] / pq[1]))
    err = abs(rho - p / q)
    if err <= rho_spread + 0.5 / denominator_cap ** 2:
        return int(p), int(q), float(err)
    return None


def detect_period(trace: EvolutionTrace, lam: float, q_max: int, tol: float):
    """Smallest T <= q_max whose drift-normalized period-T residuals pass tol.

    For each candidate T, r_T(n) = sup |u(n+T) + lam T - u(n)| over period
    boundaries n; detection looks at the final quarter of the available n.
    Returns (T or None, {T: residual array}).
    """
    n = trace.n_periods_run
    if n < 4 * q_max:
        raise InsufficientData(
            f"period detection with q_max={q_max} needs at least {4 * q_max} periods, trace has {n}"
        )
    values = [s.values for s in trace.snapshots]
    histories = {}
    detected = None
    for T in range(1, q_max + 1):
        r = np.array(
            [
                float(np.max(np.abs(values[k + T] + lam * T - values[k])))
                for k in range(n - T + 1)
            ]
        )
        histories[T] = r
        tail = r[int(math.floor(0.75 * len(r))):]
        if detected is None and float(tail.max()) <= tol:
            detected = T
    return detected, histories


@dataclass(frozen=True)
class HarnessConfig:
    """Grids, horizons and tolerances for the convergence harness."""

    n_x: int = 200
    m_t: int = 50
    n_v: int = 129
    v_max: float | None = None
    n_periods: int = 200
    q_max: int = 8
    window: int = DEFAULT_WINDOW
    burn_in_fraction: float = 0.5
    rotation_probes: int = 8
    rotation_span: int = 16
    lambda_tol: float = 1e-3
    fixedpoint_tol: float = 1e-9
    period_tol: float = 1e-3
    uniqueness_max_periods: int = 300

    def grids(self, spec: HamiltonianSpec):
        vmax = self.v_max if self.v_max is not None else default_v_max(spec)
        return CircleGrid(self.n_x), TimeGrid(self.m_t), VelocityGrid(vmax, self.n_v)


@dataclass
class ConvergenceReport:
    """Everything the harness measured, serializable to a single JSON document."""

    lam: LambdaEstimate
    rho: float
    rho_spread: float
    rational: tuple | None
    rho_treated_as: str
    detected_period: int | None
    residual_history: dict
    final_gap: float | None
    theorem_ok: bool
    addendum_ok: bool
    uniqueness_gap: float | None
    config: HarnessConfig
    spec: HamiltonianSpec
    artifacts: dict = field(default_factory=dict, repr=False, compare=False)

    def to_json_dict(self) -> dict:
        d = {
            "schema": 1,
            "spec": spec_to_json(self.spec),
            "config": {
                "n_x": self.config.n_x,
                "m_t": self.config.m_t,
                "n_v": self.config.n_v,
                "v_max": self.config.v_max,
                "n_periods": self.config.n_periods,
                "q_max": self.config.q_max,
                "window": self.config.window,
                "burn_in_fraction": self.config.burn_in_fraction,
                "rotation_probes": self.config.rotation_probes,
                "rotation_span": self.config.rotation_span,
                "lambda_tol": self.config.lambda_tol,
                "fixedpoint_tol": self.config.fixedpoint_tol,
                "period_tol": self.config.period_tol,
            },
            "lambda": {
                "value": self.lam.value,
                "method": self.lam.method,
                "n_periods_used": self.lam.n_periods_used,
                "dispersion": self.lam.dispersion,
            },
            "rho": self.rho,
            "rho_spread": self.rho_spread,
            "rational": None,
            "rho_treated_as": self.rho_treated_as,
            "detected_period": self.detected_period,
            "final_gap": self.final_gap,
            "theorem_ok": self.theorem_ok,
            "addendum_ok": self.addendum_ok,
            "uniqueness_gap": self.uniqueness_gap,
            "residual_history": {
                str(T): [float(r) for r in arr] for T, arr in self.residual_history.items()
            },
        }
        if self.rational is not None:
            p, q, err = self.rational
            d["rational"] = {"p": p, "q": q, "error": err}
        return d


def write_report_json(report: ConvergenceReport, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_residuals_csv(report: ConvergenceReport, path) -> None:
    """Columns: boundary index n, then r_T(n) for each candidate T."""
    hist = report.residual_history
    periods = sorted(hist)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n"] + [f"r_{T}" for T in periods])
        n_rows = max(len(hist[T]) for T in periods)
        for n in range(n_rows):
            row = [n]
            for T in periods:
                row.append(repr(float(hist[T][n])) if n < len(hist[T]) else "")
            writer.writerow(row)


def periodic_limit_gap(trace: EvolutionTrace, lam: float, T: int) -> float:
    """Gap between the trace tail and the periodic limit built from its last T block.

    All boundary snapshots are drift-normalized to the gauge of the final
    block; the limit's phase r snapshot is the final block's entry r.  The gap
    is the worst sup distance over the trailing quarter of the run, so it
    measures Cauchy-type convergence even when T > 1.
    """
    n = trace.n_periods_run
    anchor = n - T
    norm = [
        trace.boundary(k).values + lam * (k - anchor) for k in range(n + 1)
    ]
    limit = [norm[anchor + r] for r in range(T)]
    tail_start = int(math.floor(0.75 * n))
    gap = 0.0
    for k in range(tail_start, n + 1):
        gap = max(gap, float(np.max(np.abs(norm[k] - limit[(k - anchor) % T]))))
    return gap


def _uniqueness_gap(spec, cgrid, tgrid, vgrid, cfg: HarnessConfig, u0_list) -> float | None:
    """Worst pairwise sup spread, modulo additive constants, of periodic
    solutions grown from distinct initial data.  None if any iteration stalls."""
    sols = []
    for u0 in u0_list:
        try:
            sols.append(
                periodic_solution(
                    spec, cgrid, tgrid, vgrid, u0,
                    tol=cfg.fixedpoint_tol, max_periods=cfg.uniqueness_max_periods,
                )
            )
        except NoConvergence:
            return None
    worst = 0.0
    for i in range(len(sols)):
        for j in range(i + 1, len(sols)):
            d = sols[i].phase0.values - sols[j].phase0.values
            worst = max(worst, float(d.max() - d.min()))
    return worst


def verify_theorem(spec: HamiltonianSpec, u0: ValueField, cfg: HarnessConfig) -> ConvergenceReport:
    """Full pipeline; never raises on a missing period, the report carries it.

    A failed detection (no T <= q_max passes period_tol) yields
    detected_period None with theorem_ok and addendum_ok False; residual
    histories are always included so the failure is inspectable.
    """
    cgrid, tgrid, vgrid = cfg.grids(spec)
    trace1 = evolve(u0, spec, cgrid, tgrid, vgrid, cfg.n_periods, cfg.window)
    lam1 = estimate_lambda(trace1, cfg.burn_in_fraction)
    gauged = spec.shifted_by(lam1.value)
    trace2 = evolve(u0, gauged, cgrid, tgrid, vgrid, cfg.n_periods, cfg.window)
    lam2 = estimate_lambda(trace2, cfg.burn_in_fraction)
    rho, spread = rotation_number(trace2, cfg.rotation_probes, cfg.rotation_span)
    rational = rational_reduce(rho, cfg.q_max, spread)
    detected, histories = detect_period(trace2, lam2.value, cfg.q_max, cfg.period_tol)
    final_gap = None
    theorem_ok = False
    if detected is not None:
        final_gap = periodic_limit_gap(trace2, lam2.value, detected)
        theorem_ok = final_gap <= cfg.period_tol
    if rational is not None:
        rho_treated_as = "rational"
        addendum_ok = detected is not None and detected <= rational[1]
    else:
        rho_treated_as = "irrational"
        addendum_ok = detected == 1
    uniqueness_gap = None
    if rational is None:
        nodes = cgrid.nodes
        u0_list = [
            ValueField(np.zeros(cgrid.n_x)),
            ValueField(np.cos(2.0 * np.pi * nodes)),
            ValueField(np.sin(2.0 * np.pi * nodes) + 0.5 * np.cos(4.0 * np.pi * nodes)),
        ]
        uniqueness_gap = _uniqueness_gap(gauged, cgrid, tgrid, vgrid, cfg, u0_list)
    report = ConvergenceReport(
        lam=lam1,
        rho=rho,
        rho_spread=spread,
        rational=rational,
        rho_treated_as=rho_treated_as,
        detected_period=detected,
        residual_history=histories,
        final_gap=final_gap,
        theorem_ok=theorem_ok,
        addendum_ok=addendum_ok,
        uniqueness_gap=uniqueness_gap,
        config=cfg,
        spec=spec,
    )
    report.artifacts = {
        "trace": trace2,
        "lambda_raw": lam1,
        "lambda_residual": lam2,
        "gauged_spec": gauged,
    }
    return report
