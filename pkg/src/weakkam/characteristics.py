"""Minimizing curves reconstructed from recorded foot tables.

Backtracking walks the per-node minimizing velocities backwards in time:
gamma(t_k) = gamma(t_{k+1}) - v dt, where v is the foot velocity of the step
ending at t_{k+1}.  Off-node positions blend the two bracketing nodes'
velocities linearly, which keeps the curve continuous in its end point; on
nodes the recorded velocity is reproduced exactly, so node-aligned curves
satisfy the discrete Bellman identity u(end) - u(start) = action to rounding.

Curves are kept as lifts on the real line (the literal v dt increments are
used, never re-wrapped), so asymptotic slopes are rotation numbers.  The
diagnostics quantify, with tolerances set by the scheme resolution, the
structural facts that hold exactly in the continuum: the calibration identity
along minimizers, the momentum / space-derivative identity on calibrated
curves, the monotonicity of differences of two solutions along one solution's
minimizers, and the non-crossing of simultaneous minimizers.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, WindowExceeded
from .grid import ValueField, interp, split_index, wrap
from .hamiltonian import lagrangian_value, legendre
from .operator import EvolutionTrace, intra_period_fields
from .spectrum import PeriodicSolution


@dataclass(frozen=True)
class Characteristic:
    """A backtracked minimizing curve.

    lifted_positions has one entry per time step over the span (earliest
    first, real line); velocities[k] and momenta[k] belong to the step from
    t_k to t_{k+1}; action is the rectangle-rule running cost of the curve.
    """

    end_step: int
    lifted_positions: np.ndarray
    velocities: np.ndarray
    momenta: np.ndarray
    action: float
    span_periods: int

    @property
    def start_step(self) -> int:
        return self.end_step - len(self.velocities)


def _blend_velocity(table, x) -> float:
    """Foot velocity at an off-node position: linear blend of bracketing nodes."""
    v = table.argmin_velocity
    n = len(v)
    i0, w = split_index(wrap(x) * n)
    i0 = int(i0) % n
    return float((1.0 - w) * v[i0] + w * v[(i0 + 1) % n])


def backtrack(trace: EvolutionTrace, end_x: float, span_periods: int, end_step: int | None = None) -> Characteristic:
    """Reconstruct the minimizing curve ending at end_x over span_periods.

    Requires the foot tables for the span to still be buffered
    (span_periods <= window); raises WindowExceeded otherwise.
    """
    m_t = trace.tgrid.m_t
    dt = trace.tgrid.dt
    if end_step is None:
        end_step = trace.final_step
    n_steps = span_periods * m_t
    if end_step - n_steps < trace.first_retained_step - 1:
        raise WindowExceeded(
            f"backtracking {span_periods} periods from step {end_step} "
            f"needs feet back to step {end_step - n_steps + 1}, "
            f"buffer starts at {trace.first_retained_step}"
        )
    spec = trace.spec
    positions = [float(wrap(end_x))]
    velocities = []
    pos = positions[0]
    for s in range(end_step, end_step - n_steps, -1):
        v = _blend_velocity(trace.foot_table(s), pos)
        pos = pos - v * dt
        positions.append(pos)
        velocities.append(v)
    positions.reverse()
    velocities.reverse()
    positions = np.array(positions)
    velocities = np.array(velocities)
    momenta = np.empty_like(velocities)
    action = 0.0
    for k, v in enumerate(velocities):
        step_idx = end_step - n_steps + k
        t_mid = (step_idx + 0.5) * dt
        x_foot = wrap(positions[k])
        res = legendre(spec, t_mid, x_foot, float(v))
        momenta[k] = res.argmax_p
        action += dt * res.value
    return Characteristic(end_step, positions, velocities, momenta, float(action), span_periods)


def rotation_number(trace: EvolutionTrace, n_probes: int, span_periods: int):
    """Median asymptotic slope of backtracked curves and its probe spread.

    The continuum slope is orbit independent, so the spread across evenly
    spaced probe end points is a consistency diagnostic, not a statistic.
    """
    if span_periods < 8:
        raise ValueError("span_periods must be at least 8")
    slopes = []
    for k in range(n_probes):
        ch = backtrack(trace, k / n_probes, span_periods)
        slopes.append((ch.lifted_positions[-1] - ch.lifted_positions[0]) / span_periods)
    slopes = np.array(slopes)
    return float(np.median(slopes)), float(slopes.max() - slopes.min())


def _phase_field(solution: PeriodicSolution, step_idx: int) -> ValueField:
    m_t = len(solution.snapshots) - 1
    return solution.snapshots[step_idx % m_t]


def calibration_defect(char: Characteristic, solution: PeriodicSolution, spec, tgrid) -> float:
    """Worst defect of the calibration identity over trailing sub-curves.

    For each k, compares phi(end) - phi(t_k) with the accumulated running cost
    from t_k to the end; near zero identifies curves calibrated by phi.
    """
    dt = tgrid.dt
    n_steps = len(char.velocities)
    costs = np.empty(n_steps)
    for k, v in enumerate(char.velocities):
        step_idx = char.start_step + k
        costs[k] = dt * lagrangian_value(
            spec, (step_idx + 0.5) * dt, wrap(char.lifted_positions[k]), float(v)
        )
    suffix = np.concatenate([np.cumsum(costs[::-1])[::-1], [0.0]])
    phi_end = interp(_phase_field(solution, char.end_step), char.lifted_positions[-1])
    worst = 0.0
    for k in range(n_steps + 1):
        phi_k = interp(
            _phase_field(solution, char.start_step + k), char.lifted_positions[k]
        )
        worst = max(worst, abs(phi_end - phi_k - suffix[k]))
    return worst


def gradient_identity_check(char: Characteristic, solution: PeriodicSolution, n_x: int) -> float:
    """Worst mismatch between the curve momentum and the space derivative of phi.

    The derivative is a centered difference of the phase snapshot with step
    dx, so on calibrated curves the mismatch is O(dx).
    """
    h = 1.0 / n_x
    worst = 0.0
    for k, p in enumerate(char.momenta):
        fld = _phase_field(solution, char.start_step + k)
        x = char.lifted_positions[k]
        phi_x = (interp(fld, x + h) - interp(fld, x - h)) / (2.0 * h)
        worst = max(worst, abs(phi_x - p))
    return worst


def monotone_difference(trace1: EvolutionTrace, trace2: EvolutionTrace, char_of_2: Characteristic) -> float:
    """Largest increase of u1 - u2 along a curve backtracked from trace2.

    The continuum difference is non-increasing along u2's minimizers, so the
    returned violation is pure scheme error and shrinks under refinement.
    Intra-period fields are recomputed exactly from the boundary snapshots.
    """
    if (
        trace1.cgrid != trace2.cgrid
        or trace1.tgrid != trace2.tgrid
        or trace1.vgrid != trace2.vgrid
        or trace1.spec != trace2.spec
    ):
        raise GridMismatch("traces must share grids and Hamiltonian")
    m_t = trace1.tgrid.m_t
    start = char_of_2.start_step
    n_pts = len(char_of_2.lifted_positions)
    d = np.empty(n_pts)
    cache = {}
    for k in range(n_pts):
        step_idx = start + k
        per, phase = divmod(step_idx, m_t)
        if phase == 0:
            f1k, f2k = trace1.boundary(per), trace2.boundary(per)
        else:
            if per not in cache:
                cache[per] = (
                    intra_period_fields(trace1, per),
                    intra_period_fields(trace2, per),
                )
            f1k, f2k = cache[per][0][phase], cache[per][1][phase]
        x = char_of_2.lifted_positions[k]
        d[k] = interp(f1k, x) - interp(f2k, x)
    return float(max(0.0, np.max(np.diff(d), initial=0.0)))


@dataclass(frozen=True)
class AubrySample:
    """Clustered t=0 positions reached by long backtracking.

    points approximates the projected invariant set carried by calibrated
    curves; max_order_violation reports how far the simultaneously backtracked
    probe curves strayed from their cyclic order at the final time (the
    continuum curves cannot cross).
    """

    points: tuple
    phase: float
    cluster_tolerance: float
    max_order_violation: float


def non_crossing_violation(trace: EvolutionTrace, n_probes: int, span_periods: int, chars=None) -> float:
    """Largest backward inversion of the cyclic order of probe curves.

    Curves are sorted by end point; for every earlier time the lifted
    positions of cyclically adjacent pairs must stay ordered, up to scheme
    slack of about one velocity-grid spacing.
    """
    if chars is None:
        chars = [backtrack(trace, k / n_probes, span_periods) for k in range(n_probes)]
    lifted = np.stack([c.lifted_positions for c in chars])
    order = np.argsort(lifted[:, -1], kind="stable")
    lifted = lifted[order]
    gaps = lifted[1:] - lifted[:-1]
    wrap_gap = (lifted[0] + 1.0) - lifted[-1]
    worst = max(0.0, float(-gaps.min(initial=0.0)))
    worst = max(worst, float(-wrap_gap.min(initial=0.0)))
    return worst


def aubry_sample(trace: EvolutionTrace, n_probes: int, span_periods: int, cluster_tolerance: float | None = None) -> AubrySample:
    """Backtrack evenly spaced probes and cluster their earliest positions.

    The earliest point of each curve sits on a period boundary (phase 0); the
    clustered positions sample the projected invariant set.  Cluster
    representatives are members of their cluster, so every returned point is
    within cluster_tolerance of an actual backtracked end point, and distinct
    representatives are at least cluster_tolerance apart.
    """
    if cluster_tolerance is None:
        cluster_tolerance = 3.0 * trace.cgrid.dx
    chars = [backtrack(trace, k / n_probes, span_periods) for k in range(n_probes)]
    violation = non_crossing_violation(trace, n_probes, span_periods, chars=chars)
    endpoints = np.sort(wrap(np.array([c.lifted_positions[0] for c in chars])))
    clusters = [[endpoints[0]]]
    for x in endpoints[1:]:
        if x - clusters[-1][-1] <= cluster_tolerance:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    # merge across the wrap seam
    if len(clusters) > 1 and (endpoints[0] + 1.0) - clusters[-1][-1] <= cluster_tolerance:
        clusters[0] = clusters.pop() + [x + 1.0 for x in clusters[0]]
    points = []
    for members in clusters:
        members = np.array(members)
        rep = members[np.argmin(np.abs(members - members.mean()))]
        points.append(float(wrap(rep)))
    points.sort()
    # enforce pairwise separation: greedily merge representatives still too close
    merged = [points[0]] if points else []
    for x in points[1:]:
        if x - merged[-1] < cluster_tolerance:
            continue
        merged.append(x)
    if len(merged) > 1 and (merged[0] + 1.0) - merged[-1] < cluster_tolerance:
        merged.pop()
    return AubrySample(tuple(merged), 0.0, float(cluster_tolerance), violation)


def characteristic_to_csv(char: Characteristic, path) -> None:
    """Rows: step_index, lifted_position, velocity, momentum (last row has no step)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step_index", "lifted_position", "velocity", "momentum"])
        for k in range(len(char.lifted_positions)):
            step_idx = char.start_step + k
            if k < len(char.velocities):
                writer.writerow(
                    [step_idx, repr(char.lifted_positions[k]), repr(char.velocities[k]), repr(char.momenta[k])]
                )
            else:
                writer.writerow([step_idx, repr(char.lifted_positions[k]), "", ""])


def aubry_sample_to_json(sample: AubrySample) -> dict:
    return {
        "points": [float(p) for p in sample.points],
        "phase": sample.phase,
        "cluster_tolerance": sample.cluster_tolerance,
        "max_order_violation": sample.max_order_violation,
    }


def aubry_sample_write(sample: AubrySample, path) -> None:
    with open(path, "w") as fh:
        json.dump(aubry_sample_to_json(sample), fh, indent=2, sort_keys=True)
        fh.write("\n")
