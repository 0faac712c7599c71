"""Operator invariant suite: structural properties checked on seeded data.

The checks mirror what the evolution step must preserve exactly (monotonicity,
nonexpansiveness, determinism), up to rounding (constant equivariance), or
uniformly in the initial data (the discrete Lipschitz bound after one period).
The suite is deterministic: fields come from the documented LCG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CircleGrid, TimeGrid, ValueField, discrete_lipschitz, sup_dist
from .hamiltonian import HamiltonianSpec, mechanical
from .initial_data import Lcg, random_field
from .operator import StepKernel, VelocityGrid, discrete_lipschitz_bound, evolve, period_map

# Per-step rounding allowance for constant equivariance, in ulps of the field
# scale; one period accumulates at most m_t times this.
EQUIVARIANCE_ULPS_PER_STEP = 2.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _pairs(grid: CircleGrid, n_pairs: int, seed: int):
    gen = Lcg(seed)
    for k in range(n_pairs):
        f = random_field(grid, seed + 2 * k + 1)
        g = random_field(grid, seed + 2 * k + 2)
        c = gen.uniform(-3.0, 3.0)
        yield f, g, c


def run_operator_invariants(
    spec: HamiltonianSpec | None = None,
    n_x: int = 128,
    m_t: int = 32,
    n_v: int = 65,
    v_max: float = 2.5,
    n_pairs: int = 50,
    seed: int = 2024,
) -> list:
    """Run the invariant suite; returns a list of CheckResult."""
    if spec is None:
        spec = mechanical(1.0, 0.5)
    cgrid, tgrid, vgrid = CircleGrid(n_x), TimeGrid(m_t), VelocityGrid(v_max, n_v)
    kernel = StepKernel(spec, cgrid, tgrid, vgrid)
    results = []

    mono_viol = 0
    equi_viol = 0
    equi_worst = 0.0
    nonexp_viol = 0
    for f, g, c in _pairs(cgrid, n_pairs, seed):
        upper = ValueField(np.maximum(f.values, g.values))
        pf, _ = period_map(f, spec, cgrid, tgrid, vgrid, kernel=kernel)
        pg, _ = period_map(g, spec, cgrid, tgrid, vgrid, kernel=kernel)
        pu, _ = period_map(upper, spec, cgrid, tgrid, vgrid, kernel=kernel)
        if np.any(pf.values > pu.values):
            mono_viol += 1
        pfc, _ = period_map(f.shifted(c), spec, cgrid, tgrid, vgrid, kernel=kernel)
        scale = np.spacing(np.abs(f.values).max() + abs(c) + 1.0)
        drift = np.abs(pfc.values - (pf.values + c)).max() / scale
        equi_worst = max(equi_worst, drift)
        if drift > EQUIVARIANCE_ULPS_PER_STEP * m_t:
            equi_viol += 1
        if sup_dist(pf, pg) > sup_dist(f, g):
            nonexp_viol += 1

    results.append(
        CheckResult("monotonicity", mono_viol == 0, f"{mono_viol} violations over {n_pairs} ordered pairs")
    )
    results.append(
        CheckResult(
            "constant_equivariance",
            equi_viol == 0,
            f"worst drift {equi_worst:.1f} ulp, budget {EQUIVARIANCE_ULPS_PER_STEP * m_t:.0f} ulp per period",
        )
    )
    results.append(
        CheckResult("nonexpansiveness", nonexp_viol == 0, f"{nonexp_viol} violations over {n_pairs} pairs")
    )

    bound = discrete_lipschitz_bound(spec, cgrid, tgrid, vgrid)
    worst_lip = 0.0
    amplitudes = [0.0] + [10.0 ** (3.0 * k / 18.0) for k in range(19)]  # up to 1e3
    for k, amp in enumerate(amplitudes):
        u0 = random_field(cgrid, seed + 1000 + k, amplitude=amp)
        tr = evolve(u0, spec, cgrid, tgrid, vgrid, 1, window=1)
        worst_lip = max(worst_lip, discrete_lipschitz(tr.final))
    results.append(
        CheckResult(
            "lipschitz_compactness",
            worst_lip <= bound,
            f"worst slope {worst_lip:.3f} after one period vs bound {bound:.3f}, inputs up to slope 1e3",
        )
    )

    u0 = random_field(cgrid, seed + 5000)
    tr1 = evolve(u0, spec, cgrid, tgrid, vgrid, 2, window=2)
    tr2 = evolve(u0, spec, cgrid, tgrid, vgrid, 2, window=2)
    same = all(
        np.array_equal(a.values, b.values) for a, b in zip(tr1.snapshots, tr2.snapshots)
    ) and all(
        np.array_equal(a.argmin_velocity, b.argmin_velocity)
        for a, b in zip(tr1.foot_tables, tr2.foot_tables)
    )
    results.append(CheckResult("determinism", same, "two identical runs compared bitwise"))
    return results


def main() -> int:
    """Print one line per check; exit 0 if all pass, 4 otherwise."""
    results = run_operator_invariants()
    ok = True
    for r in results:
        print(f"{'OK  ' if r.passed else 'FAIL'} {r.name}: {r.detail}")
        ok = ok and r.passed
    return 0 if ok else 4


if __name__ == "__main__":
    raise SystemExit(main())
