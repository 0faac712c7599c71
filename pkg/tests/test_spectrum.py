import numpy as np
import pytest

import weakkam.hamiltonian as H
import weakkam.spectrum as S
from weakkam.errors import InsufficientData, NoConvergence
from weakkam.grid import ValueField, sup_dist
from weakkam.initial_data import random_field
from weakkam.operator import evolve, period_map
from conftest import grids, pendulum_analytic_profile, zero_field


def test_lambda_exact_constant_hamiltonian():
    cg, tg, vg = grids(64, 16, 2.0, 33)
    spec = H.mechanical(0.0, lambda_shift=-1.0)  # working H = p^2/2 + 1
    trace = evolve(zero_field(64), spec, cg, tg, vg, 10, window=1)
    est = S.estimate_lambda(trace, 0.3)
    assert abs(est.value - 1.0) <= 1e-12
    assert est.dispersion <= 1e-12
    assert est.method == S.PER_PERIOD_DRIFT


def test_lambda_tilted_quarter_squared():
    cg, tg, vg = grids(400, 50, 2.0, 201)
    trace = evolve(random_field(cg, seed=3), H.tilted(0.5), cg, tg, vg, 30, window=1)
    est = S.estimate_lambda(trace, 0.5)
    assert abs(est.value - 0.125) <= 1e-3


def test_lambda_methods_agree():
    cg, tg, vg = grids(128, 32, 2.5, 65)
    trace = evolve(random_field(cg, seed=4), H.mechanical(1.0, 0.5), cg, tg, vg, 40, window=1)
    drift = S.estimate_lambda(trace, 0.5)
    lta = S.estimate_lambda(trace, 0.5, method=S.LONG_TIME_AVERAGE)
    assert abs(drift.value - lta.value) <= max(1e-3, 2.0 * drift.dispersion)


def test_lambda_independent_of_initial_condition():
    cg, tg, vg = grids(128, 32, 2.5, 65)
    spec = H.mechanical(1.0, 0.5)
    estimates = []
    for seed in range(5):
        u0 = random_field(cg, seed=50 + seed, amplitude=0.5 + seed * 0.4)
        trace = evolve(u0, spec, cg, tg, vg, 40, window=1)
        estimates.append(S.estimate_lambda(trace, 0.5))
    disp = max(e.dispersion for e in estimates)
    vals = [e.value for e in estimates]
    assert max(vals) - min(vals) <= 2.0 * disp + 1e-12


def test_lambda_insufficient_data():
    cg, tg, vg = grids(64, 16, 2.0, 33)
    trace = evolve(zero_field(64), H.mechanical(0.0), cg, tg, vg, 8, window=1)
    with pytest.raises(InsufficientData):
        S.estimate_lambda(trace, 0.5)
    long_trace = evolve(zero_field(64), H.mechanical(0.0), cg, tg, vg, 10, window=1)
    with pytest.raises(InsufficientData):
        S.estimate_lambda(long_trace, 0.9)  # only 1 post-burn-in period


def test_periodic_solution_constants_are_fixed():
    cg, tg, vg = grids(64, 16, 2.0, 33)
    sol = S.periodic_solution(H.mechanical(0.0), cg, tg, vg, ValueField(np.full(64, 7.0)))
    assert np.all(sol.phase0.values == 0.0)  # normalized gauge
    assert sol.residual <= 1e-12
    assert len(sol.snapshots) == tg.m_t + 1


def test_periodic_solution_pendulum_matches_analytic(pendulum_solution):
    spec, cg, tg, vg, sol = pendulum_solution
    phi = pendulum_analytic_profile(cg.nodes)
    assert np.abs(sol.phase0.values - phi).max() <= 3e-2
    assert sol.residual <= 1e-11  # declared tolerance is a postcondition


def test_periodic_solution_no_convergence_reports_residual():
    cg, tg, vg = grids(128, 32, 2.0, 129)
    # near-irrational tilt flattens slowly; 5 periods cannot reach 1e-9
    with pytest.raises(NoConvergence) as err:
        S.periodic_solution(
            H.tilted(0.618, lambda_shift=0.618 ** 2 / 2), cg, tg, vg,
            random_field(cg, seed=6), tol=1e-9, max_periods=5,
        )
    assert err.value.residual is not None and err.value.residual > 1e-9


def test_liminf_fixed_point_returns_it(pendulum_solution):
    spec, cg, tg, vg, sol = pendulum_solution
    trace = evolve(sol.phase0, spec, cg, tg, vg, 20, window=1)
    lim = S.liminf_solution(trace, 0.0)
    assert sup_dist(lim.phase0, sol.phase0) <= 1e-9
    assert lim.residual <= 1e-9


def test_liminf_free_particle_constant():
    cg, tg, vg = grids(128, 32, 2.0, 161)
    u0 = ValueField(np.cos(2 * np.pi * cg.nodes))
    trace = evolve(u0, H.mechanical(0.0), cg, tg, vg, 40, window=1)
    lim = S.liminf_solution(trace, 0.0)
    vals = lim.phase0.values
    assert vals.max() - vals.min() <= 1e-2


def test_liminf_agrees_with_power_iteration(pendulum_solution):
    spec, cg, tg, vg, sol = pendulum_solution
    trace = evolve(zero_field(200), spec, cg, tg, vg, 30, window=1)
    lim = S.liminf_solution(trace, 0.0)
    diff = lim.phase0.values - sol.phase0.values
    assert diff.max() - diff.min() <= 5e-2
    with pytest.raises(InsufficientData):
        S.liminf_solution(evolve(zero_field(200), spec, cg, tg, vg, 10, window=1), 0.0)


def test_fixed_point_property_survives_reload(tmp_path, pendulum_solution):
    spec, cg, tg, vg, sol = pendulum_solution
    header = tmp_path / "solution.json"
    csv_path = tmp_path / "solution_snapshots.csv"
    S.save_periodic_solution(sol, spec, cg, tg, header, csv_path)
    loaded, spec2, n_x, m_t = S.load_periodic_solution(header)
    assert spec2 == spec and (n_x, m_t) == (200, 50)
    defect = S.fixed_point_defect(loaded, spec2, cg, tg, vg)
    assert defect <= max(1e-10, 2.0 * sol.residual)


def test_rescaled_lambda_consistency():
    # lambda scales by b under the change of variables; after folding, the
    # rescaled working equation has drift below tolerance
    cg, tg, vg = grids(128, 32, 5.0, 129)
    rs = H.rescale(H.tilted(0.5), 1, 2)
    trace = evolve(random_field(cg, seed=8), rs, cg, tg, vg, 30, window=1)
    est = S.estimate_lambda(trace, 0.5)
    assert abs(est.value - 2.0 * 0.125) <= 1e-6
    folded = rs.shifted_by(est.value)
    trace2 = evolve(random_field(cg, seed=8), folded, cg, tg, vg, 30, window=1)
    est2 = S.estimate_lambda(trace2, 0.5)
    assert abs(est2.value) <= 1e-9


def test_period_map_drift_matches_shift_exactly():
    # adding a constant to the running cost shifts the period map by it
    cg, tg, vg = grids(64, 16, 2.0, 33)
    u = random_field(cg, seed=9)
    base, _ = period_map(u, H.mechanical(1.0), cg, tg, vg)
    shifted, _ = period_map(u, H.mechanical(1.0, lambda_shift=0.25), cg, tg, vg)
    gap = shifted.values - base.values
    assert np.abs(gap - 0.25).max() <= 1e-12
