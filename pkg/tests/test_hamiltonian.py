import numpy as np
import pytest

import weakkam.hamiltonian as H
from weakkam.errors import InvalidRescale


def fine_grid_conjugate(spec, t, x, v, p_lo=-6.0, p_hi=6.0, n=2_000_001):
    """Independent Legendre oracle: brute-force scan of p v - H over a fine grid."""
    p = np.linspace(p_lo, p_hi, n)
    vals = p * v - H.eval_h(spec, t, x, p)
    j = int(np.argmax(vals))
    return float(vals[j]), float(p[j])


def numeric_double_conjugate(spec, t, x, p, v_scale=10.0):
    """Second numerical transform: maximize p v - L(v) using only LegendreResult
    outputs (bisection on the maximizer's first-order condition)."""
    lo, hi = -v_scale, v_scale
    while H.legendre(spec, t, x, lo).argmax_p > p:
        lo *= 2.0
    while H.legendre(spec, t, x, hi).argmax_p < p:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if H.legendre(spec, t, x, mid).argmax_p < p:
            lo = mid
        else:
            hi = mid
    v = 0.5 * (lo + hi)
    return p * v - H.legendre(spec, t, x, v).value


def sample_points(n=100):
    pts = H.weyl_samples(n, 3)
    return [(t, x, -3.0 + 6.0 * s) for t, x, s in pts]


def test_eval_examples():
    assert H.eval_h(H.mechanical(0.0), 0.3, 0.7, 2.0) == 2.0
    assert H.eval_h(H.tilted(1.0), 0.1, 0.2, -1.0) == 0.0
    assert H.eval_h(H.mechanical(1.0), 0.0, 0.0, 0.0) == 1.0


def test_eval_subtracts_shift():
    spec = H.mechanical(0.0, lambda_shift=-1.0)
    assert H.eval_h(spec, 0.0, 0.0, 0.0) == 1.0


def test_partials_examples():
    hp, hx, hpp = H.partials(H.mechanical(0.0), 0.2, 0.4, 3.0)
    assert (hp, hx, hpp) == (3.0, 0.0, 1.0)
    hp, hx, hpp = H.partials(H.tilted(0.5), 0.0, 0.0, 0.0)
    assert (hp, hx, hpp) == (0.5, 0.0, 1.0)


@pytest.mark.parametrize(
    "spec",
    [
        H.mechanical(1.3, 0.4),
        H.tilted(0.7),
        H.quartic(0.8, 0.2),
        H.rescale(H.tilted(0.5), 1, 2),
        H.rescale(H.mechanical(0.9, 0.3), -1, 3),
    ],
)
def test_partials_match_finite_differences(spec):
    h = 1e-5
    for t, x, p in sample_points(100):
        hp, hx, hpp = H.partials(spec, t, x, p)
        fd_p = (H.eval_h(spec, t, x, p + h) - H.eval_h(spec, t, x, p - h)) / (2 * h)
        fd_x = (H.eval_h(spec, t, x + h, p) - H.eval_h(spec, t, x - h, p)) / (2 * h)
        fd_pp = (H.partials(spec, t, x, p + h)[0] - H.partials(spec, t, x, p - h)[0]) / (2 * h)
        scale = 1.0 + abs(hp) + abs(hx) + abs(hpp)
        assert abs(hp - fd_p) <= 1e-6 * scale
        assert abs(hx - fd_x) <= 1e-6 * scale
        assert abs(hpp - fd_pp) <= 1e-6 * scale


def test_periodicity_exact():
    # dyadic arguments so t + 1 and x + 1 are exact floats
    specs = [H.mechanical(1.0, 0.5), H.quartic(0.7, 0.25), H.rescale(H.mechanical(1.0, 0.5), 1, 2)]
    for spec in specs:
        for t in [0.0, 0.25, 0.625]:
            for x in [0.125, 0.75]:
                for p in [-1.5, 0.5]:
                    base = H.eval_h(spec, t, x, p)
                    assert H.eval_h(spec, t + 1.0, x, p) == base
                    assert H.eval_h(spec, t, x + 1.0, p) == base


def test_legendre_free_particle():
    res = H.legendre(H.mechanical(0.0), 0.0, 0.0, 2.0)
    assert res.value == 2.0
    assert res.argmax_p == 2.0


def test_legendre_quartic_frozen_value():
    # oracle: fine p-grid scan of p*v - p^4/4 gives 0.75 at p = 1 for v = 1
    spec = H.quartic(0.0)
    scan_val, scan_p = fine_grid_conjugate(spec, 0.0, 0.0, 1.0)
    assert scan_val == pytest.approx(0.75, abs=1e-6)
    res = H.legendre(spec, 0.0, 0.0, 1.0)
    assert res.value == pytest.approx(0.75, abs=1e-12)
    assert res.argmax_p == pytest.approx(1.0, abs=1e-6)
    assert abs(res.value - scan_val) <= 1e-6


def test_legendre_tilted_frozen_value():
    # analytic conjugate L(v) = v^2/2 - c v; fine-grid scan confirms
    spec = H.tilted(1.0)
    scan_val, scan_p = fine_grid_conjugate(spec, 0.0, 0.0, 0.0)
    assert scan_val == pytest.approx(0.0, abs=1e-10)
    res = H.legendre(spec, 0.0, 0.0, 0.0)
    assert res.value == 0.0
    assert res.argmax_p == -1.0
    assert abs(scan_p - res.argmax_p) <= 1e-5


@pytest.mark.parametrize(
    "spec",
    [H.mechanical(1.1, 0.3), H.tilted(-0.4), H.quartic(0.6, 0.1), H.rescale(H.tilted(0.5), 1, 2)],
)
def test_fenchel_young(spec):
    for t, x, p in sample_points(60):
        hp, _, _ = H.partials(spec, t, x, p)
        h_val = H.eval_h(spec, t, x, p)
        for v in [-2.0, 0.3, hp]:
            res = H.legendre(spec, t, x, v)
            assert p * v <= h_val + res.value + 1e-10
        # equality exactly at v = H_p(t, x, p)
        res = H.legendre(spec, t, x, hp)
        assert abs(p * hp - (h_val + res.value)) <= 1e-9 * (1.0 + abs(h_val))


def test_legendre_first_order_condition():
    for spec in [H.mechanical(1.0, 0.2), H.quartic(0.5), H.rescale(H.quartic(0.5), 2, 3)]:
        for t, x, s in H.weyl_samples(40, 3):
            v = -2.5 + 5.0 * s
            res = H.legendre(spec, t, x, v)
            hp, _, _ = H.partials(spec, t, x, res.argmax_p)
            assert abs(hp - v) <= 1e-10 * (1.0 + abs(v))
            # Fenchel-Young equality at the returned maximizer
            gap = res.argmax_p * v - H.eval_h(spec, t, x, res.argmax_p) - res.value
            assert abs(gap) <= 1e-10 * (1.0 + abs(res.value))


def test_legendre_involution_quadratic_families():
    for spec in [H.mechanical(1.2, 0.4), H.tilted(0.8)]:
        worst = 0.0
        for t, x, p in sample_points(100):
            h2 = numeric_double_conjugate(spec, t, x, p)
            worst = max(worst, abs(h2 - H.eval_h(spec, t, x, p)))
        assert worst <= 1e-8


def test_legendre_involution_quartic():
    spec = H.quartic(0.9, 0.3)
    worst = 0.0
    for t, x, s in H.weyl_samples(100, 3):
        p = np.sign(s - 0.5) * (0.1 + 2.9 * abs(2 * s - 1))
        h2 = numeric_double_conjugate(spec, t, x, p)
        worst = max(worst, abs(h2 - H.eval_h(spec, t, x, p)))
    assert worst <= 1e-6


def test_verify_convexity_examples():
    assert H.verify_convexity(H.mechanical(2.0, 0.5), 50) == 1.0
    assert H.verify_convexity(H.tilted(0.3), 50) == 1.0
    assert H.verify_convexity(H.quartic(1.0), 50, (-2.0, 2.0)) == 0.0  # flagged non-strict
    assert H.verify_convexity(H.rescale(H.tilted(0.5), 1, 2), 50) == 2.0


def test_rescale_defining_formula_bitwise():
    inner = H.tilted(0.5, lambda_shift=0.125)
    rs = H.rescale(inner, 1, 2)
    a, b = 1, 2
    inner0 = H.tilted(0.5)  # shift moved into rs.lambda_shift
    rng = np.random.RandomState(8)
    for _ in range(100):
        t, x = rng.uniform(0, 1), rng.uniform(0, 1)
        p = rng.uniform(-3, 3)
        expected = b * H.eval_h(inner0, b * t, x + a * t, p) - a * p - rs.lambda_shift
        assert H.eval_h(rs, t, x, p) == expected


def test_rescale_unit_factors_is_galilean_shift():
    inner = H.mechanical(1.0, 0.5)
    rs = H.rescale(inner, 1, 1)
    for t in [0.0, 0.25, 0.375]:
        for x in [0.1, 0.6]:
            for p in [-1.0, 2.0]:
                assert H.eval_h(rs, t, x, p) == H.eval_h(inner, t, x + t, p) - p


def test_rescale_shift_scaling_and_validation():
    assert H.rescale(H.tilted(0.5, lambda_shift=0.125), 1, 2).lambda_shift == 0.25
    with pytest.raises(InvalidRescale):
        H.rescale(H.tilted(0.5), 1, 0)
    with pytest.raises(InvalidRescale):
        H.rescale(H.tilted(0.5), 0, 2)
    with pytest.raises(InvalidRescale):
        H.rescale(H.rescale(H.tilted(0.5), 1, 2), 1, 2)


def test_legendre_rescaled_routes_through_inner():
    rs = H.rescale(H.quartic(0.4, 0.1), 2, 3)
    for v in [-1.7, 0.0, 2.2]:
        res = H.legendre(rs, 0.3, 0.6, v)
        hp, _, _ = H.partials(rs, 0.3, 0.6, res.argmax_p)
        assert abs(hp - v) <= 1e-10


def test_spec_json_roundtrip():
    specs = [
        H.mechanical(1.0, 0.5, lambda_shift=1.0),
        H.tilted(-0.25),
        H.rescale(H.quartic(0.7, 0.2), -2, 5),
    ]
    for spec in specs:
        assert H.spec_from_json(H.spec_to_json(spec)) == spec


def test_spec_validation():
    with pytest.raises(ValueError):
        H.mechanical(-1.0)
    with pytest.raises(ValueError):
        H.mechanical(1.0, 1.0)
    with pytest.raises(ValueError):
        H.HamiltonianSpec("cubic", {})


def test_default_v_max_covers_pendulum_speeds():
    assert H.default_v_max(H.mechanical(1.0)) >= 2.0


def test_feet_cost_evaluator_matches_legendre():
    vels = np.linspace(-2.0, 2.0, 9)
    feet = H.weyl_samples(9 * 7, 1).reshape(9, 7)
    for spec in [
        H.mechanical(1.0, 0.5),
        H.mechanical(1.0),
        H.tilted(0.5, lambda_shift=0.125),
        H.quartic(0.8, 0.3),
        H.rescale(H.mechanical(1.0, 0.5), 1, 2),
        H.rescale(H.tilted(0.5), 1, 2),
    ]:
        cost = H.feet_cost_evaluator(spec, feet, vels)
        for t in [0.01, 0.37]:
            table = cost(t)
            for j in [0, 4, 8]:
                for i in [0, 3, 6]:
                    ref = H.legendre(spec, t, feet[j, i], vels[j]).value
                    assert abs(table[j, i] - ref) <= 1e-11 * (1.0 + abs(ref))
