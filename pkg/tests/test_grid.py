import numpy as np
import pytest

from weakkam.errors import SizeMismatch
from weakkam.grid import (
    CircleGrid,
    TimeGrid,
    ValueField,
    circle_dist,
    discrete_lipschitz,
    interp,
    node_values,
    read_snapshots_csv,
    sup_dist,
    wrap,
    write_snapshots_csv,
)


def test_wrap_examples():
    assert wrap(1.25) == 0.25
    assert wrap(-0.1) == pytest.approx(0.9, abs=1e-15)
    assert wrap(0.0) == 0.0
    assert 0.0 <= wrap(-1e-18) < 1.0  # must not round up to 1.0


def test_circle_dist_examples():
    assert circle_dist(0.1, 0.9) == pytest.approx(0.2, abs=1e-15)
    assert circle_dist(0.5, 0.5) == 0.0
    assert circle_dist(0.0, 0.5) == 0.5


def test_grid_bounds():
    with pytest.raises(ValueError):
        CircleGrid(4)
    with pytest.raises(ValueError):
        TimeGrid(2)
    g = CircleGrid(8)
    assert g.dx == 0.125
    assert np.all(g.nodes >= 0.0) and np.all(g.nodes < 1.0)
    assert len(np.unique(g.nodes)) == 8


def test_value_field_immutable_and_finite():
    f = ValueField(np.arange(8.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        ValueField(np.array([np.nan] * 8))


def test_interp_constant_field():
    f = ValueField(np.full(16, 3.25))
    for x in [0.0, 0.111, 0.999, -2.3]:
        assert interp(f, x) == 3.25


def test_interp_exact_at_nodes():
    g = CircleGrid(200)
    f = node_values(g, lambda x: np.sin(2 * np.pi * x))
    for i in [0, 1, 57, 199]:
        assert interp(f, g.nodes[i]) == f.values[i]


def test_interp_midpoint_is_mean():
    g = CircleGrid(8)
    f = ValueField(np.arange(8.0))
    mid = (g.nodes[2] + g.nodes[3]) / 2
    assert interp(f, mid) == pytest.approx(2.5, abs=1e-14)


def test_interp_monotone_and_nonexpansive():
    rng = np.random.RandomState(3)
    g = CircleGrid(32)
    for _ in range(50):
        a = rng.randn(32)
        f = ValueField(a)
        h = ValueField(a + np.abs(rng.randn(32)))
        xs = rng.uniform(-1, 2, size=40)
        fi, hi = interp(f, xs), interp(h, xs)
        assert np.all(fi <= hi)
        other = ValueField(rng.randn(32))
        d = sup_dist(f, other)
        assert np.all(np.abs(fi - interp(other, xs)) <= d + 1e-12)


def test_interp_commutes_with_constants():
    rng = np.random.RandomState(4)
    f = ValueField(rng.randn(32))
    for _ in range(20):
        c = rng.uniform(-5, 5)
        x = rng.uniform(0, 1)
        a = interp(f.shifted(c), x)
        b = interp(f, x) + c
        assert abs(a - b) <= np.spacing(abs(b) + 1.0)


def test_sup_dist():
    f = ValueField(np.zeros(8))
    assert sup_dist(f, f) == 0.0
    assert sup_dist(f, f.shifted(2.0)) == 2.0
    g = node_values(CircleGrid(8), lambda x: np.cos(2 * np.pi * x))
    assert sup_dist(f, g) == 1.0  # attained at x = 0
    with pytest.raises(SizeMismatch):
        sup_dist(f, ValueField(np.zeros(16)))


def test_discrete_lipschitz_includes_wrap_pair():
    f = ValueField(np.array([0.0] * 15 + [1.0]))
    assert discrete_lipschitz(f) == 16.0


def test_snapshots_csv_roundtrip(tmp_path):
    rng = np.random.RandomState(5)
    fields = [ValueField(rng.randn(12), 7 * k) for k in range(3)]
    path = tmp_path / "snap.csv"
    write_snapshots_csv(path, fields)
    back = read_snapshots_csv(path)
    assert len(back) == 3
    for a, b in zip(fields, back):
        assert a.step_index == b.step_index
        assert np.array_equal(a.values, b.values)
