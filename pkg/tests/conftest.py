import numpy as np
import pytest

from weakkam.grid import CircleGrid, TimeGrid, ValueField
from weakkam.operator import VelocityGrid
import weakkam.hamiltonian as H
import weakkam.spectrum as spectrum


def grids(n_x, m_t, v_max, n_v):
    return CircleGrid(n_x), TimeGrid(m_t), VelocityGrid(v_max, n_v)


def zero_field(n_x, step_index=0):
    return ValueField(np.zeros(n_x), step_index)


@pytest.fixture(scope="session")
def pendulum_solution():
    """Periodic solution of H = p^2/2 + cos(2 pi x) at (n_x, m_t) = (200, 50),
    with the known critical value 1 folded in."""
    cg, tg, vg = grids(200, 50, 2.5, 129)
    spec = H.mechanical(1.0, lambda_shift=1.0)
    sol = spectrum.periodic_solution(spec, cg, tg, vg, zero_field(200), tol=1e-11, max_periods=300)
    return spec, cg, tg, vg, sol


def pendulum_analytic_profile(x):
    """Stationary profile of the autonomous pendulum cell problem, gauge
    min = 0 at the potential maximum x = 0: antiderivative of 2|sin(pi x)|
    rising on [0, 1/2], mirrored on [1/2, 1] with the admissible corner at 1/2."""
    x = np.asarray(x)
    left = (2.0 / np.pi) * (1.0 - np.cos(np.pi * x))
    right = (2.0 / np.pi) * (1.0 - np.cos(np.pi * (1.0 - x)))
    return np.where(x <= 0.5, left, right)
