"""Numerical weak-KAM toolkit for time-periodic convex Hamilton-Jacobi
equations on the circle: Lax-Oleinik evolution on a periodic grid, critical
value, periodic solutions, rotation numbers, Aubry-set samples, and a
convergence verification harness."""

from .errors import (
    GridMismatch,
    InsufficientData,
    InvalidRescale,
    NoConvergence,
    SizeMismatch,
    WeakKamError,
    WindowExceeded,
)
from .grid import CircleGrid, TimeGrid, ValueField, circle_dist, interp, sup_dist, wrap
from .hamiltonian import (
    HamiltonianSpec,
    LegendreResult,
    default_v_max,
    eval_h,
    legendre,
    mechanical,
    partials,
    quartic,
    rescale,
    spec_from_json,
    spec_to_json,
    tilted,
    verify_convexity,
)
from .operator import (
    EvolutionTrace,
    FootTable,
    VelocityGrid,
    evolve,
    period_map,
    step,
)
from .spectrum import (
    LambdaEstimate,
    PeriodicSolution,
    estimate_lambda,
    liminf_solution,
    periodic_solution,
)
from .characteristics import (
    AubrySample,
    Characteristic,
    aubry_sample,
    backtrack,
    calibration_defect,
    gradient_identity_check,
    monotone_difference,
    rotation_number,
)
from .convergence import (
    ConvergenceReport,
    HarnessConfig,
    detect_period,
    rational_reduce,
    verify_theorem,
)

__version__ = "0.1.0"
