"""Catalog of time-periodic convex Hamiltonians on R x T x R.

Families (all 1-periodic in t and in x, C2, superlinear in p):

    mechanical        H = p^2/2 + A cos(2 pi x) (1 + eps cos(2 pi t))
    tilted_quadratic  H = (p + c)^2 / 2
    quartic           H = p^4/4 + A cos(2 pi x) (1 + eps cos(2 pi t))
    rescaled          H = b H0(b t, x + a t, p) - a p   (integers a != 0, b >= 1)

Every spec carries an additive normalization lambda_shift which is subtracted
from the formula, so the working equation can be gauged to have critical value
zero.  The quartic family has H_pp = 3 p^2 = 0 at p = 0: strict convexity
fails pointwise there, and verify_convexity flags it.  It is kept as a
negative-control stress family; its Legendre transform uses a safeguarded
Newton solve because no convenient closed form for the maximizer is assumed.

The rescaled family implements the change of variables that turns a rational
rotation number a/b into rotation number zero: if u solves the equation for
H0 then u(b t, x + a t) solves it for the rescaled Hamiltonian, and both
periodicities survive because a and b are integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidRescale, NoConvergence
from .grid import wrap

MECHANICAL = "mechanical"
TILTED_QUADRATIC = "tilted_quadratic"
QUARTIC = "quartic"
RESCALED = "rescaled"

_TWO_PI = 2.0 * math.pi

# First-order residual tolerance for the Newton/bisection Legendre solve.
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 200


@dataclass(frozen=True)
class HamiltonianSpec:
    """A catalog Hamiltonian: base family, parameters, normalization, rescale.

    family is the base catalog family; rescale = (a, b) wraps it in the
    integer change of variables above (reported as effective family
    "rescaled").  lambda_shift is subtracted from the formula on evaluation.
    """

    family: str
    params: dict = field(default_factory=dict)
    lambda_shift: float = 0.0
    rescale: tuple | None = None

    def __post_init__(self):
        if self.family not in (MECHANICAL, TILTED_QUADRATIC, QUARTIC):
            raise ValueError(f"unknown family {self.family!r}")
        p = dict(self.params)
        if self.family in (MECHANICAL, QUARTIC):
            a = float(p.get("A", 0.0))
            eps = float(p.get("eps", 0.0))
            if a < 0.0:
                raise ValueError("potential amplitude A must be nonnegative")
            if not 0.0 <= eps < 1.0:
                raise ValueError("time-modulation depth eps must be in [0, 1)")
            p = {"A": a, "eps": eps}
        else:
            p = {"c": float(p.get("c", 0.0))}
        object.__setattr__(self, "params", p)
        if self.rescale is not None:
            a, b = self.rescale
            if int(b) != b or int(a) != a:
                raise InvalidRescale("rescale factors must be integers")
            if b < 1:
                raise InvalidRescale(f"rescale b must be a positive integer, got {b}")
            if a == 0:
                raise InvalidRescale("rescale a must be nonzero")
            object.__setattr__(self, "rescale", (int(a), int(b)))

    @property
    def effective_family(self) -> str:
        return RESCALED if self.rescale is not None else self.family

    def shifted_by(self, delta: float) -> "HamiltonianSpec":
        """Fold an additional constant into the normalization shift."""
        return replace(self, lambda_shift=self.lambda_shift + float(delta))


def mechanical(amplitude: float, modulation: float = 0.0, lambda_shift: float = 0.0) -> HamiltonianSpec:
    return HamiltonianSpec(MECHANICAL, {"A": amplitude, "eps": modulation}, lambda_shift)


def tilted(tilt: float, lambda_shift: float = 0.0) -> HamiltonianSpec:
    return HamiltonianSpec(TILTED_QUADRATIC, {"c": tilt}, lambda_shift)


def quartic(amplitude: float, modulation: float = 0.0, lambda_shift: float = 0.0) -> HamiltonianSpec:
    return HamiltonianSpec(QUARTIC, {"A": amplitude, "eps": modulation}, lambda_shift)


def rescale(spec: HamiltonianSpec, a: int, b: int) -> HamiltonianSpec:
    """Wrap spec in the integer change of variables H~ = b H(bt, x+at, p) - ap.

    The existing lambda_shift scales by b so the result evaluates exactly
    b * eval(spec, bt, x+at, p) - a*p.  Rescaling an already rescaled spec is
    rejected: the composition leaves the catalog.
    """
    if spec.rescale is not None:
        raise InvalidRescale("spec is already rescaled; composition is not supported")
    return HamiltonianSpec(spec.family, spec.params, b * spec.lambda_shift, (a, b))


# ---------------------------------------------------------------------------
# raw family formulas (no shift, no rescale); t, x already wrapped by callers

def _potential(family, params, t, x):
    if family == TILTED_QUADRATIC:
        return 0.0
    a = params["A"]
    eps = params["eps"]
    mod = 1.0 + eps * np.cos(_TWO_PI * t) if eps != 0.0 else 1.0
    return a * np.cos(_TWO_PI * x) * mod


def _potential_x(family, params, t, x):
    if family == TILTED_QUADRATIC:
        return 0.0
    a = params["A"]
    eps = params["eps"]
    mod = 1.0 + eps * np.cos(_TWO_PI * t) if eps != 0.0 else 1.0
    return -_TWO_PI * a * np.sin(_TWO_PI * x) * mod


def _formula_eval(family, params, t, x, p):
    if family == MECHANICAL:
        return 0.5 * p * p + _potential(family, params, t, x)
    if family == TILTED_QUADRATIC:
        q = p + params["c"]
        return 0.5 * q * q
    if family == QUARTIC:
        return 0.25 * p ** 4 + _potential(family, params, t, x)
    raise ValueError(family)


def _formula_partials(family, params, t, x, p):
    if family == MECHANICAL:
        return p, _potential_x(family, params, t, x), 1.0
    if family == TILTED_QUADRATIC:
        return p + params["c"], 0.0, 1.0
    if family == QUARTIC:
        return p ** 3, _potential_x(family, params, t, x), 3.0 * p * p
    raise ValueError(family)


def _kinetic_conjugate(family, params, v):
    """Velocity part of the Lagrangian, max_p(pv - kinetic(p)), vectorized."""
    v = np.asarray(v, dtype=float)
    if family == MECHANICAL:
        return 0.5 * v * v
    if family == TILTED_QUADRATIC:
        return 0.5 * v * v - params["c"] * v
    if family == QUARTIC:
        return 0.75 * np.abs(v) ** (4.0 / 3.0)
    raise ValueError(family)


def _solve_first_order(h_p, h_pp, v, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER):
    """Solve h_p(p) = v for nondecreasing h_p: Newton with bisection fallback.

    Returns (p, iterations).  Raises NoConvergence if the residual stays above
    tol, which signals a mis-specified Hamiltonian.
    """
    r = 1.0 + abs(v)
    lo, hi = -r, r
    for _ in range(200):
        if h_p(lo) <= v:
            break
        lo *= 2.0
    for _ in range(200):
        if h_p(hi) >= v:
            break
        hi *= 2.0
    p = 0.5 * (lo + hi)
    f = h_p(p) - v
    for it in range(1, max_iter + 1):
        if abs(f) <= tol:
            return p, it
        if f > 0.0:
            hi = p
        else:
            lo = p
        df = h_pp(p)
        took_newton = False
        if df > 0.0:
            cand = p - f / df
            if lo < cand < hi:
                p = cand
                took_newton = True
        if not took_newton:
            p = 0.5 * (lo + hi)
        f = h_p(p) - v
    if abs(f) <= tol:
        return p, max_iter
    raise NoConvergence(
        f"Legendre first-order solve stalled at residual {abs(f):.3e}",
        residual=abs(f),
        iterations=max_iter,
    )


def _formula_legendre(family, params, t, x, v):
    """(value, maximizer, iterations) of max_p(pv - formula H) at wrapped (t, x)."""
    if family == MECHANICAL:
        return 0.5 * v * v - _potential(family, params, t, x), v, 0
    if family == TILTED_QUADRATIC:
        c = params["c"]
        return 0.5 * v * v - c * v, v - c, 0
    if family == QUARTIC:
        p, iters = _solve_first_order(lambda q: q ** 3, lambda q: 3.0 * q * q, v)
        value = p * v - (0.25 * p ** 4 + _potential(family, params, t, x))
        return value, p, iters
    raise ValueError(family)


# ---------------------------------------------------------------------------
# public evaluation

def eval_h(spec: HamiltonianSpec, t, x, p):
    """H(t, x, p) minus the spec's lambda_shift.  Exact closed form."""
    tw = wrap(t)
    if spec.rescale is not None:
        a, b = spec.rescale
        inner = _formula_eval(spec.family, spec.params, wrap(b * tw), wrap(x + a * tw), p)
        return b * inner - a * p - spec.lambda_shift
    return _formula_eval(spec.family, spec.params, tw, wrap(x), p) - spec.lambda_shift


def partials(spec: HamiltonianSpec, t, x, p):
    """(H_p, H_x, H_pp) of the working Hamiltonian, exact closed forms."""
    tw = wrap(t)
    if spec.rescale is not None:
        a, b = spec.rescale
        hp, hx, hpp = _formula_partials(spec.family, spec.params, wrap(b * tw), wrap(x + a * tw), p)
        return b * hp - a, b * hx, b * hpp
    return _formula_partials(spec.family, spec.params, tw, wrap(x), p)


@dataclass(frozen=True)
class LegendreResult:
    """value = L(t, x, v); argmax_p attains pv - H(t,x,p) = value exactly."""

    value: float
    argmax_p: float
    iterations: int


def legendre(spec: HamiltonianSpec, t, x, v) -> LegendreResult:
    """Convex conjugate of the working Hamiltonian in the momentum slot.

    Closed form for the quadratic families; Newton with bisection fallback on
    the first-order condition H_p(p) = v for the quartic.  A rescaled spec
    routes through the inner family via the exact composition
    L(t, x, v) = b L0(b t, x + a t, (v + a)/b) + shift.
    """
    tw = wrap(t)
    if spec.rescale is not None:
        a, b = spec.rescale
        w = (v + a) / b
        val, pstar, iters = _formula_legendre(
            spec.family, spec.params, wrap(b * tw), wrap(x + a * tw), w
        )
        return LegendreResult(b * val + spec.lambda_shift, pstar, iters)
    val, pstar, iters = _formula_legendre(spec.family, spec.params, tw, wrap(x), v)
    return LegendreResult(val + spec.lambda_shift, pstar, iters)


def lagrangian_value(spec: HamiltonianSpec, t, x, v) -> float:
    """L(t, x, v) of the working Hamiltonian (legendre value only)."""
    return legendre(spec, t, x, v).value


# ---------------------------------------------------------------------------
# sampling checks and defaults

def weyl_samples(n: int, dims: int) -> np.ndarray:
    """Deterministic low-discrepancy points in [0,1)^dims (additive recurrence)."""
    irr = np.sqrt(np.array([2.0, 3.0, 5.0, 7.0, 11.0]))[:dims]
    k = np.arange(1, n + 1)[:, None]
    return np.mod(k * irr[None, :], 1.0)


def verify_convexity(spec: HamiltonianSpec, n_samples: int, p_range=(-3.0, 3.0)) -> float:
    """Minimum H_pp over a deterministic (t, x, p) sample.

    The sample always contains the p-interval endpoints and midpoint, so a
    family whose convexity degenerates at an isolated momentum (quartic at
    p = 0) is reliably flagged with a nonpositive return value.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    lo, hi = float(p_range[0]), float(p_range[1])
    pts = weyl_samples(n_samples, 3)
    triples = [(t, x, lo + s * (hi - lo)) for t, x, s in pts]
    triples += [(0.0, 0.0, lo), (0.0, 0.0, 0.5 * (lo + hi)), (0.0, 0.0, hi)]
    best = math.inf
    for t, x, p in triples:
        _, _, hpp = partials(spec, t, x, p)
        best = min(best, float(hpp))
    return best


def default_v_max(spec: HamiltonianSpec, p_bound: float = 2.0, margin: float = 1.25) -> float:
    """Velocity truncation: margin times max |H_p| over |p| <= p_bound.

    Minimizing curves of the catalog families have momenta of order one, so
    sampling H_p on a fixed momentum box encloses their speeds; the margin
    absorbs the discrete Lipschitz overshoot.  Override via configuration when
    a run needs a different box.
    """
    pts = weyl_samples(64, 2)
    ps = np.linspace(-p_bound, p_bound, 41)
    worst = 0.0
    for t, x in pts:
        hp, _, _ = partials(spec, t, x, ps)
        worst = max(worst, float(np.max(np.abs(hp))))
    return max(1.0, margin * worst)


# ---------------------------------------------------------------------------
# vectorized running cost for the evolution kernel

def feet_cost_evaluator(spec: HamiltonianSpec, feet: np.ndarray, velocities: np.ndarray):
    """Factory: callable t -> L(t, feet, v) as an (n_v, n_x) array.

    feet[j, i] is the departure point paired with velocities[j]; the factory
    precomputes everything time-independent (kinetic conjugate column, cosine
    tables at the feet) so the per-step work is a scalar-weighted fused
    update.  Values agree with legendre(spec, t, feet, v).value to rounding.
    """
    vels = np.asarray(velocities, dtype=float)
    shift = spec.lambda_shift
    if spec.rescale is not None:
        a, b = spec.rescale
        w = (vels + a) / b
        col = (b * _kinetic_conjugate(spec.family, spec.params, w) + shift)[:, None]
        amp = b * spec.params.get("A", 0.0)
        eps = spec.params.get("eps", 0.0)
        if spec.family == TILTED_QUADRATIC or amp == 0.0:
            const = np.broadcast_to(col, feet.shape).copy()
            return lambda t: const
        c2 = np.cos(_TWO_PI * feet)
        s2 = np.sin(_TWO_PI * feet)

        def cost(t):
            tw = wrap(t)
            phase = _TWO_PI * wrap(a * tw)
            spatial = c2 * math.cos(phase) - s2 * math.sin(phase)
            mod = 1.0 + eps * math.cos(_TWO_PI * wrap(b * tw))
            return col - (amp * mod) * spatial

        return cost

    col = (_kinetic_conjugate(spec.family, spec.params, vels) + shift)[:, None]
    amp = spec.params.get("A", 0.0)
    eps = spec.params.get("eps", 0.0)
    if spec.family == TILTED_QUADRATIC or amp == 0.0:
        const = np.broadcast_to(col, feet.shape).copy()
        return lambda t: const
    c2 = np.cos(_TWO_PI * feet)
    if eps == 0.0:
        const = col - amp * c2
        return lambda t: const

    def cost(t):
        mod = 1.0 + eps * math.cos(_TWO_PI * wrap(t))
        return col - (amp * mod) * c2

    return cost


# ---------------------------------------------------------------------------
# serialization

def spec_to_json(spec: HamiltonianSpec) -> dict:
    d = {
        "family": spec.family,
        "params": {k: float(v) for k, v in spec.params.items()},
        "lambda_shift": float(spec.lambda_shift),
        "rescale": None,
    }
    if spec.rescale is not None:
        d["rescale"] = {"a": spec.rescale[0], "b": spec.rescale[1]}
    return d


def spec_from_json(d: dict) -> HamiltonianSpec:
    rs = d.get("rescale")
    rescale_pair = (int(rs["a"]), int(rs["b"])) if rs else None
    return HamiltonianSpec(
        d["family"],
        dict(d.get("params", {})),
        float(d.get("lambda_shift", 0.0)),
        rescale_pair,
    )
