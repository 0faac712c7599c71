"""Seeded initial data that reproduces bit-exactly across implementations.

The generator is a 64-bit linear congruential recurrence with Knuth's MMIX
constants,

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64,

and uniforms are the top 53 bits scaled by 2^-53.  Random initial fields are
low-order trigonometric polynomials with LCG-drawn coefficients, so they are
smooth, periodic and Lipschitz with a controllable constant.
"""

from __future__ import annotations

import numpy as np

from .grid import CircleGrid, ValueField

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK = (1 << 64) - 1


class Lcg:
    """Deterministic 64-bit linear congruential generator."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_uint64(self) -> int:
        self.state = (LCG_MULTIPLIER * self.state + LCG_INCREMENT) & _MASK
        return self.state

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        u = (self.next_uint64() >> 11) * 2.0 ** -53
        return lo + u * (hi - lo)


def random_field(grid: CircleGrid, seed: int, amplitude: float = 1.0, n_modes: int = 8) -> ValueField:
    """Random Lipschitz initial data: sum_k (a_k cos + b_k sin)(2 pi k x) / k.

    Coefficients are LCG uniforms in [-1, 1]; the 1/k weights keep the slope
    of order amplitude.  Identical (seed, grid, amplitude) reproduce the same
    field bit for bit.
    """
    gen = Lcg(seed)
    x = grid.nodes
    vals = np.zeros(grid.n_x)
    for k in range(1, n_modes + 1):
        a = gen.uniform(-1.0, 1.0)
        b = gen.uniform(-1.0, 1.0)
        vals += (a * np.cos(2.0 * np.pi * k * x) + b * np.sin(2.0 * np.pi * k * x)) / k
    return ValueField(amplitude * vals)


def initial_field(grid: CircleGrid, kind: str, seed: int = 1, amplitude: float = 1.0) -> ValueField:
    """Named initial conditions used by the command line: zero, cosine, random."""
    if kind == "zero":
        return ValueField(np.zeros(grid.n_x))
    if kind == "cosine":
        return ValueField(amplitude * np.cos(2.0 * np.pi * grid.nodes))
    if kind == "random":
        return random_field(grid, seed, amplitude)
    raise ValueError(f"unknown initial condition {kind!r}")
