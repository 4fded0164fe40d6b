"""Reproducible sample clouds.

All random draws go through counter-based Philox generators keyed by
(seed, stream), so any sweep can be chunked or parallelized without
changing the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distance import cancellation_exponent
from .groups import GroupParams, block_norms_sq_flat

__all__ = [
    "CloudSpec",
    "philox",
    "uniform_box",
    "ball_bounding_box",
    "kernel_feasible_mask",
]


@dataclass(frozen=True)
class CloudSpec:
    """Uniform box cloud: |x|,|y| <= z_halfwidth, |t| <= t_halfwidth."""

    count: int
    z_halfwidth: float
    t_halfwidth: float
    seed: int

    def __post_init__(self):
        if self.count < 1 or self.z_halfwidth <= 0 or self.t_halfwidth <= 0:
            raise ValueError("invalid cloud spec")


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, stream & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def uniform_box(params: GroupParams, spec: CloudSpec, stream: int = 0) -> np.ndarray:
    """Uniform flat coordinates in the spec box, shape (count, 2n+1)."""
    rng = philox(spec.seed, stream)
    out = np.empty((spec.count, params.dim))
    out[:, : 2 * params.n] = rng.uniform(
        -spec.z_halfwidth, spec.z_halfwidth, size=(spec.count, 2 * params.n)
    )
    out[:, 2 * params.n] = rng.uniform(-spec.t_halfwidth, spec.t_halfwidth, size=spec.count)
    return out


def ball_bounding_box(params: GroupParams):
    """(z_halfwidth, t_halfwidth) of a box containing the unit ball.

    Inside the ball |z| < 1 coordinate-wise, and |t| <= d^2/pi plus the
    boundary-branch correction sum a_j |cot(a_j pi)| |z_j|^2.
    """
    t_half = 1.0 / math.pi
    for aj in params.a[:-1]:
        t_half += aj * abs(math.cos(aj * math.pi) / math.sin(aj * math.pi))
    return 1.0, t_half * 1.0001


def kernel_feasible_mask(params: GroupParams, coords, h: float = 1.0, budget: float = 25.0):
    """Points where kernel quadrature keeps enough precision: the
    oscillatory cancellation (d^2 - |z|^2)/(4h) stays under `budget`."""
    coords = np.asarray(coords, dtype=float)
    zsq = block_norms_sq_flat(params, coords)
    return cancellation_exponent(params, zsq, coords[..., -1], h) <= budget
