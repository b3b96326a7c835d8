"""Stochastic per-coordinate quantizer.

A vector y with ||y||_2 <= r is quantized coordinate-wise to an overall
accuracy of eps: the interval [-r, r] is split into

    p = ceil(2 * r * sqrt(d) / eps)

equal bins with endpoints c_w = r * (2w/p - 1), w = 0..p, and each
coordinate is rounded to one of the two neighbouring endpoints with
probabilities proportional to the opposite distances (stochastic
rounding).  The rounding is unbiased per coordinate and the deterministic
error is at most 2r/p <= eps/sqrt(d) per coordinate, hence <= eps in
Euclidean norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["QuantizedVector", "num_intervals_for", "quantize", "dequantize"]


def num_intervals_for(epsilon: float, radius: float, dim: int) -> int:
    """Number of bins p = ceil(2 r sqrt(d) / eps)."""
    if epsilon <= 0 or radius <= 0 or dim < 1:
        raise ValueError("epsilon and radius must be positive, dim >= 1")
    return math.ceil(2.0 * radius * math.sqrt(dim) / epsilon)


@dataclass(frozen=True)
class QuantizedVector:
    """Per-coordinate level indices plus the grid metadata (eps, r, p)."""

    levels: np.ndarray
    precision: float
    radius: float
    num_intervals: int

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.int64)
        object.__setattr__(self, "levels", levels)
        if self.num_intervals < 1:
            raise ValueError("num_intervals must be >= 1")
        if levels.ndim != 1:
            raise ValueError("levels must be a 1-D integer vector")
        if levels.min(initial=0) < 0 or levels.max(initial=0) > self.num_intervals:
            raise ValueError("levels must lie in [0, num_intervals]")

    @property
    def dim(self) -> int:
        return int(self.levels.shape[0])

    @property
    def offsets(self) -> np.ndarray:
        """Signed level offsets from the grid midpoint floor(p/2).

        This is the integer sequence the codec transmits; conversion back
        to levels is lossless.
        """
        return self.levels - self.num_intervals // 2


def quantize(
    y: np.ndarray,
    epsilon: float,
    radius: float,
    rng: np.random.Generator,
) -> QuantizedVector:
    """Stochastically round each coordinate of y onto the (eps, r) grid.

    Requires ||y||_2 <= radius.  A coordinate falling between endpoints
    c_{v-1} <= y_i < c_v maps to level v-1 with probability
    (c_v - y_i) / (c_v - c_{v-1}) and to v otherwise, so E[c_level] = y_i.
    Coordinates exactly on an endpoint keep it with probability 1.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be a 1-D vector")
    norm = float(np.linalg.norm(y))
    if norm > radius * (1.0 + 1e-12):
        raise ValueError(f"||y|| = {norm:.6g} exceeds the quantizer radius {radius:.6g}")
    p = num_intervals_for(epsilon, radius, y.shape[0])
    # Position in grid units, in [0, p]; stochastic rounding of the
    # fractional part with the floor clipped so y = +r lands on level p.
    u = (y + radius) * (p / (2.0 * radius))
    # Snap float round-off so exact endpoints are kept with probability 1.
    nearest = np.rint(u)
    u = np.where(np.abs(u - nearest) <= 1e-9, nearest, u)
    lo = np.minimum(np.floor(u), p - 1)
    frac = u - lo
    levels = lo.astype(np.int64) + (rng.random(y.shape[0]) < frac)
    return QuantizedVector(levels=levels, precision=epsilon, radius=radius, num_intervals=p)


def dequantize(q: QuantizedVector) -> np.ndarray:
    """Grid values c_level = r * (2*level/p - 1) per coordinate."""
    return q.radius * (2.0 * q.levels / q.num_intervals - 1.0)
