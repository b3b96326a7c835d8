"""Adaptive norm estimation from noisy samples across clients.

Estimates the norm of an unknown vector y (||y|| <= 1) to a multiplicative
factor: in sub-epochs j = 1, 2, ..., each of M clients averages s_j fresh
samples of y + xi; the server averages the client means (optionally after
stochastic quantization at precision gamma_j and radius G_j + B_j) and
stops at the first j with

    tau_j <= ||estimate||_2 / 4.

At termination the estimate norm lies in [4/5, 4/3] * ||y|| with
probability at least 1 - delta, and the total sample count scales as
1 / (M ||y||^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quant import dequantize, quantize
from .schedule import params_for

__all__ = ["NormEstResult", "run_normest", "mean_oracle", "clip_to_radius"]


@dataclass
class NormEstResult:
    """Outcome of the estimation loop.

    `terminated` is False when the sample budget ran out first; the fields
    then carry the last completed round's partial state.
    """

    estimate: np.ndarray | None
    j_final: int
    samples_used: int
    terminated: bool
    radius_clips: int = 0

    @property
    def norm(self) -> float:
        return 0.0 if self.estimate is None else float(np.linalg.norm(self.estimate))


def mean_oracle(target: np.ndarray, sigma: float, noise: str = "gaussian"):
    """Sample-mean source for a fixed vector: oracle(count, rng) returns the
    mean of `count` fresh samples of target + xi, with xi per-coordinate
    variance sigma^2/d."""
    target = np.asarray(target, dtype=float)
    d = target.shape[0]

    def oracle(count: int, rng: np.random.Generator) -> np.ndarray:
        if sigma == 0:
            return target.copy()
        if noise == "gaussian":
            return target + (sigma / math.sqrt(d * count)) * rng.standard_normal(d)
        half = sigma * math.sqrt(3.0 / d)
        return target + rng.uniform(-half, half, (count, d)).mean(axis=0)

    return oracle


def clip_to_radius(v: np.ndarray, radius: float) -> tuple[np.ndarray, bool]:
    """Scale v onto the ball of the given radius if it falls outside.

    Returns (vector, clipped).  Off the high-probability event the sample
    mean can exceed the quantizer radius; clipping keeps the wire contract
    valid while the event is counted by the caller.
    """
    norm = float(np.linalg.norm(v))
    if norm > radius:
        return v * (radius / norm), True
    return v, False


def run_normest(
    target: np.ndarray,
    sigma: float,
    clients: int,
    *,
    rng: np.random.Generator,
    quantized: bool = False,
    delta: float = 0.05,
    gamma0: float = 0.5,
    budget: int | None = None,
    oracle=None,
    noise: str = "gaussian",
) -> NormEstResult:
    """Run the estimation loop for `target`; see the module docstring.

    `oracle(count, rng)` may replace the default sample-mean source, e.g.
    for alternative noise models.  `budget` caps the per-client sample
    count; a sub-epoch that would exceed it is not started and the partial
    state is returned with terminated=False.
    """
    target = np.asarray(target, dtype=float)
    if float(np.linalg.norm(target)) > 1.0 + 1e-12:
        raise ValueError("target norm must be at most 1")
    if oracle is None:
        oracle = mean_oracle(target, sigma, noise)
    dim = target.shape[0]
    streams = rng.spawn(2 * clients)
    noise_rngs, quant_rngs = streams[:clients], streams[clients:]
    use_quant = quantized and sigma > 0

    estimate = None
    used = 0
    clips = 0
    j = 1
    while True:
        p = params_for(j, sigma, clients, dim, delta=delta, gamma0=gamma0)
        if budget is not None and used + p.s_j > budget:
            return NormEstResult(estimate, j - 1, used, False, clips)
        acc = np.zeros(dim)
        for m in range(clients):
            mean = oracle(p.s_j, noise_rngs[m])
            if use_quant:
                radius = p.G_j + p.B_j
                mean, clipped = clip_to_radius(mean, radius)
                clips += clipped
                mean = dequantize(quantize(mean, p.gamma_j, radius, quant_rngs[m]))
            acc += mean
        estimate = acc / clients
        used += p.s_j
        if p.tau_j <= float(np.linalg.norm(estimate)) / 4.0:
            return NormEstResult(estimate, j, used, True, clips)
        j += 1
