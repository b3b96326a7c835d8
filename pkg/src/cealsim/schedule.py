"""Per-sub-epoch parameter schedule.

All quantities are pure functions of (j, sigma, M, d, delta, gamma0,
phi0), with natural logarithms throughout:

    s_j     = ceil(40 sigma^2 log(16 M j^2 / delta) 4^j / M)   (at least 1)
    tau_j   = 3 * 2^-(j+1)                                     (tau_0 = 3/2)
    G_j     = (4 sigma / sqrt(s_j)) (1 + sqrt(log(4 M j^2 / delta) / (2 d)))
    B_j     = min(5 * tau_{j-1}, 1)
    gamma_j = gamma0 * sigma / sqrt(s_j)
    phi_j   = phi0 * tau_j

tau_j bounds the server-side estimation error, G_j the client-side one,
B_j the gradient norm entering sub-epoch j, and gamma_j / phi_j are the
uplink / downlink quantization precisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ScheduleParams", "params_for", "tau"]


@dataclass(frozen=True)
class ScheduleParams:
    j: int
    s_j: int
    tau_j: float
    G_j: float
    B_j: float
    gamma_j: float
    phi_j: float


def tau(j: int) -> float:
    """Server error bound 3 * 2^-(j+1), defined for j >= 0."""
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    return 3.0 * 2.0 ** (-(j + 1))


def params_for(
    j: int,
    sigma: float,
    clients: int,
    dim: int,
    delta: float = 0.05,
    gamma0: float = 0.5,
    phi0: float = 0.5,
) -> ScheduleParams:
    """All sub-epoch-j parameters; see the module docstring for formulas."""
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if clients < 1 or dim < 1:
        raise ValueError("clients and dim must be positive")
    if not (0 < delta < 1):
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not (0 < gamma0 < 1) or not (0 < phi0 < 1):
        raise ValueError("gamma0 and phi0 must be in (0, 1)")

    log_s = math.log(16.0 * clients * j * j / delta)
    s_j = max(1, math.ceil(40.0 * sigma * sigma * log_s * 4.0**j / clients))
    log_g = math.log(4.0 * clients * j * j / delta)
    G_j = (4.0 * sigma / math.sqrt(s_j)) * (1.0 + math.sqrt(log_g / (2.0 * dim)))
    return ScheduleParams(
        j=j,
        s_j=s_j,
        tau_j=tau(j),
        G_j=G_j,
        B_j=min(5.0 * tau(j - 1), 1.0),
        gamma_j=gamma0 * sigma / math.sqrt(s_j),
        phi_j=phi0 * tau(j),
    )
