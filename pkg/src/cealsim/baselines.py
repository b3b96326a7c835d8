"""Minibatch-SGD comparator with fixed batches and full-precision messages.

Every round, each client averages a fixed batch of noisy gradients at the
shared iterate and uplinks it at float_bits bits per coordinate; the
server averages and broadcasts at the same precision, and the iterate
moves by step_size times the average.  The trace schema matches CEAL's so
one metrics pipeline consumes both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ceal import _assemble_trace
from .metrics import RunTrace, SubEpochRecord
from .objective import ProblemInstance, eval_f, grad, noisy_grad_mean

__all__ = ["MinibatchConfig", "run_minibatch", "match_step_size"]


@dataclass(frozen=True)
class MinibatchConfig:
    batch_size: int
    step_size: float
    float_bits: int = 64
    x_init: np.ndarray | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if self.float_bits < 1:
            raise ValueError(f"float_bits must be >= 1, got {self.float_bits}")


def run_minibatch(instance: ProblemInstance, config: MinibatchConfig, seed: int = 0) -> RunTrace:
    """Run the fixed-batch baseline to the horizon and return the trace."""
    if config.step_size > 1.0 / instance.beta:
        raise ValueError(
            f"step_size {config.step_size:.6g} exceeds the stable range "
            f"(0, 1/beta] = (0, {1.0 / instance.beta:.6g}]"
        )
    m = instance.clients
    root = np.random.default_rng(seed)
    streams = root.spawn(m + 1)
    noise_rngs, init_rng = streams[:m], streams[m]

    if config.x_init is not None:
        x = np.asarray(config.x_init, dtype=float).copy()
        if x.shape != (instance.dim,):
            raise ValueError("x_init must have length dim")
    else:
        signs = np.where(init_rng.random(instance.dim) < 0.5, -1.0, 1.0)
        x = 0.9 * instance.domain_radius * signs

    per_round_up = m * instance.dim * config.float_bits
    per_round_down = instance.dim * config.float_bits
    subepochs: list[SubEpochRecord] = []
    channel_up = 0
    channel_down = 0
    taken = 0
    k = 1
    while taken < instance.horizon:
        gap = eval_f(instance, x) - instance.f_star
        grad_norm = float(np.linalg.norm(grad(instance, x)))
        remaining = instance.horizon - taken
        if config.batch_size > remaining:
            # Budget dies mid-round: queries count toward regret, no message.
            for rng in noise_rngs:
                noisy_grad_mean(instance, x, remaining, rng)
            subepochs.append(
                SubEpochRecord(
                    k=k, j=k, samples=remaining, uplink_bits=(), downlink_bits=0,
                    updated=False, gap=gap, grad_norm=grad_norm,
                )
            )
            taken = instance.horizon
            break
        acc = np.zeros(instance.dim)
        for rng in noise_rngs:
            acc += noisy_grad_mean(instance, x, config.batch_size, rng)
        x = x - config.step_size * (acc / m)
        channel_up += per_round_up
        channel_down += per_round_down
        subepochs.append(
            SubEpochRecord(
                k=k, j=k, samples=config.batch_size,
                uplink_bits=(instance.dim * config.float_bits,) * m,
                downlink_bits=per_round_down,
                updated=True, gap=gap, grad_norm=grad_norm,
            )
        )
        taken += config.batch_size
        k += 1

    return _assemble_trace(
        algo="minibatch",
        instance=instance,
        seed=seed,
        subepochs=subepochs,
        num_rounds=k - 1,
        protocol_events={"radius_clip": 0, "capacity_violation": 0},
        channel_up=channel_up,
        channel_down=channel_down,
        final_iterate=x,
    )


def match_step_size(
    instance: ProblemInstance,
    batch_size: int,
    target_regret: float,
    *,
    seed: int = 0,
    float_bits: int = 64,
    rel_tol: float = 0.02,
    accept_rel: float = 0.10,
    max_iters: int = 40,
) -> tuple[MinibatchConfig, RunTrace]:
    """Tune the baseline step size so its final regret matches a target.

    On the small-step branch regret is monotone decreasing in the step
    size (slower descent means more time at suboptimal iterates), so a
    coarse geometric scan brackets the target there and log-space
    bisection refines it to rel_tol.  Returns the tuned config and trace;
    raises if the closest achievable regret misses the target by more
    than accept_rel.
    """
    if target_regret <= 0:
        raise ValueError("target_regret must be positive")
    eta_max = 1.0 / instance.beta

    def run_at(eta: float) -> RunTrace:
        cfg = MinibatchConfig(batch_size=batch_size, step_size=eta, float_bits=float_bits)
        return run_minibatch(instance, cfg, seed=seed)

    grid = np.geomspace(1e-8, eta_max, 13)
    traces = [run_at(e) for e in grid]
    regrets = [t.final_regret for t in traces]
    # Restrict to the decreasing branch (up to the noise-floor minimum).
    cut = int(np.argmin(regrets)) + 1
    branch = list(zip(grid[:cut], traces[:cut]))
    best_eta, best = min(branch, key=lambda et: abs(et[1].final_regret - target_regret))
    hi_idx = next((i for i, (_, t) in enumerate(branch) if t.final_regret <= target_regret), None)
    if hi_idx is not None and hi_idx > 0:
        lo, hi = branch[hi_idx - 1][0], branch[hi_idx][0]
        for _ in range(max_iters):
            if abs(best.final_regret - target_regret) / target_regret <= rel_tol:
                break
            mid = math.sqrt(lo * hi)
            trace = run_at(mid)
            if abs(trace.final_regret - target_regret) < abs(best.final_regret - target_regret):
                best, best_eta = trace, mid
            if trace.final_regret > target_regret:
                lo = mid
            else:
                hi = mid
    rel = abs(best.final_regret - target_regret) / target_regret
    if rel > accept_rel:
        raise ValueError(
            f"closest achievable regret {best.final_regret:.4g} misses target "
            f"{target_regret:.4g} by {rel:.1%} (> {accept_rel:.0%}) for batch_size={batch_size}"
        )
    cfg = MinibatchConfig(batch_size=batch_size, step_size=float(best_eta), float_bits=float_bits)
    return cfg, best
