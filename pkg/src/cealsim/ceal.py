"""The CEAL protocol: adaptive-epoch distributed descent over a bit channel.

One run interleaves two counters: the epoch index k (iterate updates) and
the sub-epoch index j (norm-estimation rounds), with j never resetting.
Per sub-epoch, every client averages s_j fresh noisy gradients at the
shared iterate, quantizes the mean at (gamma_j, G_j + B_j), unary-encodes
it and uplinks; the server decodes, averages the M dequantized vectors
into an estimate, and either broadcasts its quantization at
(phi_j, B_j + tau_j) and advances the iterate

    x^(k+1) = x^(k) - eta * <dequantized broadcast>

when tau_j <= ||estimate|| / 4, or increments j otherwise.  The run ends
when each client's query budget is exhausted; a partial sub-epoch counts
toward regret but sends nothing.

Radius overshoots (sample means outside the quantizer radius, possible off
the high-probability event) are norm-clipped and counted rather than
fatal; capacity overruns are likewise counted.  The step size must satisfy
eta < 1/(5 beta); only eta, sigma and delta are revealed to the algorithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import check_capacity, decode, encode, message_size_bound
from .metrics import EpochRecord, RunTrace, SubEpochRecord
from .normest import clip_to_radius
from .objective import ProblemInstance, eval_f, grad, noisy_grad_mean
from .quant import dequantize, quantize
from .schedule import params_for

__all__ = [
    "CealConfig",
    "CealServerState",
    "CealClientState",
    "CealRun",
    "run_ceal",
    "default_eta",
    "validate_eta",
]


def default_eta(beta: float) -> float:
    """Conservative default step size 1/(10 beta)."""
    return 1.0 / (10.0 * beta)


def validate_eta(eta: float, beta: float) -> float:
    bound = 1.0 / (5.0 * beta)
    if not (0.0 < eta < bound):
        raise ValueError(
            f"eta must lie in (0, 1/(5*beta)) = (0, {bound:.6g}); got {eta:.6g}"
        )
    return eta


@dataclass
class CealConfig:
    """Protocol knobs; problem parameters stay inside ProblemInstance."""

    eta: float | None = None  # None -> 1/(10 beta)
    delta: float = 0.05
    gamma0: float = 0.5
    phi0: float = 0.5
    capacity: int | None = None  # per-message channel capacity; None -> size-law bound
    float_bits: int = 64  # accounting for exact-mode (sigma = 0) messages
    x_init: np.ndarray | None = None  # None -> 0.9 * domain corner, seeded signs


@dataclass
class CealServerState:
    k: int
    j: int
    iterate: np.ndarray
    pending_estimate: np.ndarray | None = None


@dataclass
class CealClientState:
    client_id: int
    iterate: np.ndarray
    samples_taken: int = 0


class CealRun:
    """Deterministic sequential driver for one CEAL run.

    Exposes the server/client state machines and `step_subepoch`, one pass
    of the inner loop; `run_ceal` drives it to the horizon and assembles
    the trace.
    """

    def __init__(self, instance: ProblemInstance, config: CealConfig | None = None, seed: int = 0):
        self.instance = instance
        self.config = config or CealConfig()
        self.seed = seed
        self.eta = validate_eta(
            self.config.eta if self.config.eta is not None else default_eta(instance.beta),
            instance.beta,
        )
        self.exact = instance.sigma == 0

        root = np.random.default_rng(seed)
        m = instance.clients
        streams = root.spawn(2 * m + 2)
        self._noise_rngs = streams[:m]
        self._quant_rngs = streams[m : 2 * m]
        self._server_rng = streams[2 * m]
        init_rng = streams[2 * m + 1]

        if self.config.x_init is not None:
            x1 = np.asarray(self.config.x_init, dtype=float).copy()
            if x1.shape != (instance.dim,):
                raise ValueError("x_init must have length dim")
            if np.max(np.abs(x1)) > instance.domain_radius:
                raise ValueError("x_init must lie inside the domain box")
        else:
            signs = np.where(init_rng.random(instance.dim) < 0.5, -1.0, 1.0)
            x1 = 0.9 * instance.domain_radius * signs

        self.server = CealServerState(k=1, j=1, iterate=x1.copy())
        self.clients = [
            CealClientState(client_id=i + 1, iterate=x1.copy()) for i in range(m)
        ]
        self.subepochs: list[SubEpochRecord] = []
        self.radius_clips = 0
        self.capacity_violations = 0
        self.channel_uplink_bits = 0
        self.channel_downlink_bits = 0

    @property
    def samples_per_client(self) -> int:
        return self.clients[0].samples_taken

    @property
    def finished(self) -> bool:
        return self.samples_per_client >= self.instance.horizon

    def _uplink(self, mean: np.ndarray, p, rng) -> tuple[np.ndarray, int]:
        """Quantize, encode, count, decode: one client-to-server message."""
        inst = self.instance
        if self.exact:
            bits = inst.dim * self.config.float_bits
            self._check_capacity(bits)
            self.channel_uplink_bits += bits
            return mean, bits
        radius = p.G_j + p.B_j
        mean, clipped = clip_to_radius(mean, radius)
        self.radius_clips += clipped
        q = quantize(mean, p.gamma_j, radius, rng)
        msg = encode(q)
        self._check_capacity(msg.bit_count, p.gamma_j, radius)
        self.channel_uplink_bits += msg.bit_count
        decoded = decode(msg, inst.dim, p.gamma_j, radius, q.num_intervals)
        return dequantize(decoded), msg.bit_count

    def _downlink(self, estimate: np.ndarray, p) -> tuple[np.ndarray, int]:
        """Quantize, encode, count, decode: the server broadcast."""
        inst = self.instance
        if self.exact:
            bits = inst.dim * self.config.float_bits
            self._check_capacity(bits)
            self.channel_downlink_bits += bits
            return estimate, bits
        radius = p.B_j + p.tau_j
        estimate, clipped = clip_to_radius(estimate, radius)
        self.radius_clips += clipped
        q = quantize(estimate, p.phi_j, radius, self._server_rng)
        msg = encode(q)
        self._check_capacity(msg.bit_count, p.phi_j, radius)
        self.channel_downlink_bits += msg.bit_count
        decoded = decode(msg, inst.dim, p.phi_j, radius, q.num_intervals)
        return dequantize(decoded), msg.bit_count

    def _check_capacity(self, bits: int, precision: float | None = None, radius: float | None = None):
        if self.config.capacity is not None:
            cap = self.config.capacity
        elif precision is not None:
            cap = math.ceil(message_size_bound(self.instance.dim, precision, radius))
        else:
            return
        if bits > cap:
            self.capacity_violations += 1

    def step_subepoch(self) -> SubEpochRecord:
        """One pass of the inner loop: on a passing test k advances, else j."""
        if self.finished:
            raise RuntimeError("run already exhausted its horizon")
        inst = self.instance
        cfg = self.config
        server = self.server
        x = server.iterate
        gap = eval_f(inst, x) - inst.f_star
        grad_norm = float(np.linalg.norm(grad(inst, x)))
        p = params_for(
            server.j, inst.sigma, inst.clients, inst.dim,
            delta=cfg.delta, gamma0=cfg.gamma0, phi0=cfg.phi0,
        )
        remaining = inst.horizon - self.samples_per_client

        if p.s_j > remaining:
            # Tail: the budget dies mid-sub-epoch; queries count, no message.
            for client in self.clients:
                noisy_grad_mean(inst, x, remaining, self._noise_rngs[client.client_id - 1])
                client.samples_taken += remaining
            rec = SubEpochRecord(
                k=server.k, j=server.j, samples=remaining,
                uplink_bits=(), downlink_bits=0, updated=False,
                gap=gap, grad_norm=grad_norm,
            )
            self.subepochs.append(rec)
            return rec

        # Lines 4-5: client sampling and uplink, fixed client order.
        uplink_bits = []
        acc = np.zeros(inst.dim)
        for client in self.clients:
            idx = client.client_id - 1
            mean = noisy_grad_mean(inst, x, p.s_j, self._noise_rngs[idx])
            client.samples_taken += p.s_j
            vec, bits = self._uplink(mean, p, self._quant_rngs[idx])
            uplink_bits.append(bits)
            acc += vec
        estimate = acc / inst.clients
        server.pending_estimate = estimate

        passed = p.tau_j <= float(np.linalg.norm(estimate)) / 4.0
        downlink_bits = 0
        if passed:
            broadcast, downlink_bits = self._downlink(estimate, p)
            new_x = x - self.eta * broadcast
            for client in self.clients:
                client.iterate = new_x.copy()
            server.iterate = new_x.copy()
            server.pending_estimate = None
            server.k += 1
        else:
            server.j += 1

        rec = SubEpochRecord(
            k=server.k - (1 if passed else 0),
            j=p.j,
            samples=p.s_j,
            uplink_bits=tuple(uplink_bits),
            downlink_bits=downlink_bits,
            updated=passed,
            gap=gap,
            grad_norm=grad_norm,
            uplink_precision=0.0 if self.exact else p.gamma_j,
            uplink_radius=0.0 if self.exact else p.G_j + p.B_j,
            downlink_precision=0.0 if self.exact or not passed else p.phi_j,
            downlink_radius=0.0 if self.exact or not passed else p.B_j + p.tau_j,
        )
        self.subepochs.append(rec)
        return rec

    def build_trace(self) -> RunTrace:
        inst = self.instance
        return _assemble_trace(
            algo="ceal",
            instance=inst,
            seed=self.seed,
            subepochs=self.subepochs,
            num_rounds=self.server.k - 1,
            protocol_events={
                "radius_clip": self.radius_clips,
                "capacity_violation": self.capacity_violations,
            },
            channel_up=self.channel_uplink_bits,
            channel_down=self.channel_downlink_bits,
            final_iterate=self.server.iterate,
        )


def run_ceal(instance: ProblemInstance, config: CealConfig | None = None, seed: int = 0) -> RunTrace:
    """Run CEAL to the horizon and return the full trace."""
    run = CealRun(instance, config, seed)
    while not run.finished:
        run.step_subepoch()
    return run.build_trace()


def _assemble_trace(
    algo: str,
    instance: ProblemInstance,
    seed: int,
    subepochs: list[SubEpochRecord],
    num_rounds: int,
    protocol_events: dict[str, int],
    channel_up: int,
    channel_down: int,
    final_iterate: np.ndarray,
) -> RunTrace:
    """Shared trace assembly (also used by the minibatch baseline)."""
    m = instance.clients
    chunks = [np.full(rec.samples, m * rec.gap) for rec in subepochs]
    per_step = np.cumsum(np.concatenate(chunks)) if chunks else np.zeros(0)

    epochs: list[EpochRecord] = []
    group: list[SubEpochRecord] = []
    for rec in subepochs:
        group.append(rec)
        if rec.updated:
            epochs.append(_epoch_from_group(group, complete=True))
            group = []
    if group:
        epochs.append(_epoch_from_group(group, complete=False))

    up_total = sum(sum(r.uplink_bits) for r in subepochs)
    down_total = sum(r.downlink_bits for r in subepochs)
    return RunTrace(
        algo=algo,
        clients=m,
        horizon=instance.horizon,
        dim=instance.dim,
        sigma=instance.sigma,
        seed=seed,
        per_step_regret=per_step,
        epochs=epochs,
        subepochs=subepochs,
        uplink_bits_total=up_total,
        downlink_bits_total=down_total,
        num_rounds=num_rounds,
        protocol_events=protocol_events,
        channel_uplink_bits=channel_up,
        channel_downlink_bits=channel_down,
        final_iterate=np.asarray(final_iterate, dtype=float),
        final_gap=eval_f(instance, final_iterate) - instance.f_star,
        final_grad_norm=float(np.linalg.norm(grad(instance, final_iterate))),
    )


def _epoch_from_group(group: list[SubEpochRecord], complete: bool) -> EpochRecord:
    first = group[0]
    return EpochRecord(
        k=first.k,
        j_set=tuple(r.j for r in group),
        t_k=sum(r.samples for r in group),
        uplink_bits=sum(sum(r.uplink_bits) for r in group),
        downlink_bits=sum(r.downlink_bits for r in group),
        grad_norm_true=first.grad_norm,
        gap_true=first.gap,
        complete=complete,
    )
