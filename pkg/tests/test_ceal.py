import numpy as np
import pytest

import cealsim.ceal as ceal_mod
from cealsim.ceal import CealConfig, CealRun, default_eta, run_ceal, validate_eta
from cealsim.codec import message_size_bound
from cealsim.metrics import recount_bits, regret_from_epochs
from cealsim.objective import make_instance


def _instance(dim=4, sigma=0.05, clients=4, horizon=2000, cap=0.9, alpha=1.0, beta=1.0):
    return make_instance(dim, alpha, beta, sigma, clients, horizon,
                         minimizer="center", grad_cap=cap)


def test_eta_validation_names_bound():
    with pytest.raises(ValueError, match=r"1/\(5\*beta\)"):
        validate_eta(0.21, 1.0)
    assert validate_eta(0.19, 1.0) == 0.19
    assert default_eta(2.0) == 0.05


def test_noiseless_iterates_follow_geometric_decay():
    """sigma=0, d=1: the update sequence is x <- (1 - eta*alpha) x exactly."""
    inst = _instance(dim=1, sigma=0.0, clients=1, horizon=200)
    x0 = np.array([0.8 * inst.domain_radius])
    run = CealRun(inst, CealConfig(x_init=x0), seed=0)
    lam = inst.curvature.copy()
    expected = x0.copy()
    seen = []
    while not run.finished:
        rec = run.step_subepoch()
        if rec.updated:
            g = lam * (expected - inst.minimizer)
            expected = expected - run.eta * g
            seen.append((run.server.iterate.copy(), expected.copy()))
    assert len(seen) > 50
    for got, want in seen:
        assert got[0] == want[0]  # identical float operations, bitwise equal


def test_branch_semantics():
    """Pass advances k and keeps j; fail advances j and keeps k."""
    inst = _instance(sigma=0.0, clients=2, horizon=100)
    run = CealRun(inst, seed=1)
    while not run.finished:
        k0, j0 = run.server.k, run.server.j
        rec = run.step_subepoch()
        if rec.samples < 1:
            break
        if rec.updated:
            assert (run.server.k, run.server.j) == (k0 + 1, j0)
        else:
            assert (run.server.k, run.server.j) == (k0, j0 + 1)


def test_synchrony_after_every_subepoch():
    inst = _instance(sigma=0.1, clients=3, horizon=1500)
    run = CealRun(inst, seed=2)
    while not run.finished:
        run.step_subepoch()
        for client in run.clients:
            assert np.array_equal(client.iterate, run.server.iterate)


def test_j_monotone_and_epoch_growth():
    inst = _instance(sigma=0.05, clients=4, horizon=5000)
    trace = run_ceal(inst, seed=3)
    js = [rec.j for rec in trace.subepochs]
    assert all(a <= b for a, b in zip(js, js[1:]))
    complete = [e for e in trace.epochs if e.complete]
    lengths = [(e.t_k, min(e.j_set)) for e in complete]
    for (t_a, j_a), (t_b, _) in zip(lengths, lengths[1:]):
        if j_a > 2:
            assert t_b >= t_a


def test_epoch_records_consistent():
    from cealsim.schedule import params_for

    inst = _instance(sigma=0.05, clients=4, horizon=5000)
    trace = run_ceal(inst, seed=4)
    for epoch in trace.epochs:
        if epoch.complete:
            expected = sum(
                params_for(j, inst.sigma, inst.clients, inst.dim).s_j for j in epoch.j_set
            )
            assert epoch.t_k == expected
    assert sum(e.t_k for e in trace.epochs) == inst.horizon


def test_regret_decomposition_exact():
    inst = _instance(sigma=0.1, clients=4, horizon=3000)
    trace = run_ceal(inst, seed=5)
    total = trace.final_regret
    decomposed = regret_from_epochs(trace)
    assert abs(total - decomposed) <= 1e-10 * max(1.0, abs(total))


def test_per_step_regret_shape_and_monotone():
    inst = _instance(sigma=0.1, clients=2, horizon=1200)
    trace = run_ceal(inst, seed=6)
    assert len(trace.per_step_regret) == inst.horizon
    diffs = np.diff(trace.per_step_regret)
    assert np.all(diffs >= -1e-12)


def test_determinism_bitwise():
    inst = _instance(sigma=0.2, clients=3, horizon=2000)
    a = run_ceal(inst, seed=7)
    b = run_ceal(inst, seed=7)
    assert np.array_equal(a.per_step_regret, b.per_step_regret)
    assert np.array_equal(a.final_iterate, b.final_iterate)
    assert a.uplink_bits_total == b.uplink_bits_total
    assert [r.uplink_bits for r in a.subepochs] == [r.uplink_bits for r in b.subepochs]
    c = run_ceal(inst, seed=8)
    assert not np.array_equal(a.final_iterate, c.final_iterate)


def test_bit_totals_match_channel_counters():
    inst = _instance(sigma=0.1, clients=3, horizon=2000)
    trace = run_ceal(inst, seed=9)
    up, down = recount_bits(trace)
    assert up == trace.uplink_bits_total == trace.channel_uplink_bits
    assert down == trace.downlink_bits_total == trace.channel_downlink_bits
    assert trace.uplink_bits_total > 0


def test_downlink_message_bound():
    """Broadcast size <= d(3 + 2((B_j + tau_j)/phi_j + 1)) per sub-epoch."""
    inst = _instance(sigma=0.1, clients=3, horizon=4000)
    trace = run_ceal(inst, seed=10)
    sent = [r for r in trace.subepochs if r.downlink_bits]
    assert sent
    for rec in sent:
        bound = message_size_bound(inst.dim, rec.downlink_precision, rec.downlink_radius)
        assert rec.downlink_bits <= bound


def test_epoch_length_band():
    """t_k * M * ||grad||^2 stays within a bounded band across epochs/seeds."""
    ratios = []
    for clients in (2, 8):
        inst = _instance(sigma=0.05, clients=clients, horizon=10_000)
        for seed in range(3):
            trace = run_ceal(inst, seed=seed)
            for e in trace.epochs:
                if e.complete and 0.01 <= e.grad_norm_true <= 1.0:
                    ratios.append(e.t_k * clients * e.grad_norm_true**2)
    assert len(ratios) > 30
    assert max(ratios) / min(ratios) <= 200.0


def test_tail_subepoch_counts_regret_but_sends_nothing():
    # horizon ends inside sub-epoch j=3: s_1 + s_2 complete, then a stub
    inst = _instance(sigma=1.0, clients=8, horizon=1000, dim=4)
    trace = run_ceal(inst, seed=11)
    tail = trace.subepochs[-1]
    assert not tail.message_sent
    assert tail.downlink_bits == 0
    assert sum(r.samples for r in trace.subepochs) == inst.horizon
    assert not trace.epochs[-1].complete


def test_capacity_violations_counted():
    inst = _instance(sigma=0.1, clients=2, horizon=1000)
    trace = run_ceal(inst, CealConfig(capacity=4), seed=12)
    assert trace.protocol_events["capacity_violation"] > 0
    # run still completes and stays deterministic
    again = run_ceal(inst, CealConfig(capacity=4), seed=12)
    assert trace.protocol_events == again.protocol_events


def test_radius_clip_event_recorded(monkeypatch):
    """A sample mean outside G_j + B_j is clipped, counted, and not fatal."""
    inst = _instance(sigma=0.1, clients=2, horizon=500)
    real = ceal_mod.noisy_grad_mean
    state = {"fired": False}

    def spiky(instance, x, count, rng):
        out = real(instance, x, count, rng)
        if not state["fired"]:
            state["fired"] = True
            return out + 50.0
        return out

    monkeypatch.setattr(ceal_mod, "noisy_grad_mean", spiky)
    trace = run_ceal(inst, seed=13)
    assert trace.protocol_events["radius_clip"] >= 1
    assert len(trace.per_step_regret) == inst.horizon


def test_x_init_validation():
    inst = _instance()
    with pytest.raises(ValueError, match="length"):
        CealRun(inst, CealConfig(x_init=np.zeros(7)), seed=0)
    with pytest.raises(ValueError, match="domain"):
        CealRun(inst, CealConfig(x_init=np.full(4, 2 * inst.domain_radius)), seed=0)


def test_default_start_is_scaled_corner():
    inst = _instance()
    run = CealRun(inst, seed=14)
    assert np.all(np.abs(run.server.iterate) == 0.9 * inst.domain_radius)


def test_pending_estimate_lifecycle():
    inst = _instance(sigma=0.1, clients=2, horizon=2000)
    run = CealRun(inst, seed=15)
    assert run.server.pending_estimate is None
    while not run.finished:
        rec = run.step_subepoch()
        if not rec.message_sent:
            break
        if rec.updated:
            assert run.server.pending_estimate is None
        else:
            assert run.server.pending_estimate is not None
