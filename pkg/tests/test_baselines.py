import numpy as np
import pytest

from cealsim.baselines import MinibatchConfig, match_step_size, run_minibatch
from cealsim.metrics import regret_from_epochs
from cealsim.objective import make_instance


def _instance(dim=2, sigma=0.1, clients=3, horizon=2000):
    return make_instance(dim, 1.0, 1.0, sigma, clients, horizon,
                         minimizer="center", grad_cap=0.9)


def test_noiseless_matches_gradient_descent():
    inst = make_instance(1, 1.0, 1.0, 0.0, 1, 50, minimizer="center", grad_cap=0.9)
    x0 = np.array([0.5 * inst.domain_radius])
    cfg = MinibatchConfig(batch_size=1, step_size=0.08, x_init=x0)
    trace = run_minibatch(inst, cfg, seed=0)
    expected = x0.copy()
    for _ in range(50):
        expected = expected - 0.08 * inst.curvature * (expected - inst.minimizer)
    assert trace.final_iterate[0] == expected[0]
    assert trace.num_rounds == 50


def test_fixed_size_bit_accounting():
    inst = _instance(horizon=1000)
    cfg = MinibatchConfig(batch_size=100, step_size=0.05, float_bits=64)
    trace = run_minibatch(inst, cfg, seed=1)
    rounds = 1000 // 100
    assert trace.num_rounds == rounds
    assert trace.uplink_bits_total == rounds * inst.clients * inst.dim * 64
    assert trace.uplink_bits_per_client == rounds * inst.dim * 64
    assert trace.downlink_bits_total == rounds * inst.dim * 64


def test_partial_tail_round():
    inst = _instance(horizon=250)
    cfg = MinibatchConfig(batch_size=100, step_size=0.05)
    trace = run_minibatch(inst, cfg, seed=2)
    assert trace.num_rounds == 2
    assert sum(r.samples for r in trace.subepochs) == 250
    assert not trace.subepochs[-1].message_sent


def test_trace_schema_matches_ceal():
    inst = _instance()
    trace = run_minibatch(inst, MinibatchConfig(batch_size=50, step_size=0.05), seed=3)
    assert trace.algo == "minibatch"
    assert len(trace.per_step_regret) == inst.horizon
    assert np.all(np.diff(trace.per_step_regret) >= -1e-12)
    total = trace.final_regret
    assert abs(total - regret_from_epochs(trace)) <= 1e-10 * max(1.0, total)


def test_determinism():
    inst = _instance()
    a = run_minibatch(inst, MinibatchConfig(batch_size=25, step_size=0.03), seed=4)
    b = run_minibatch(inst, MinibatchConfig(batch_size=25, step_size=0.03), seed=4)
    assert np.array_equal(a.per_step_regret, b.per_step_regret)
    assert np.array_equal(a.final_iterate, b.final_iterate)


def test_config_validation():
    with pytest.raises(ValueError):
        MinibatchConfig(batch_size=0, step_size=0.1)
    with pytest.raises(ValueError):
        MinibatchConfig(batch_size=1, step_size=-0.1)
    inst = _instance()
    with pytest.raises(ValueError, match="stable range"):
        run_minibatch(inst, MinibatchConfig(batch_size=1, step_size=5.0), seed=0)


def test_larger_step_lowers_regret_on_descent_branch():
    inst = _instance(horizon=4000)
    slow = run_minibatch(inst, MinibatchConfig(batch_size=40, step_size=1e-4), seed=5)
    fast = run_minibatch(inst, MinibatchConfig(batch_size=40, step_size=0.05), seed=5)
    assert fast.final_regret < slow.final_regret


def test_match_step_size_hits_target():
    inst = _instance(horizon=4000)
    mid = run_minibatch(inst, MinibatchConfig(batch_size=40, step_size=3e-3), seed=6)
    target = mid.final_regret * 1.35
    cfg, trace = match_step_size(inst, 40, target, seed=6)
    assert abs(trace.final_regret - target) / target <= 0.02
    assert cfg.batch_size == 40


def test_match_step_size_unreachable_target():
    inst = _instance(horizon=1000)
    with pytest.raises(ValueError, match="misses target"):
        match_step_size(inst, 100, 1e-9, seed=7)
