import math

import pytest

from cealsim.schedule import params_for, tau


def test_sample_count_reference_value():
    # sigma=1, M=1, delta=0.1, j=1: ceil(160 * ln(160)) = 813
    p = params_for(1, 1.0, 1, 4, delta=0.1)
    assert p.s_j == 813


def test_tau_values():
    assert params_for(1, 1.0, 1, 1).tau_j == 0.75
    assert params_for(2, 1.0, 1, 1).tau_j == 0.375
    assert tau(0) == 1.5


def test_tau_halves_exactly():
    for j in range(1, 30):
        assert tau(j + 1) / tau(j) == 0.5


def test_gradient_bound_capped_at_one():
    # B_1 = min(5 * tau_0, 1) = min(7.5, 1) = 1
    assert params_for(1, 1.0, 1, 1).B_j == 1.0
    assert params_for(3, 1.0, 1, 1).B_j == 1.0
    # cap releases at j=4: 5 * tau_3 = 15/16
    assert params_for(4, 1.0, 1, 1).B_j == pytest.approx(15 / 16)


def test_sample_counts_grow_geometrically():
    """s_{j+1}/s_j stays in [3.9, 4.2] once j >= 3 (log factor perturbs 4)."""
    prev = params_for(3, 1.0, 1, 4).s_j
    for j in range(4, 12):
        cur = params_for(j, 1.0, 1, 4).s_j
        assert 3.9 <= cur / prev <= 4.2
        prev = cur


def test_client_error_bound_vanishes():
    values = [params_for(j, 1.0, 4, 4).G_j for j in (1, 5, 10, 20, 30)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-7


def test_uplink_precision_to_error_ratio_bounded():
    """gamma_j/G_j <= gamma0/4 for all j, independent of j."""
    gamma0 = 0.5
    for j in range(1, 40):
        p = params_for(j, 2.0, 8, 4, gamma0=gamma0)
        assert p.gamma_j / p.G_j <= gamma0 / 4 + 1e-15


def test_zero_noise_minimum_samples():
    assert params_for(1, 0.0, 4, 4).s_j == 1
    assert params_for(9, 0.0, 4, 4).s_j == 1


def test_downlink_precision():
    p = params_for(2, 1.0, 4, 4, phi0=0.25)
    assert p.phi_j == pytest.approx(0.25 * 0.375)


def test_monotone_sample_growth_from_start():
    prev = 0
    for j in range(1, 12):
        cur = params_for(j, 0.7, 8, 4).s_j
        assert cur > prev or cur == prev == 1
        prev = cur


@pytest.mark.parametrize(
    "kwargs",
    [
        {"j": 0, "sigma": 1.0, "clients": 1, "dim": 1},
        {"j": 1, "sigma": -1.0, "clients": 1, "dim": 1},
        {"j": 1, "sigma": 1.0, "clients": 0, "dim": 1},
        {"j": 1, "sigma": 1.0, "clients": 1, "dim": 0},
        {"j": 1, "sigma": 1.0, "clients": 1, "dim": 1, "delta": 1.5},
        {"j": 1, "sigma": 1.0, "clients": 1, "dim": 1, "gamma0": 1.0},
        {"j": 1, "sigma": 1.0, "clients": 1, "dim": 1, "phi0": 0.0},
    ],
)
def test_input_validation(kwargs):
    with pytest.raises(ValueError):
        params_for(**kwargs)


def test_reference_formula_cross_check():
    """Spot-check the closed forms at one arbitrary parameter point."""
    j, sigma, m, d, delta = 5, 0.7, 8, 4, 0.05
    p = params_for(j, sigma, m, d, delta=delta, gamma0=0.3, phi0=0.2)
    s = math.ceil(40 * sigma**2 * math.log(16 * m * j * j / delta) * 4**j / m)
    assert p.s_j == s
    assert p.G_j == pytest.approx(
        4 * sigma / math.sqrt(s) * (1 + math.sqrt(math.log(4 * m * j * j / delta) / (2 * d)))
    )
    assert p.gamma_j == pytest.approx(0.3 * sigma / math.sqrt(s))
