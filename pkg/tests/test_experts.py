import math

import numpy as np
import pytest

from swapcal.experts import ExpertState, expert_init, expert_update, expert_weights

# frozen contract constants, calibrated once over the adversarial battery
# below (worst observed ratio was about 0.51; 8 leaves an order of
# magnitude of headroom while staying well under the cap of 32)
CONTRACT_C1 = 8.0
CONTRACT_C2 = 8.0


def run_stream(K, T, gain_fn, seed=0):
    """Independent regret accountant kept outside the module under test."""
    state = expert_init(K, T)
    rng = np.random.default_rng(seed)
    cum_expert = np.zeros(K)
    cum_alg = 0.0
    squared = np.zeros(K)
    for t in range(T):
        w = expert_weights(state)
        g = np.asarray(gain_fn(t, w, rng), dtype=np.float64)
        cum_expert += g
        cum_alg += float(w @ g)
        squared += g * g
        expert_update(state, g)
    return cum_expert - cum_alg, squared


def assert_valid_distributions(state: ExpertState):
    table = np.exp(state.log_weights)
    master = np.exp(state.log_master)
    assert np.all(table >= 0)
    np.testing.assert_allclose(table.sum(axis=1), 1.0, atol=1e-9)
    assert master.sum() == pytest.approx(1.0, abs=1e-9)


def test_init_examples():
    s = expert_init(2, 1)
    assert s.rate_grid.shape == (1,)
    assert s.rate_grid[0] == 0.25
    np.testing.assert_allclose(expert_weights(s), [0.5, 0.5])

    s1 = expert_init(1, 100)
    np.testing.assert_allclose(expert_weights(s1), [1.0])

    s4 = expert_init(4, 16)
    assert s4.rate_grid.shape == (4,)  # ceil(log2 16)
    np.testing.assert_allclose(expert_weights(s4), np.full(4, 0.25))
    assert np.all(s4.rate_grid > 0) and np.all(s4.rate_grid <= 0.25)


def test_init_argument_errors():
    with pytest.raises(ValueError):
        expert_init(0, 5)
    with pytest.raises(ValueError):
        expert_init(5, 0)


def test_master_prior_proportional_to_rate_squared():
    s = expert_init(3, 1024)
    prior = np.exp(s.log_master)
    expected = s.rate_grid**2 / (s.rate_grid**2).sum()
    np.testing.assert_allclose(prior, expected, atol=1e-12)


def test_weights_unchanged_by_zero_gains():
    s = expert_init(3, 64)
    before = expert_weights(s).copy()
    expert_update(s, np.zeros(3))
    np.testing.assert_allclose(expert_weights(s), before, atol=1e-12)


def test_weights_unchanged_by_equal_gains():
    s = expert_init(5, 256)
    expert_update(s, np.full(5, 0.7))
    np.testing.assert_allclose(expert_weights(s), np.full(5, 0.2), atol=1e-12)


def test_update_favors_rewarded_expert():
    s = expert_init(3, 64)
    expert_update(s, np.array([0.0, 1.0, 0.0]))
    w = expert_weights(s)
    assert w[1] > w[0] and w[1] > w[2]


def test_single_rate_update_closed_form():
    # K=2, T=1: one rate eta = 1/4; gains (1, -1) multiply the uniform
    # weights by exp(0.1875) and exp(-0.3125) before normalization
    s = expert_init(2, 1)
    expert_update(s, np.array([1.0, -1.0]))
    up, down = math.exp(0.25 - 0.0625), math.exp(-0.25 - 0.0625)
    np.testing.assert_allclose(
        expert_weights(s), [up / (up + down), down / (up + down)], atol=1e-12
    )


def test_gain_domain_errors():
    s = expert_init(2, 8)
    with pytest.raises(ValueError):
        expert_update(s, np.array([1.5, 0.0]))
    with pytest.raises(ValueError):
        expert_update(s, np.array([float("nan"), 0.0]))
    with pytest.raises(ValueError):
        expert_update(s, np.array([1.0]))


def test_distributions_stay_valid_under_updates():
    s = expert_init(6, 512)
    rng = np.random.default_rng(2)
    for _ in range(200):
        expert_update(s, rng.uniform(-1, 1, 6))
    assert_valid_distributions(s)
    assert s.round == 200


def test_round_counter_and_rate_grid_size():
    for T, expected in ((1, 1), (2, 1), (3, 2), (16, 4), (2**15, 15)):
        s = expert_init(2, T)
        assert s.rate_grid.shape == (expected,)


@pytest.mark.parametrize(
    "name,K,T,gain_fn",
    [
        ("iid_rademacher", 16, 4096, lambda t, w, rng: rng.choice([-1.0, 1.0], 16)),
        ("uniform_noise", 8, 4096, lambda t, w, rng: rng.uniform(-1, 1, 8)),
        (
            "drift_vs_oscillation",
            16,
            4096,
            lambda t, w, rng: np.array([0.1, 1.0 if t % 2 == 0 else -1.0] + [0.0] * 14),
        ),
        (
            "block_switching",
            16,
            4096,
            lambda t, w, rng: np.where(np.arange(16) == (t // 256) % 16, 1.0, -0.2),
        ),
        (
            "adaptive_anti_weight",
            16,
            4096,
            lambda t, w, rng: np.where(w < np.median(w), 1.0, -1.0),
        ),
        (
            "zero_expert_among_noise",
            16,
            4096,
            lambda t, w, rng: np.concatenate([rng.uniform(-1, 1, 15), [0.0]]),
        ),
    ],
)
def test_second_order_regret_contract(name, K, T, gain_fn):
    regret, squared = run_stream(K, T, gain_fn)
    log_kt = math.log(K * T)
    bound = CONTRACT_C1 * np.sqrt(squared * log_kt) + CONTRACT_C2 * log_kt
    assert np.all(regret <= bound), f"{name}: regret {regret.max()} exceeds contract"


def test_sparse_expert_scale_exponent():
    # regret against an expert active in V rounds grows like V**e with e <= 0.6
    K, T = 16, 2**15
    regrets = []
    for V in (100, 400, 1600):
        gap = T // V

        def gain_fn(t, w, rng, gap=gap, V=V):
            g = np.zeros(K)
            if t % gap == 0 and t // gap < V:
                g[3] = 1.0
            return g

        regret, _ = run_stream(K, T, gain_fn)
        regrets.append(max(regret[3], 1e-9))
    logs_v = np.log([100.0, 400.0, 1600.0])
    logs_r = np.log(regrets)
    slope = float(np.polyfit(logs_v, logs_r, 1)[0])
    assert slope <= 0.6
