"""PPO tests: GAE closed forms and episode boundaries, advantage
normalization, action sampling, a finite-difference gradient check on the
production update path, and checkpoint arrays."""

import numpy as np
import pytest

from instructrl.ppo import (PPOAgent, PPOConfig, compute_gae, log_softmax,
                            normalize_advantages, ppo_loss)


def test_config_defaults_and_validation():
    cfg = PPOConfig()
    assert cfg.n_envs == cfg.workers * cfg.envs_per_worker == 32
    assert cfg.rollout_len == 32 and cfg.batch_size == 1024
    with pytest.raises(ValueError):
        PPOConfig(clip_epsilon=0.0)
    with pytest.raises(ValueError):
        PPOConfig(gamma=1.5)
    with pytest.raises(ValueError):
        PPOConfig(gae_lambda=0.0)


def test_gae_lambda_one_is_returns_minus_values():
    rng = np.random.default_rng(0)
    T, N, gamma = 12, 3, 0.9
    rewards = rng.standard_normal((T, N))
    values = rng.standard_normal((T, N))
    dones = np.zeros((T, N))
    last = rng.standard_normal(N)
    adv, ret = compute_gae(rewards, values, dones, last, gamma, 1.0)
    expect = np.zeros((T, N))
    acc = last.copy()
    for t in reversed(range(T)):
        acc = rewards[t] + gamma * acc
        expect[t] = acc - values[t]
    assert np.allclose(adv, expect, atol=1e-12)
    assert np.allclose(ret, adv + values, atol=1e-12)


def test_gae_lambda_zero_is_td_error():
    rng = np.random.default_rng(1)
    T, N, gamma = 8, 2, 0.97
    rewards = rng.standard_normal((T, N))
    values = rng.standard_normal((T, N))
    dones = (rng.random((T, N)) < 0.2).astype(float)
    last = rng.standard_normal(N)
    adv, _ = compute_gae(rewards, values, dones, last, gamma, 1e-12)
    for t in range(T):
        next_v = last if t == T - 1 else values[t + 1]
        delta = rewards[t] + gamma * next_v * (1 - dones[t]) - values[t]
        assert np.allclose(adv[t], delta, atol=1e-9)


def test_gae_dones_cut_accumulation():
    rewards = np.array([[0.0], [0.0], [10.0]])
    values = np.zeros((3, 1))
    dones = np.array([[0.0], [1.0], [0.0]])
    last = np.array([0.0])
    adv, _ = compute_gae(rewards, values, dones, last, 0.99, 0.95)
    assert adv[0, 0] == 0.0  # the step-2 reward sits past the boundary
    assert adv[2, 0] == 10.0
    with pytest.raises(ValueError):
        compute_gae(rewards, values[:2], dones, last, 0.99, 0.95)


def test_normalize_advantages():
    rng = np.random.default_rng(2)
    adv = rng.standard_normal(100) * 5 + 3
    out = normalize_advantages(adv)
    assert abs(out.mean()) < 1e-12
    assert abs(out.std() - 1.0) < 1e-6
    single = normalize_advantages(np.array([4.2]))
    assert np.allclose(single, 0.0)
    flat = normalize_advantages(np.full(8, 2.5))
    assert np.allclose(flat, 0.0)


def test_log_softmax_stable():
    logits = np.array([[1000.0, 1000.0], [-1000.0, 0.0]])
    lp = log_softmax(logits)
    assert np.all(np.isfinite(lp))
    assert np.allclose(np.exp(lp).sum(axis=1), 1.0)


def test_act_contract():
    agent = PPOAgent(6, 4, PPOConfig(hidden=8), seed=0)
    obs = np.random.default_rng(3).standard_normal((5, 6))
    a1, lp1, v1 = agent.act(obs, np.random.default_rng(9))
    a2, lp2, v2 = agent.act(obs, np.random.default_rng(9))
    assert np.array_equal(a1, a2) and np.array_equal(lp1, lp2)
    assert a1.min() >= 0 and a1.max() < 4
    full = agent.policy(obs)
    assert np.allclose(lp1, full[np.arange(5), a1])
    assert np.allclose(v1, agent.values(obs))
    with pytest.raises(ValueError):
        agent.act(np.array([[np.nan] * 6]), np.random.default_rng(0))


def test_sampling_follows_policy_distribution():
    agent = PPOAgent(3, 3, PPOConfig(hidden=8), seed=1)
    obs = np.tile(np.array([0.3, -0.2, 0.9]), (4000, 1))
    rng = np.random.default_rng(17)
    actions, _, _ = agent.act(obs, rng)
    probs = np.exp(agent.policy(obs[:1]))[0]
    freq = np.bincount(actions, minlength=3) / len(actions)
    assert np.abs(freq - probs).max() < 0.03


def test_greedy_is_argmax():
    agent = PPOAgent(4, 5, PPOConfig(hidden=8), seed=2)
    obs = np.random.default_rng(4).standard_normal((6, 4))
    assert np.array_equal(agent.greedy(obs), agent.policy(obs).argmax(axis=1))


class _Recorder:
    """Stands in for Adam to capture the gradients update() would apply."""

    def __init__(self):
        self.grads = None

    def step(self, params, grads):
        self.grads = [g.copy() for g in grads]


def test_update_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    cfg = PPOConfig(hidden=5, batch_size=64)
    agent = PPOAgent(4, 3, cfg, seed=5)
    for net in (agent.actor, agent.critic):
        for i in range(1, len(net.params), 2):
            net.params[i] += 0.1 * rng.standard_normal(net.params[i].shape)
    B = 8
    obs = rng.standard_normal((B, 4))
    actions = rng.integers(0, 3, B)
    lp_a = agent.policy(obs)[np.arange(B), actions]
    # keep the ratio away from the clip kinks so the loss stays smooth
    offset = rng.choice([-0.3, -0.05, 0.05, 0.3], B)
    logp_old = lp_a - offset
    adv = rng.standard_normal(B)
    returns = rng.standard_normal(B)

    rec_a, rec_c = _Recorder(), _Recorder()
    agent.opt_actor, agent.opt_critic = rec_a, rec_c
    agent._update_minibatch(obs, actions, logp_old, adv, returns)

    h = 1e-6
    for net, rec in ((agent.actor, rec_a), (agent.critic, rec_c)):
        for pi, p in enumerate(net.params):
            flat = p.reshape(-1)
            for j in range(flat.size):
                keep = flat[j]
                flat[j] = keep + h
                up = ppo_loss(agent, obs, actions, logp_old, adv, returns)
                flat[j] = keep - h
                down = ppo_loss(agent, obs, actions, logp_old, adv, returns)
                flat[j] = keep
                fd = (up - down) / (2 * h)
                got = rec.grads[pi].reshape(-1)[j]
                assert abs(got - fd) < 1e-4 * max(1.0, abs(fd)), (pi, j)


def test_update_report_and_learning_signal():
    cfg = PPOConfig(hidden=16, batch_size=32, learning_rate=1e-2)
    agent = PPOAgent(3, 2, cfg, seed=7)
    rng = np.random.default_rng(8)
    obs = rng.standard_normal((64, 3))
    before = [p.copy() for p in agent.actor.params]
    batch = {
        "obs": obs,
        "actions": rng.integers(0, 2, 64),
        "logp_old": np.full(64, np.log(0.5)),
        "advantages": rng.standard_normal(64),
        "returns": rng.standard_normal(64),
    }
    report = agent.update(batch)
    assert set(report) == {"loss", "policy_loss", "value_loss", "entropy",
                           "clip_fraction"}
    assert 0.0 <= report["clip_fraction"] <= 1.0
    assert report["entropy"] > 0.0
    assert any(not np.array_equal(a, b)
               for a, b in zip(before, agent.actor.params))


def test_critic_learns_constant_target():
    cfg = PPOConfig(hidden=16, batch_size=64, learning_rate=5e-3,
                    entropy_coef=0.0)
    agent = PPOAgent(2, 2, cfg, seed=9)
    rng = np.random.default_rng(10)
    obs = rng.standard_normal((64, 2))
    batch = {
        "obs": obs,
        "actions": rng.integers(0, 2, 64),
        "logp_old": np.full(64, np.log(0.5)),
        "advantages": np.zeros(64),
        "returns": np.full(64, 3.0),
    }
    first = agent.update(batch)["value_loss"]
    for _ in range(400):
        last = agent.update(batch)["value_loss"]
    assert last < first * 0.05


def test_state_arrays_round_trip():
    agent = PPOAgent(5, 4, PPOConfig(hidden=8), seed=3)
    obs = np.random.default_rng(6).standard_normal((4, 5))
    want = agent.policy(obs)
    saved = {k: v.copy() for k, v in agent.state_arrays().items()}
    clone = PPOAgent(5, 4, PPOConfig(hidden=8), seed=99)
    assert not np.allclose(clone.policy(obs), want)
    clone.load_state_arrays(saved)
    assert np.allclose(clone.policy(obs), want)
    bad = dict(saved)
    bad["actor_0"] = np.zeros((2, 2))
    with pytest.raises(ValueError):
        clone.load_state_arrays(bad)
