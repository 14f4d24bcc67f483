"""PPO with the clipped surrogate objective and GAE, on top of the manual
MLPs in nets.py. The actor and critic are separate networks over the same
observation-plus-goal input; the update maximizes

    E[min(rho * A, clip(rho, 1-eps, 1+eps) * A)]
    - value_coef * MSE(V, returns) + entropy_coef * entropy

with exact hand-derived gradients through the softmax policy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import MLP, Adam


@dataclass
class PPOConfig:
    learning_rate: float = 1e-4
    gamma: float = 0.99
    rollout_len: int = 32
    clip_epsilon: float = 0.1
    batch_size: int = 1024
    epochs: int = 1
    entropy_coef: float = 0.003
    value_coef: float = 0.5
    gae_lambda: float = 0.95
    workers: int = 4
    envs_per_worker: int = 8
    hidden: int = 256

    def __post_init__(self):
        if not 0 < self.clip_epsilon < 1:
            raise ValueError("clip_epsilon must lie in (0,1)")
        if not 0 < self.gamma <= 1 or not 0 < self.gae_lambda <= 1:
            raise ValueError("gamma and gae_lambda must lie in (0,1]")

    @property
    def n_envs(self) -> int:
        return self.workers * self.envs_per_worker


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    dones: np.ndarray,
    last_values: np.ndarray,
    gamma: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Time-major (T, N) arrays; dones[t] marks transitions that ended the
    episode at step t, cutting bootstrap and accumulation across the boundary."""
    if not rewards.shape == values.shape == dones.shape:
        raise ValueError("rewards, values and dones must share a shape")
    T = rewards.shape[0]
    adv = np.zeros_like(values)
    carry = np.zeros_like(last_values)
    for t in reversed(range(T)):
        next_v = last_values if t == T - 1 else values[t + 1]
        nonterminal = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_v * nonterminal - values[t]
        carry = delta + gamma * lam * nonterminal * carry
        adv[t] = carry
    return adv, adv + values


def normalize_advantages(adv: np.ndarray) -> np.ndarray:
    if adv.size <= 1:
        return adv - adv.mean()
    return (adv - adv.mean()) / (adv.std() + 1e-8)


class PPOAgent:
    def __init__(self, obs_dim: int, n_actions: int, cfg: PPOConfig, seed: int = 0):
        self.cfg = cfg
        self.obs_dim = obs_dim
        self.n_actions = n_actions
        rng = np.random.default_rng(seed)
        h = cfg.hidden
        self.actor = MLP([obs_dim, h, h, n_actions], rng, out_gain=0.01)
        self.critic = MLP([obs_dim, h, h, 1], rng, out_gain=1.0)
        self.opt_actor = Adam(self.actor.params, lr=cfg.learning_rate)
        self.opt_critic = Adam(self.critic.params, lr=cfg.learning_rate)

    # -- acting --------------------------------------------------------------

    def policy(self, obs: np.ndarray) -> np.ndarray:
        return log_softmax(self.actor(np.atleast_2d(obs)))

    def act(self, obs: np.ndarray, rng: np.random.Generator):
        """Sample actions for a batch of observations; returns
        (actions, log_probs, values)."""
        obs = np.atleast_2d(obs)
        if not np.all(np.isfinite(obs)):
            raise ValueError("non-finite observation")
        logp = self.policy(obs)
        if not np.all(np.isfinite(logp)):
            raise RuntimeError("non-finite policy output")
        probs = np.exp(logp)
        u = rng.random((obs.shape[0], 1))
        actions = (probs.cumsum(axis=1) < u).sum(axis=1)
        actions = np.minimum(actions, self.n_actions - 1)
        values = self.critic(obs)[:, 0]
        return actions, logp[np.arange(len(actions)), actions], values

    def greedy(self, obs: np.ndarray) -> np.ndarray:
        return self.policy(obs).argmax(axis=1)

    def values(self, obs: np.ndarray) -> np.ndarray:
        return self.critic(np.atleast_2d(obs))[:, 0]

    # -- learning --------------------------------------------------------------

    def update(self, batch: dict) -> dict:
        """One PPO update over the collected batch. batch keys: obs, actions,
        logp_old, advantages, returns (flat, row-aligned)."""
        cfg = self.cfg
        obs = batch["obs"]
        actions = batch["actions"]
        logp_old = batch["logp_old"]
        adv = normalize_advantages(batch["advantages"])
        returns = batch["returns"]
        n = len(obs)
        report: dict[str, float] = {}
        order = np.arange(n)
        for _ in range(cfg.epochs):
            for start in range(0, n, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                report = self._update_minibatch(
                    obs[idx], actions[idx], logp_old[idx], adv[idx], returns[idx]
                )
        return report

    def _update_minibatch(self, obs, actions, logp_old, adv, returns) -> dict:
        cfg = self.cfg
        B = len(obs)
        rows = np.arange(B)

        logits, acts_a = self.actor.forward(obs)
        logp = log_softmax(logits)
        probs = np.exp(logp)
        lp_a = logp[rows, actions]
        rho = np.exp(lp_a - logp_old)

        unclipped = rho * adv
        clipped = np.clip(rho, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv
        policy_obj = np.minimum(unclipped, clipped)
        entropy = -(probs * logp).sum(axis=1)

        v, acts_c = self.critic.forward(obs)
        v = v[:, 0]
        v_err = v - returns

        loss = (
            -policy_obj.mean()
            + cfg.value_coef * np.mean(v_err**2)
            - cfg.entropy_coef * entropy.mean()
        )
        if not np.isfinite(loss):
            raise RuntimeError(
                f"non-finite loss: policy={-policy_obj.mean()}, "
                f"value={np.mean(v_err ** 2)}, entropy={entropy.mean()}"
            )

        # gradient through rho is zero where the clipped branch is active and
        # saturated; elsewhere d obj/d rho = adv
        inside = np.abs(rho - 1.0) < cfg.clip_epsilon
        take_unclipped = unclipped <= clipped
        g_lp = np.where(take_unclipped | inside, adv, 0.0) * rho / B

        # loss = -objective; d lp_a / d logit_k = 1{k=a} - p_k
        dlogits = g_lp[:, None] * probs
        dlogits[rows, actions] -= g_lp
        # entropy term of the loss: -coef * mean(H), d H / d logit_k = -p_k (logp_k + H)
        dlogits += (cfg.entropy_coef / B) * probs * (logp + entropy[:, None])

        grads_a = self.actor.backward(acts_a, dlogits)

        dv = (2.0 * cfg.value_coef / B) * v_err
        grads_c = self.critic.backward(acts_c, dv[:, None])

        self.opt_actor.step(self.actor.params, grads_a)
        self.opt_critic.step(self.critic.params, grads_c)

        return {
            "loss": float(loss),
            "policy_loss": float(-policy_obj.mean()),
            "value_loss": float(np.mean(v_err**2)),
            "entropy": float(entropy.mean()),
            "clip_fraction": float(np.mean(~take_unclipped)),
        }

    # -- persistence -------------------------------------------------------------

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, net in (("actor", self.actor), ("critic", self.critic)):
            for i, p in enumerate(net.params):
                out[f"{prefix}_{i}"] = p
        return out

    def load_state_arrays(self, arrays: dict) -> None:
        for prefix, net in (("actor", self.actor), ("critic", self.critic)):
            for i in range(len(net.params)):
                key = f"{prefix}_{i}"
                if arrays[key].shape != net.params[i].shape:
                    raise ValueError(f"shape mismatch for {key}")
                net.params[i][...] = arrays[key]


def ppo_loss(agent: PPOAgent, obs, actions, logp_old, adv, returns) -> float:
    """Scalar PPO loss at the agent's current parameters, for gradient checks."""
    cfg = agent.cfg
    rows = np.arange(len(obs))
    logp = log_softmax(agent.actor(obs))
    probs = np.exp(logp)
    lp_a = logp[rows, actions]
    rho = np.exp(lp_a - logp_old)
    unclipped = rho * adv
    clipped = np.clip(rho, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv
    entropy = -(probs * logp).sum(axis=1)
    v = agent.critic(obs)[:, 0]
    return float(
        -np.minimum(unclipped, clipped).mean()
        + cfg.value_coef * np.mean((v - returns) ** 2)
        - cfg.entropy_coef * entropy.mean()
    )
