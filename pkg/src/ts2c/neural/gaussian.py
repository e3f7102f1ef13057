"""Tanh-squashed Gaussian policy with reparameterised sampling."""

from dataclasses import dataclass

import numpy as np

from ts2c.neural.mlp import MLP
from ts2c.policy import Policy

LOG_STD_MIN, LOG_STD_MAX = -20.0, 2.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


def log1m_tanh_sq(u):
    """log(1 - tanh(u)^2), stable for large |u|."""
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


@dataclass
class PolicySample:
    action: np.ndarray  # environment units, [B, A]
    log_prob: np.ndarray  # [B]
    acts: list
    noise: np.ndarray
    pre_tanh: np.ndarray
    squashed: np.ndarray
    std: np.ndarray
    std_mask: np.ndarray  # 1 where log-std is not clamped


class GaussianPolicy(Policy):
    stochastic = True

    def __init__(self, obs_dim, action_dim, hidden, low, high, rng=None, trunk=None):
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.low = np.asarray(low, dtype=np.float64).reshape(self.action_dim)
        self.high = np.asarray(high, dtype=np.float64).reshape(self.action_dim)
        self.center = (self.high + self.low) / 2.0
        self.half = (self.high - self.low) / 2.0
        self._log_half = float(np.sum(np.log(self.half)))
        self.trunk = trunk or MLP([self.obs_dim, *self.hidden, 2 * self.action_dim], rng)

    def params(self):
        return self.trunk.params()

    def copy(self):
        return GaussianPolicy(self.obs_dim, self.action_dim, self.hidden, self.low, self.high,
                              trunk=self.trunk.copy())

    def descriptor(self):
        return {
            "kind": "gaussian_policy",
            "obs_dim": self.obs_dim,
            "action_dim": self.action_dim,
            "hidden": list(self.hidden),
            "low": self.low.tolist(),
            "high": self.high.tolist(),
        }

    def distribution(self, obs):
        """Mean and clamped log-std of the pre-squash Gaussian."""
        y = self.trunk.forward(np.atleast_2d(obs))
        A = self.action_dim
        return y[:, :A], np.clip(y[:, A:], LOG_STD_MIN, LOG_STD_MAX)

    def sample(self, obs, rng=None, noise=None) -> PolicySample:
        """Reparameterised draw; pass ``noise`` to fix the standard-normal input."""
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        y, acts = self.trunk.forward_cache(obs)
        A = self.action_dim
        mean, raw = y[:, :A], y[:, A:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        mask = ((raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)).astype(np.float64)
        std = np.exp(log_std)
        if noise is None:
            noise = rng.standard_normal(mean.shape)
        u = mean + std * noise
        t = np.tanh(u)
        logp = np.sum(-0.5 * noise**2 - log_std - _HALF_LOG_2PI - log1m_tanh_sq(u), axis=1) - self._log_half
        action = self.center + self.half * t
        return PolicySample(action, logp, acts, noise, u, t, std, mask)

    def backward(self, s: PolicySample, d_action, d_logp):
        """Parameter gradients given dL/d(action) [B, A] and dL/d(log_prob) [B]."""
        d_logp = np.asarray(d_logp, dtype=np.float64).reshape(-1, 1)
        du = d_action * self.half * (1.0 - s.squashed**2) + d_logp * 2.0 * s.squashed
        d_mean = du
        d_logstd = (du * s.std * s.noise - d_logp) * s.std_mask
        grads, _ = self.trunk.backward(s.acts, np.concatenate([d_mean, d_logstd], axis=1))
        return grads

    def log_prob(self, obs, actions):
        """Exact log-density of environment-unit actions."""
        mean, log_std = self.distribution(obs)
        a = np.atleast_2d(np.asarray(actions, dtype=np.float64))
        t = np.clip((a - self.center) / self.half, -1.0 + 1e-15, 1.0 - 1e-15)
        u = np.arctanh(t)
        z = (u - mean) / np.exp(log_std)
        return np.sum(-0.5 * z**2 - log_std - _HALF_LOG_2PI - log1m_tanh_sq(u), axis=1) - self._log_half

    def act_batch(self, obs, rng=None, deterministic=False):
        if deterministic:
            mean, _ = self.distribution(obs)
            return self.center + self.half * np.tanh(mean)
        return self.sample(obs, rng).action


def policy_sample(pi: GaussianPolicy, state, rng):
    """Single reparameterised draw: (action, log_prob)."""
    s = pi.sample(np.asarray(state, dtype=np.float64)[None], rng)
    return s.action[0], float(s.log_prob[0])
