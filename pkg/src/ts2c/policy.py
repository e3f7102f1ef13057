"""Minimal policy interface shared by scripted controllers and learned policies."""

import numpy as np


class Policy:
    """Maps observations to actions in environment units.

    ``act_batch`` is the one required method. Stochastic policies override
    ``sample_n`` and provide ``log_prob``; deterministic ones inherit the
    repeated-action default.
    """

    action_dim: int
    stochastic = False

    def act_batch(self, obs, rng=None, deterministic=False) -> np.ndarray:
        raise NotImplementedError

    def act(self, obs, rng=None, deterministic=False) -> np.ndarray:
        return self.act_batch(np.asarray(obs, dtype=np.float64)[None], rng, deterministic)[0]

    def sample_n(self, obs, n, rng) -> np.ndarray:
        """n independent draws at a single observation."""
        obs = np.asarray(obs, dtype=np.float64)
        return self.act_batch(np.repeat(obs[None], n, axis=0), rng)


class FunctionPolicy(Policy):
    """Deterministic policy from a batched function ``fn(obs_batch) -> actions``."""

    def __init__(self, fn, action_dim, name=""):
        self.fn = fn
        self.action_dim = action_dim
        self.name = name

    def act_batch(self, obs, rng=None, deterministic=False):
        return np.asarray(self.fn(np.atleast_2d(obs)), dtype=np.float64)


class RandomPolicy(Policy):
    stochastic = True

    def __init__(self, low, high):
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        self.action_dim = len(self.low)

    def act_batch(self, obs, rng=None, deterministic=False):
        n = np.atleast_2d(obs).shape[0]
        if deterministic:
            return np.repeat(((self.low + self.high) / 2)[None], n, axis=0)
        return rng.uniform(self.low, self.high, size=(n, self.action_dim))
