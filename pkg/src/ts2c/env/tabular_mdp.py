"""Finite MDPs used by the exact oracle."""

from dataclasses import dataclass

import numpy as np

from ts2c.errors import ParameterError

_STOCH_TOL = 1e-12


@dataclass(frozen=True)
class TabularMDP:
    """Finite discounted MDP.

    Attributes:
        transition: P[s, a, s'] with rows summing to one.
        reward: r[s, a].
        cost: c[s, a] >= 0 (safety cost, used by the cost bound).
        gamma: discount in (0, 1).
        initial_dist: d0[s].
    """

    transition: np.ndarray
    reward: np.ndarray
    cost: np.ndarray
    gamma: float
    initial_dist: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.transition, dtype=np.float64)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ParameterError(f"transition must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        r = np.asarray(self.reward, dtype=np.float64)
        c = np.asarray(self.cost, dtype=np.float64)
        d0 = np.asarray(self.initial_dist, dtype=np.float64)
        if r.shape != (S, A) or c.shape != (S, A):
            raise ParameterError("reward and cost must have shape (S, A)")
        if d0.shape != (S,):
            raise ParameterError("initial_dist must have shape (S,)")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > _STOCH_TOL:
            raise ParameterError("transition rows must be probability vectors")
        if np.any(d0 < 0) or abs(d0.sum() - 1.0) > _STOCH_TOL:
            raise ParameterError("initial_dist must be a probability vector")
        if np.any(c < 0):
            raise ParameterError("cost must be non-negative")
        if not np.all(np.isfinite(r)):
            raise ParameterError("reward must be finite")
        if not (0.0 < float(self.gamma) < 1.0):
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        for name, arr in (("transition", P), ("reward", r), ("cost", c), ("initial_dist", d0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    @property
    def r_max(self) -> float:
        return float(self.reward.max())

    @property
    def r_min(self) -> float:
        return float(self.reward.min())

    def with_reward(self, reward) -> "TabularMDP":
        return TabularMDP(self.transition, reward, self.cost, self.gamma, self.initial_dist)


def make_random_mdp(n_states: int, n_actions: int, gamma: float, seed: int) -> TabularMDP:
    """Random instance: Dirichlet(1) rows, U[0,1] rewards, Bernoulli(0.2) costs, uniform d0."""
    if int(n_states) != n_states or n_states < 2:
        raise ParameterError(f"n_states must be an integer >= 2, got {n_states}")
    if int(n_actions) != n_actions or n_actions < 2:
        raise ParameterError(f"n_actions must be an integer >= 2, got {n_actions}")
    if not (0.0 < gamma < 1.0):
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    # renormalise so row sums are within a few ulps of one
    P /= P.sum(axis=2, keepdims=True)
    r = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    c = (rng.uniform(size=(n_states, n_actions)) < 0.2).astype(np.float64)
    d0 = np.full(n_states, 1.0 / n_states)
    return TabularMDP(P, r, c, gamma, d0)


def two_state_mdp(gamma: float = 0.5) -> TabularMDP:
    """Hand-checkable instance.

    In s0, action 0 stays with reward 0 and action 1 moves to the absorbing
    state s1 with reward 1. Every action in s1 pays 1. The start state is s0.
    """
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1.0
    P[0, 1, 1] = 1.0
    P[1, :, 1] = 1.0
    r = np.array([[0.0, 1.0], [1.0, 1.0]])
    return TabularMDP(P, r, np.zeros((2, 2)), gamma, np.array([1.0, 0.0]))


def sample_step(mdp: TabularMDP, state: int, action: int, rng: np.random.Generator) -> int:
    return int(rng.choice(mdp.n_states, p=mdp.transition[state, action]))
