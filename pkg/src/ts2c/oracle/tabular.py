"""Exact returns, value functions, occupancy measures and intervention maps on finite MDPs."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ts2c.env.tabular_mdp import TabularMDP
from ts2c.errors import DomainError, ParameterError, Ts2cError

MAX_STATES = 64


@dataclass(frozen=True)
class TabularPolicy:
    probs: np.ndarray  # [S, A], rows stochastic

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 2:
            raise ParameterError("policy probs must be a matrix [S, A]")
        if np.any(p < 0) or np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
            raise ParameterError("policy rows must be probability vectors")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_states(self):
        return self.probs.shape[0]

    @property
    def n_actions(self):
        return self.probs.shape[1]

    @classmethod
    def deterministic(cls, actions, n_actions):
        actions = np.asarray(actions, dtype=int)
        p = np.zeros((len(actions), n_actions))
        p[np.arange(len(actions)), actions] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, n_states, n_actions):
        return cls(np.full((n_states, n_actions), 1.0 / n_actions))

    @classmethod
    def random(cls, n_states, n_actions, rng, concentration=1.0):
        p = rng.dirichlet(np.full(n_actions, concentration), size=n_states)
        return cls(p / p.sum(axis=1, keepdims=True))


@dataclass(frozen=True)
class InterventionMap:
    flags: np.ndarray  # [S] of {0, 1}

    def __post_init__(self):
        f = np.asarray(self.flags)
        if f.ndim != 1 or not np.all((f == 0) | (f == 1)):
            raise ParameterError("intervention flags must be a binary vector")
        f = f.astype(np.int64)
        f.setflags(write=False)
        object.__setattr__(self, "flags", f)

    @classmethod
    def constant(cls, n_states, value):
        return cls(np.full(n_states, int(value)))


def _check(mdp: TabularMDP, *policies: TabularPolicy):
    if mdp.n_states > MAX_STATES:
        raise ParameterError(f"exact oracle supports at most {MAX_STATES} states")
    for pi in policies:
        if pi.probs.shape != (mdp.n_states, mdp.n_actions):
            raise ParameterError(
                f"policy shape {pi.probs.shape} does not match MDP ({mdp.n_states}, {mdp.n_actions})"
            )


def state_transition(mdp: TabularMDP, pi: TabularPolicy) -> np.ndarray:
    """P_pi[s, s'] = sum_a pi(a|s) P(s'|s,a)."""
    return np.einsum("sa,sat->st", pi.probs, mdp.transition)


def exact_value(mdp: TabularMDP, pi: TabularPolicy, reward=None):
    """Solve (I - gamma P_pi) V = r_pi and return (V, Q).

    ``reward`` overrides ``mdp.reward`` (used for cost and combined-reward values).
    """
    _check(mdp, pi)
    r = mdp.reward if reward is None else np.asarray(reward, dtype=np.float64)
    if r.shape != (mdp.n_states, mdp.n_actions):
        raise ParameterError("reward override has the wrong shape")
    P_pi = state_transition(mdp, pi)
    r_pi = np.sum(pi.probs * r, axis=1)
    A = np.eye(mdp.n_states) - mdp.gamma * P_pi
    V = scipy.linalg.solve(A, r_pi)
    Q = r + mdp.gamma * mdp.transition @ V
    return V, Q


def occupancy(mdp: TabularMDP, pi: TabularPolicy) -> np.ndarray:
    """Normalised discounted state distribution: d = (1-gamma) d0 + gamma P_pi^T d."""
    _check(mdp, pi)
    P_pi = state_transition(mdp, pi)
    A = np.eye(mdp.n_states) - mdp.gamma * P_pi.T
    try:
        d = scipy.linalg.solve(A, (1.0 - mdp.gamma) * mdp.initial_dist)
    except scipy.linalg.LinAlgError as exc:  # gamma < 1 keeps A non-singular
        raise Ts2cError(f"occupancy system is singular: {exc}") from exc
    # round-off can leave tiny negatives
    return np.clip(d, 0.0, None)


def policy_return(mdp: TabularMDP, pi: TabularPolicy, reward=None) -> float:
    V, _ = exact_value(mdp, pi, reward)
    return float(mdp.initial_dist @ V)


def policy_return_from_occupancy(mdp: TabularMDP, pi: TabularPolicy, reward=None) -> float:
    r = mdp.reward if reward is None else np.asarray(reward, dtype=np.float64)
    d = occupancy(mdp, pi)
    return float(d @ np.sum(pi.probs * r, axis=1) / (1.0 - mdp.gamma))


def discounted_cost(mdp: TabularMDP, pi: TabularPolicy) -> float:
    return policy_return(mdp, pi, reward=mdp.cost)


def entropy(pi: TabularPolicy) -> np.ndarray:
    """Per-state Shannon entropy in nats."""
    p = pi.probs
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, -p * np.log(p), 0.0)
    return terms.sum(axis=1)


def discrepancy(pit: TabularPolicy, pis: TabularPolicy) -> np.ndarray:
    """Per-state L1 distance between action distributions."""
    return np.abs(pit.probs - pis.probs).sum(axis=1)


def mix_policy(pit: TabularPolicy, pis: TabularPolicy, T: InterventionMap) -> TabularPolicy:
    """Behavior policy: teacher rows where T(s)=1, student rows elsewhere."""
    if pit.probs.shape != pis.probs.shape or T.flags.shape != (pit.n_states,):
        raise ParameterError("teacher, student and intervention map dimensions disagree")
    take = T.flags.astype(bool)[:, None]
    return TabularPolicy(np.where(take, pit.probs, pis.probs))


def weighted_intervention_rate(mdp, pit, pis, T) -> float:
    """Intervention rate under d_{pi_b}, weighted by per-state policy discrepancy.

    Zero when the two policies coincide everywhere (the map is then irrelevant).
    """
    _check(mdp, pit, pis)
    d_b = occupancy(mdp, mix_policy(pit, pis, T))
    delta = discrepancy(pit, pis)
    den = float(d_b @ delta)
    if den <= 0.0:
        return 0.0
    beta = float(d_b @ (T.flags * delta)) / den
    return min(max(beta, 0.0), 1.0)


def action_expected_loglik(pit: TabularPolicy, pis: TabularPolicy) -> np.ndarray:
    """E_{a ~ pi_t(.|s)} log pi_s(a|s) per state.

    Raises DomainError listing the states where the teacher puts mass on an
    action the student never takes.
    """
    bad = np.any((pit.probs > 0) & (pis.probs <= 0), axis=1)
    if np.any(bad):
        states = np.flatnonzero(bad).tolist()
        raise DomainError(f"log of zero student probability in states {states}", states)
    with np.errstate(divide="ignore"):
        logs = np.where(pit.probs > 0, np.log(np.where(pis.probs > 0, pis.probs, 1.0)), 0.0)
    return np.sum(pit.probs * logs, axis=1)


def action_intervention(mdp, pit, pis, eps: float) -> InterventionMap:
    """Intervene where the student's expected log-likelihood of teacher actions is below eps."""
    _check(mdp, pit, pis)
    if not np.isfinite(eps):
        raise ParameterError("eps must be finite")
    return InterventionMap((action_expected_loglik(pit, pis) < eps).astype(int))


def value_gap(mdp, pit, pis, reward=None) -> np.ndarray:
    """V^{pi_t}(s) - E_{a ~ pi_s} Q^{pi_t}(s, a) per state."""
    _check(mdp, pit, pis)
    V, Q = exact_value(mdp, pit, reward)
    return V - np.sum(pis.probs * Q, axis=1)


def value_intervention(mdp, pit, pis, eps: float, reward=None) -> InterventionMap:
    """Intervene where the teacher's value beats the student's action by more than eps."""
    if not eps > 0:
        raise ParameterError("eps must be positive for the value-based map")
    return InterventionMap((value_gap(mdp, pit, pis, reward) > eps).astype(int))


def optimal_policy(mdp: TabularMDP, reward=None, max_iter=1000) -> TabularPolicy:
    """Deterministic optimal policy by policy iteration."""
    r = mdp.reward if reward is None else reward
    actions = np.zeros(mdp.n_states, dtype=int)
    for _ in range(max_iter):
        pi = TabularPolicy.deterministic(actions, mdp.n_actions)
        _, Q = exact_value(mdp, pi, r)
        current = Q[np.arange(mdp.n_states), actions]
        best = Q.argmax(axis=1)
        # switch only on strict improvement to avoid cycling between ties
        improve = Q[np.arange(mdp.n_states), best] > current + 1e-12
        if not np.any(improve):
            return pi
        actions = np.where(improve, best, actions)
    raise Ts2cError("policy iteration did not converge")


def value_iteration_eval(mdp: TabularMDP, pi: TabularPolicy, sweeps: int) -> np.ndarray:
    """Iterative policy evaluation, kept as an independent check of the linear solve."""
    V = np.zeros(mdp.n_states)
    r_pi = np.sum(pi.probs * mdp.reward, axis=1)
    P_pi = state_transition(mdp, pi)
    for _ in range(sweeps):
        V = r_pi + mdp.gamma * P_pi @ V
    return V
