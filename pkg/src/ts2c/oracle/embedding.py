"""Finite MDPs seen through the continuous-control interfaces.

States and actions become one-hot vectors so that the ensemble-based
decision rule can be compared with the exact value rule on the same problem.
"""

import numpy as np

from ts2c.env.tabular_mdp import TabularMDP
from ts2c.errors import ParameterError
from ts2c.neural.adam import Adam
from ts2c.neural.ensemble import QEnsemble
from ts2c.oracle.tabular import TabularPolicy
from ts2c.policy import Policy


def one_hot(index, n):
    out = np.zeros((np.size(index), n))
    out[np.arange(np.size(index)), np.ravel(index)] = 1.0
    return out


class OneHotPolicy(Policy):
    """Tabular policy acting on one-hot states and emitting one-hot actions."""

    stochastic = True

    def __init__(self, pi: TabularPolicy):
        self.pi = pi
        self.action_dim = pi.n_actions

    def act_batch(self, obs, rng=None, deterministic=False):
        s = np.argmax(np.atleast_2d(obs), axis=1)
        probs = self.pi.probs[s]
        if deterministic:
            return one_hot(np.argmax(probs, axis=1), self.action_dim)
        u = rng.uniform(size=(len(s), 1))
        # inverse-cdf draw per row; the clamp guards against round-off at the top
        a = np.minimum((np.cumsum(probs, axis=1) < u).sum(axis=1), self.action_dim - 1)
        return one_hot(a, self.action_dim)


def all_pairs(mdp: TabularMDP):
    """One-hot (state, action) inputs for every pair, in (s, a) row-major order."""
    S, A = mdp.n_states, mdp.n_actions
    s = np.repeat(np.arange(S), A)
    a = np.tile(np.arange(A), S)
    return one_hot(s, S), one_hot(a, A)


def ensemble_q_table(ensemble: QEnsemble, mdp: TabularMDP, target=False):
    """Member Q-values as an array [N, S, A]."""
    obs, act = all_pairs(mdp)
    return ensemble.q_values(obs, act, target=target).reshape(ensemble.n_members, mdp.n_states, mdp.n_actions)


def bellman_residual(ensemble: QEnsemble, mdp: TabularMDP, pit: TabularPolicy) -> float:
    """max over (s, a) of |Mean Q - (r + gamma E[Mean Q(s', a')])| with a' ~ pi_t."""
    q = ensemble_q_table(ensemble, mdp).mean(axis=0)
    v = np.sum(pit.probs * q, axis=1)
    return float(np.max(np.abs(q - (mdp.reward + mdp.gamma * mdp.transition @ v))))


def fit_teacher_ensemble(mdp: TabularMDP, pit: TabularPolicy, n_members=10, hidden=(64, 64), lr=1e-3,
                         tau=0.05, residual_tol=0.01, max_iters=50_000, seed=0):
    """Fit each member to the teacher's Bellman equation with exact expected targets.

    Iterates full-batch updates over every (s, a) pair until the residual of
    the ensemble mean falls below ``residual_tol``. Returns (ensemble, residual, iterations).
    """
    if mdp.n_states * mdp.n_actions > 4096:
        raise ParameterError("instance too large for full-batch fitting")
    rng = np.random.default_rng(seed)
    ens = QEnsemble(mdp.n_states, mdp.n_actions, hidden, n_members, rng)
    opt = Adam(ens.params(), lr)
    obs, act = all_pairs(mdp)
    S, A = mdp.n_states, mdp.n_actions
    residual = np.inf
    for it in range(1, max_iters + 1):
        q_targ = ensemble_q_table(ens, mdp, target=True).mean(axis=0)
        v_targ = np.sum(pit.probs * q_targ, axis=1)
        y = (mdp.reward + mdp.gamma * mdp.transition @ v_targ).reshape(S * A)
        q, acts = ens.q_values_cache(obs, act)
        diff = q - y[None, :]
        grads, _ = ens.net.backward(acts, (2.0 * diff / diff.size)[..., None])
        opt.step(grads)
        ens.polyak(tau)
        if it % 100 == 0:
            residual = bellman_residual(ens, mdp, pit)
            if residual < residual_tol:
                break
    ens.trained = True
    return ens, residual, it
