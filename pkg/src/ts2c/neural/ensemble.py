"""Stacks of Q-networks sharing one architecture."""

import numpy as np

from ts2c.errors import ParameterError
from ts2c.neural.mlp import MLP


class QEnsemble:
    """N critics Q_i(s, a) evaluated together, plus Polyak-averaged target copies.

    Used both as the teacher value ensemble and as SAC's twin critics (N=2).
    Members are drawn from independent seeds spawned from ``rng``.
    """

    def __init__(self, obs_dim, action_dim, hidden, n_members, rng=None, net=None):
        if n_members < 1:
            raise ParameterError("ensemble needs at least one member")
        self.obs_dim = int(obs_dim)
        self.action_dim = int(action_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.n_members = int(n_members)
        self.net = net or MLP([self.obs_dim + self.action_dim, *self.hidden, 1], rng, n_members=self.n_members)
        self.target = self.net.copy()
        self.trained = False

    def copy(self):
        new = QEnsemble(self.obs_dim, self.action_dim, self.hidden, self.n_members, net=self.net.copy())
        new.target = self.target.copy()
        new.trained = self.trained
        return new

    def params(self):
        return self.net.params()

    def descriptor(self):
        return {
            "kind": "q_ensemble",
            "obs_dim": self.obs_dim,
            "action_dim": self.action_dim,
            "hidden": list(self.hidden),
            "n_members": self.n_members,
        }

    @staticmethod
    def _inputs(obs, actions):
        return np.concatenate([np.atleast_2d(obs), np.atleast_2d(actions)], axis=-1)

    def q_values(self, obs, actions, target=False):
        """[N, B] member outputs."""
        net = self.target if target else self.net
        return net.forward(self._inputs(obs, actions))[..., 0]

    def q_values_cache(self, obs, actions):
        y, acts = self.net.forward_cache(self._inputs(obs, actions))
        return y[..., 0], acts

    def action_grad(self, acts, dq):
        """d(sum dq * Q)/d(action) for shared inputs; dq has shape [N, B]."""
        _, dx = self.net.backward(acts, dq[..., None], need_params=False, need_input=True)
        return dx[:, self.obs_dim:]

    def polyak(self, tau):
        self.target.polyak_from(self.net, tau)

    def member_expectations(self, state, actions):
        """m_i = mean over the action list of Q_i(state, a), shape [N]."""
        actions = np.atleast_2d(actions)
        if actions.shape[0] == 0:
            raise ParameterError("action list must be non-empty")
        obs = np.repeat(np.asarray(state, dtype=np.float64)[None], actions.shape[0], axis=0)
        return self.q_values(obs, actions).mean(axis=1)


def ensemble_stats(q: QEnsemble, state, actions):
    """Mean and population variance across members of the action-averaged Q."""
    m = q.member_expectations(state, actions)
    return float(m.mean()), float(m.var())
