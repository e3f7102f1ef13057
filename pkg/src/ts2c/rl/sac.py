"""Soft actor-critic with the intervention-penalised critic target.

With ``lam = 0`` and no flagged transitions the update is plain SAC. The loss
functions are module-level so the gradient checks can drive them directly.
"""

from dataclasses import dataclass

import numpy as np

from ts2c.errors import NumericError, ParameterError
from ts2c.neural.adam import Adam
from ts2c.neural.ensemble import QEnsemble
from ts2c.neural.gaussian import GaussianPolicy
from ts2c.rl.buffer import Batch

TARGET_ACTORS = ("student", "behavior")


@dataclass
class SacConfig:
    hidden: tuple = (256, 256)
    gamma: float = 0.99
    tau: float = 0.005
    lr: float = 1e-4
    batch_size: int = 256
    buffer_capacity: int = 1_000_000
    init_alpha: float = 1.0
    target_entropy: float | None = None  # None -> -action_dim
    single_critic: bool = False
    target_actor: str = "student"
    learning_starts: int = 256
    random_steps: int = 0  # uniform-random exploration before the policy acts (plain SAC only)
    updates_per_step: int = 1

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ParameterError("tau must lie in (0, 1]")
        if self.lr <= 0 or self.batch_size < 1 or self.init_alpha <= 0:
            raise ParameterError("lr, batch_size and init_alpha must be positive")
        if self.target_actor not in TARGET_ACTORS:
            raise ParameterError(f"target_actor must be one of {TARGET_ACTORS}")
        self.hidden = tuple(self.hidden)


def _check(name, value):
    if not np.isfinite(value):
        raise NumericError(f"non-finite {name}: {value}")
    return float(value)


# losses ----------------------------------------------------------------


def critic_loss(critics: QEnsemble, obs, act, y):
    """sum over critics of mean_b (Q_i(s, a) - y)^2, and its parameter gradients."""
    q, acts = critics.q_values_cache(obs, act)
    diff = q - y[None, :]
    loss = _check("critic loss", np.sum(np.mean(diff**2, axis=1)))
    grads, _ = critics.net.backward(acts, (2.0 * diff / len(y))[..., None])
    return loss, grads


def actor_loss(policy: GaussianPolicy, critics: QEnsemble, obs, noise, alpha):
    """mean_b (alpha log pi(a|s) - min_i Q_i(s, a)) with a reparameterised by ``noise``.

    Returns (loss, policy grads, log_prob of the sampled actions).
    """
    s = policy.sample(obs, noise=noise)
    q, acts = critics.q_values_cache(obs, s.action)
    B = len(obs)
    which = np.argmin(q, axis=0)
    q_min = q[which, np.arange(B)]
    loss = _check("actor loss", np.mean(alpha * s.log_prob - q_min))
    dq = np.zeros_like(q)
    dq[which, np.arange(B)] = -1.0 / B
    d_action = critics.action_grad(acts, dq)
    grads = policy.backward(s, d_action, np.full(B, alpha / B))
    return loss, grads, s.log_prob


def alpha_loss(log_alpha, log_prob, target_entropy):
    """-alpha * mean(log pi + target_entropy), differentiated w.r.t. log alpha."""
    alpha = np.exp(log_alpha)
    m = np.mean(log_prob + target_entropy)
    loss = _check("alpha loss", -alpha * m)
    return loss, -alpha * m


def soft_target(policy, critics, batch: Batch, alpha, gamma, lam, rng, teacher=None, target_actor="student"):
    """y' = r - lam * next_intervention + gamma (1 - done)(min target Q(s', a') - alpha log pi(a'|s'))."""
    s = policy.sample(batch.next_state, rng)
    a2, logp2 = s.action, s.log_prob
    if target_actor == "behavior":
        flagged = batch.next_intervention > 0.5
        if teacher is None:
            raise ParameterError("target_actor=behavior needs the teacher policy")
        if np.any(flagged):
            a2 = a2.copy()
            logp2 = logp2.copy()
            s_flag = batch.next_state[flagged]
            a2[flagged] = teacher.act_batch(s_flag, rng)
            # deterministic teachers carry no entropy term
            logp2[flagged] = teacher.log_prob(s_flag, a2[flagged]) if teacher.stochastic else 0.0
    q_targ = critics.q_values(batch.next_state, a2, target=True).min(axis=0)
    return batch.reward - lam * batch.next_intervention + gamma * (1.0 - batch.done) * (q_targ - alpha * logp2)


# learner ---------------------------------------------------------------


class SacLearner:
    def __init__(self, obs_dim, action_dim, low, high, cfg: SacConfig, rng):
        self.cfg = cfg
        self.obs_dim, self.action_dim = int(obs_dim), int(action_dim)
        self.rng = rng
        self.policy = GaussianPolicy(obs_dim, action_dim, cfg.hidden, low, high, rng)
        self.critics = QEnsemble(obs_dim, action_dim, cfg.hidden, 1 if cfg.single_critic else 2, rng)
        self.log_alpha = np.array([np.log(cfg.init_alpha)])
        self.target_entropy = -float(action_dim) if cfg.target_entropy is None else float(cfg.target_entropy)
        self.pi_opt = Adam(self.policy.params(), cfg.lr)
        self.q_opt = Adam(self.critics.params(), cfg.lr)
        self.alpha_opt = Adam([self.log_alpha], cfg.lr)
        self.n_updates = 0

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    def update(self, batch: Batch, lam: float = 0.0, teacher=None) -> dict:
        if len(batch) == 0:
            raise ParameterError("empty batch")
        if lam < 0:
            raise ParameterError("lambda must be non-negative")
        cfg = self.cfg
        alpha = self.alpha
        y = soft_target(self.policy, self.critics, batch, alpha, cfg.gamma, lam, self.rng, teacher, cfg.target_actor)
        q_loss, q_grads = critic_loss(self.critics, batch.state, batch.action, y)
        self.q_opt.step(q_grads)

        noise = self.rng.standard_normal((len(batch), self.action_dim))
        pi_loss, pi_grads, logp = actor_loss(self.policy, self.critics, batch.state, noise, alpha)
        self.pi_opt.step(pi_grads)

        a_loss, a_grad = alpha_loss(self.log_alpha[0], logp, self.target_entropy)
        self.alpha_opt.step([np.array([a_grad])])

        self.critics.polyak(cfg.tau)
        self.n_updates += 1
        return {"critic_loss": q_loss, "actor_loss": pi_loss, "alpha_loss": a_loss,
                "alpha": self.alpha, "entropy": float(-np.mean(logp))}
