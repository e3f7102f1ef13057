"""Intervention functions for continuous state spaces.

Each decision compares teacher and student at a single state and reports
whether the teacher takes over. The ensemble-based rule fires on either a
value gap (teacher expected Q minus student expected Q) or on ensemble
disagreement about the student's expected Q.
"""

from dataclasses import dataclass

import numpy as np

from ts2c.errors import NumericError, ParameterError, StateError
from ts2c.oracle.tabular import value_gap

KINDS = ("action", "value", "ts2c", "importance")
TRIGGERS = ("gap", "variance", "none")


@dataclass(frozen=True)
class InterventionDecision:
    intervene: bool
    mean_gap: float
    variance: float
    trigger: str

    def __post_init__(self):
        if self.trigger not in TRIGGERS:
            raise ParameterError(f"trigger must be one of {TRIGGERS}")
        if self.intervene != (self.trigger != "none"):
            raise ParameterError("intervene must agree with the trigger label")


@dataclass
class InterventionConfig:
    kind: str = "ts2c"
    eps: float = 0.0
    eps1: float = 1.2
    eps2: float = 2.5
    n_action_samples: int = 8
    lam: float = 1.0
    range_N: int = 10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"intervention kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("eps", "eps1", "eps2", "lam"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.n_action_samples < 1 or self.range_N < 1:
            raise ParameterError("sample counts must be at least 1")
        if self.lam < 0:
            raise ParameterError("lam must be non-negative")


def _decision(fired_gap, fired_var, gap, var):
    trigger = "gap" if fired_gap else ("variance" if fired_var else "none")
    return InterventionDecision(trigger != "none", float(gap), float(var), trigger)


def decide_action_based(teacher, student, state, cfg: InterventionConfig, rng) -> InterventionDecision:
    """Fire when the student's mean log-likelihood of teacher actions falls below eps."""
    state = np.asarray(state, dtype=np.float64)
    a_t = teacher.sample_n(state, cfg.n_action_samples, rng)
    logp = student.log_prob(np.repeat(state[None], len(a_t), axis=0), a_t)
    est = float(np.mean(logp))
    if not np.isfinite(est):
        raise NumericError(f"non-finite student log-density at state {state}")
    return _decision(est < cfg.eps, False, est, 0.0)


def _require_trained(ensemble):
    if not ensemble.trained:
        raise StateError("teacher Q-ensemble has not been trained (warmup incomplete)")


def decide_ts2c(ensemble, teacher, student, state, cfg: InterventionConfig, rng) -> InterventionDecision:
    """Gap between teacher and student expected Q, or ensemble variance of the student's."""
    _require_trained(ensemble)
    state = np.asarray(state, dtype=np.float64)
    n = cfg.n_action_samples
    a_t = teacher.sample_n(state, n, rng)
    a_s = student.sample_n(state, n, rng)
    # one forward pass over both action sets
    q = ensemble.q_values(np.repeat(state[None], 2 * n, axis=0), np.concatenate([a_t, a_s]))
    m_t, m_s = q[:, :n].mean(axis=1), q[:, n:].mean(axis=1)
    gap = float(np.mean(m_t - m_s))
    var = float(np.var(m_s))
    return _decision(gap > cfg.eps1, var > cfg.eps2, gap, var)


def decide_importance(ensemble, teacher, state, cfg: InterventionConfig, rng) -> InterventionDecision:
    """Fire when ensemble-mean Q varies by more than eps across range_N teacher actions."""
    _require_trained(ensemble)
    state = np.asarray(state, dtype=np.float64)
    a_t = teacher.sample_n(state, cfg.range_N, rng)
    q = ensemble.q_values(np.repeat(state[None], len(a_t), axis=0), a_t).mean(axis=0)
    spread = float(q.max() - q.min())
    return _decision(spread > cfg.eps, False, spread, 0.0)


def decide_value_exact(mdp, pit, pis, state_index: int, eps: float) -> InterventionDecision:
    """Exact value-gap rule on a tabular MDP."""
    if not 0 <= int(state_index) < mdp.n_states:
        raise ParameterError(f"state index {state_index} out of range [0, {mdp.n_states})")
    gap = float(value_gap(mdp, pit, pis)[int(state_index)])
    return _decision(gap > eps, False, gap, 0.0)


def decide(kind, ensemble, teacher, student, state, cfg: InterventionConfig, rng) -> InterventionDecision:
    if kind == "ts2c":
        return decide_ts2c(ensemble, teacher, student, state, cfg, rng)
    if kind == "action":
        return decide_action_based(teacher, student, state, cfg, rng)
    if kind == "importance":
        return decide_importance(ensemble, teacher, state, cfg, rng)
    raise ParameterError(f"decide() does not handle kind {kind!r}")
