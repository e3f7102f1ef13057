"""Held-out deterministic evaluation."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ts2c.errors import ParameterError

# training episodes draw reset seeds below this; evaluation seeds start here
EVAL_SEED_BASE = 1_000_000


@dataclass
class EvalReport:
    mean_return: float
    success_rate: float
    mean_cost: float
    returns: list = field(default_factory=list)

    def to_record(self):
        return asdict(self)


def rollout(env, policy, seed, deterministic=True, rng=None):
    """One episode; returns (return, cost, success flag, steps)."""
    obs = env.reset(seed)
    ret = cost = 0.0
    steps = 0
    while True:
        a = policy.act(obs, rng, deterministic=deterministic)
        res = env.step(a)
        ret += res.reward
        cost += res.cost
        steps += 1
        obs = res.next_state
        if res.done:
            return ret, cost, bool(res.info.get("success", False)), steps


def evaluate(env, policy, episodes: int, seed_base: int = EVAL_SEED_BASE) -> EvalReport:
    """Policy-mean actions over reset seeds seed_base .. seed_base + episodes - 1."""
    if episodes < 1:
        raise ParameterError("episodes must be at least 1")
    rets, costs, wins = [], [], []
    for k in range(episodes):
        r, c, w, _ = rollout(env, policy, seed_base + k)
        rets.append(r)
        costs.append(c)
        wins.append(w)
    return EvalReport(float(np.mean(rets)), float(np.mean(wins)), float(np.mean(costs)), rets)
