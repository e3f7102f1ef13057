"""Plain SAC training that snapshots policies at chosen steps for use as teachers."""

import copy
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ts2c.errors import ParameterError
from ts2c.neural.checkpoint import save_policy
from ts2c.rl.buffer import ReplayBuffer, Transition
from ts2c.rl.evaluate import EVAL_SEED_BASE, evaluate
from ts2c.rl.sac import SacConfig, SacLearner


@dataclass
class TeacherCheckpoint:
    step: int
    path: str
    eval_return: float
    success_rate: float


def train_sac(env, cfg: SacConfig, steps: int, seed: int, on_step=None):
    """Run ``steps`` environment steps of SAC. ``on_step(t, learner)`` fires before step t and after the last.

    Returns the learner and the list of per-step env costs.
    """
    rng = np.random.default_rng(seed)
    learner = SacLearner(env.state_dim, env.action_dim, env.action_low, env.action_high, cfg, rng)
    buffer = ReplayBuffer(min(cfg.buffer_capacity, max(steps, 1)), env.state_dim, env.action_dim)
    env_rng = np.random.default_rng(seed + 1)
    obs = env.reset(int(env_rng.integers(0, EVAL_SEED_BASE)))
    costs = []
    for t in range(steps):
        if on_step is not None:
            on_step(t, learner)
        if t < cfg.random_steps:
            a = rng.uniform(env.action_low, env.action_high)
        else:
            a = learner.policy.act(obs, rng)
        res = env.step(a)
        costs.append(res.cost)
        buffer.push(Transition(obs, a, res.reward, res.cost, res.next_state, res.terminated))
        obs = res.next_state
        if res.done:
            obs = env.reset(int(env_rng.integers(0, EVAL_SEED_BASE)))
        if len(buffer) >= cfg.learning_starts:
            for _ in range(cfg.updates_per_step):
                learner.update(buffer.sample(cfg.batch_size, rng))
    if on_step is not None:
        on_step(steps, learner)
    return learner, costs


def train_teacher(env, budget: int, checkpoint_at, seed: int, cfg: SacConfig, out_dir,
                  eval_episodes: int = 10, env_id: str = "") -> list[TeacherCheckpoint]:
    """SAC for ``budget`` steps, saving policy+critics at each step in ``checkpoint_at``."""
    marks = sorted(int(c) for c in checkpoint_at)
    if not marks or marks[0] < 0 or budget < marks[-1]:
        raise ParameterError("checkpoint steps must be non-negative and within the budget")
    out_dir = Path(out_dir)
    saved = []
    # evaluating must not reset the training episode
    eval_env = copy.deepcopy(env)

    def on_step(t, learner):
        while marks and marks[0] == t:
            marks.pop(0)
            rep = evaluate(eval_env, learner.policy, eval_episodes, EVAL_SEED_BASE)
            path = out_dir / f"teacher_step{t}.ckpt"
            meta = {"step": t, "seed": seed, "env_id": env_id, "eval_return": rep.mean_return,
                    "success_rate": rep.success_rate}
            save_policy(path, learner.policy, learner.critics, meta)
            saved.append(TeacherCheckpoint(t, str(path), rep.mean_return, rep.success_rate))

    train_sac(env, cfg, budget, seed, on_step)
    return saved
