"""Experiment orchestration: one run directory per (algorithm, seed)."""

import json
import logging
from pathlib import Path

from ts2c.env import make_env
from ts2c.env.scripted import scripted_teacher
from ts2c.errors import ParameterError, Ts2cError
from ts2c.harness.config import RunConfig, dump_yaml, snapshot
from ts2c.neural.checkpoint import load_policy
from ts2c.trainer import train

log = logging.getLogger(__name__)


def build_teacher(teacher: dict | None, env):
    if teacher is None:
        return None
    if "scripted" in teacher:
        return scripted_teacher(teacher["scripted"], getattr(env, "p", None), **teacher.get("options", {}))
    policy, _, _ = load_policy(teacher["checkpoint"])
    if policy.obs_dim != env.state_dim or policy.action_dim != env.action_dim:
        raise ParameterError(
            f"teacher checkpoint dims ({policy.obs_dim}, {policy.action_dim}) do not match the environment "
            f"({env.state_dim}, {env.action_dim})")
    return policy


def run_dir_for(cfg: RunConfig, seed: int) -> Path:
    return Path(cfg.output_root) / cfg.experiment / f"{cfg.algorithm}_seed{seed}"


def run_one(cfg: RunConfig, seed: int):
    run_dir = run_dir_for(cfg, seed)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.yaml").write_text(dump_yaml(snapshot(cfg, seed)))
    env = make_env(cfg.env_id, cfg.env_params)
    eval_env = make_env(cfg.env_id, cfg.env_params)
    teacher = build_teacher(cfg.teacher, env)
    return train(cfg.for_seed(seed), env, teacher, eval_env, run_dir)


def run_experiment(cfg: RunConfig):
    """Run every seed; returns (results by seed, list of (seed, error) for aborted runs)."""
    results, failed = {}, []
    for seed in cfg.seeds:
        log.info("running %s seed %d", cfg.algorithm, seed)
        try:
            results[seed] = run_one(cfg, seed)
        except (Ts2cError, ValueError, ArithmeticError) as exc:
            log.error("run %s seed %d aborted: %s", cfg.algorithm, seed, exc)
            failed.append((seed, f"{type(exc).__name__}: {exc}"))
    return results, failed


def read_metrics(run_dir) -> list:
    path = Path(run_dir) / "metrics.jsonl"
    if not path.is_file():
        raise FileNotFoundError(f"no metrics stream in {run_dir}")
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
