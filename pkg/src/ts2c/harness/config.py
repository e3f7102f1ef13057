"""Run configuration: a YAML file with one section per module config.

Layout::

    experiment: driving_desk
    env: {id: driving, params: {...}}
    algorithm: ts2c
    teacher: {scripted: conservative_follower, options: {...}}   # or {checkpoint: path}
    trainer: {...}        # Ts2cConfig fields other than algorithm/seed/sac/intervention
    sac: {...}            # SacConfig fields
    intervention: {...}   # InterventionConfig fields
    seeds: [0, 1, 2, 3]
    output_root: runs     # overridden by $TS2C_OUTPUT_ROOT

Unknown keys anywhere are rejected with their dotted path.
"""

import copy
import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path

import pydantic
import yaml

from ts2c.env import ENV_IDS
from ts2c.env.driving import DrivingParams
from ts2c.env.pendulum import PendulumParams
from ts2c.env.scripted import TEACHERS, scripted_teacher
from ts2c.errors import ConfigError, ParameterError
from ts2c.intervention import InterventionConfig
from ts2c.rl.sac import SacConfig
from ts2c.trainer import ALGORITHMS, NEEDS_TEACHER, Ts2cConfig

OUTPUT_ROOT_ENV = "TS2C_OUTPUT_ROOT"
TOP_KEYS = ("experiment", "env", "algorithm", "teacher", "trainer", "sac", "intervention", "seeds", "output_root")
ENV_PARAMS = {"driving": DrivingParams, "pendulum": PendulumParams}
_TRAINER_EXCLUDE = ("algorithm", "seed", "sac", "intervention")
_INTERVENTION_KIND = {"ts2c": "ts2c", "action_based": "action", "importance": "importance", "sac": "ts2c", "bc": "ts2c"}


@dataclass
class RunConfig:
    experiment: str
    env_id: str
    env_params: dict
    algorithm: str
    teacher: dict | None
    trainer: Ts2cConfig
    seeds: list
    output_root: str
    raw: dict = field(default_factory=dict)

    def for_seed(self, seed):
        return dataclasses.replace(self.trainer, seed=int(seed))


def _keys(data, allowed, path):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", path)
    for k in data:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(allowed)})", f"{path}.{k}" if path else str(k))
    return data


def build_dataclass(cls, data, path, exclude=(), extra=None):
    """Validate ``data`` against the fields of ``cls`` and construct it."""
    fields = {f.name: f for f in dataclasses.fields(cls) if f.name not in exclude}
    data = _keys(data, tuple(fields), path)
    values = dict(extra or {})
    for name, value in data.items():
        try:
            values[name] = pydantic.TypeAdapter(fields[name].type).validate_python(value)
        except pydantic.ValidationError as exc:
            raise ConfigError(exc.errors()[0]["msg"], f"{path}.{name}") from None
    try:
        return cls(**values)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(str(exc), path) from None


def parse_config(data: dict, base_dir=None) -> RunConfig:
    data = copy.deepcopy(_keys(data, TOP_KEYS, ""))
    raw = copy.deepcopy(data)
    experiment = data.get("experiment", "experiment")
    if not isinstance(experiment, str) or not experiment:
        raise ConfigError("must be a non-empty string", "experiment")

    env = _keys(data.get("env"), ("id", "params"), "env")
    env_id = env.get("id")
    if env_id not in ENV_IDS:
        raise ConfigError(f"unknown environment {env_id!r}; expected one of {ENV_IDS}", "env.id")
    build_dataclass(ENV_PARAMS[env_id], env.get("params"), "env.params")  # validation only
    env_params = dict(env.get("params") or {})

    algorithm = data.get("algorithm")
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}", "algorithm")

    teacher = _parse_teacher(data.get("teacher"), algorithm, base_dir)
    if teacher is not None and teacher.get("scripted") == "conservative_follower" and env_id != "driving":
        raise ConfigError("conservative_follower drives the driving environment only", "teacher.scripted")
    if teacher is not None and teacher.get("scripted") == "pendulum_mediocre" and env_id != "pendulum":
        raise ConfigError("pendulum_mediocre controls the pendulum only", "teacher.scripted")

    sac = build_dataclass(SacConfig, data.get("sac"), "sac")
    icfg = dict(data.get("intervention") or {})
    icfg.setdefault("kind", _INTERVENTION_KIND[algorithm])
    intervention = build_dataclass(InterventionConfig, icfg, "intervention")
    trainer = build_dataclass(Ts2cConfig, data.get("trainer"), "trainer", _TRAINER_EXCLUDE,
                              {"algorithm": algorithm, "sac": sac, "intervention": intervention})

    seeds = data.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("must be a non-empty list of non-negative integers", "seeds")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be distinct", "seeds")

    root = os.environ.get(OUTPUT_ROOT_ENV) or data.get("output_root", "runs")
    return RunConfig(experiment, env_id, env_params, algorithm, teacher, trainer, seeds, str(root), raw)


def _parse_teacher(t, algorithm, base_dir):
    if t is None or t == "none":
        if algorithm in NEEDS_TEACHER:
            raise ConfigError(f"algorithm {algorithm!r} needs a teacher", "teacher")
        return None
    t = _keys(t, ("scripted", "options", "checkpoint"), "teacher")
    if ("scripted" in t) == ("checkpoint" in t):
        raise ConfigError("give exactly one of 'scripted' or 'checkpoint'", "teacher")
    if "scripted" in t:
        if t["scripted"] not in TEACHERS:
            raise ConfigError(f"unknown scripted teacher {t['scripted']!r}; expected one of {TEACHERS}",
                              "teacher.scripted")
        opts = t.get("options") or {}
        if not isinstance(opts, dict):
            raise ConfigError("expected a mapping", "teacher.options")
        try:
            scripted_teacher(t["scripted"], None, **opts)
        except (TypeError, ParameterError) as exc:
            raise ConfigError(str(exc), "teacher.options") from None
        return {"scripted": t["scripted"], "options": dict(opts)}
    if "options" in t:
        raise ConfigError("options apply to scripted teachers only", "teacher.options")
    path = Path(t["checkpoint"])
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    if not path.is_file():
        raise FileNotFoundError(f"teacher checkpoint not found: {path}")
    return {"checkpoint": str(path.resolve())}


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    return parse_config(data, base_dir=path.parent)


def snapshot(cfg: RunConfig, seed: int) -> dict:
    """Single-seed, fully resolved config that reproduces one run."""
    snap = copy.deepcopy(cfg.raw)
    snap["seeds"] = [int(seed)]
    if cfg.teacher is not None:
        snap["teacher"] = copy.deepcopy(cfg.teacher)
    snap.pop("output_root", None)
    return snap


def dump_yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=True, default_flow_style=False)
