"""Command-line entry point: ``ts2c <subcommand>``."""

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from ts2c.env import ENV_IDS, make_env
from ts2c.env.scripted import scripted_teacher
from ts2c.errors import CheckpointError, ConfigError, ParameterError
from ts2c.harness import presets
from ts2c.harness.config import OUTPUT_ROOT_ENV, build_dataclass, load_config
from ts2c.harness.export import FORMATS, export_run
from ts2c.harness.run import run_experiment
from ts2c.neural.checkpoint import load_policy
from ts2c.oracle.fuzz import FuzzGrid, check_instance, run_fuzz, summarize
from ts2c.rl.evaluate import EVAL_SEED_BASE, evaluate
from ts2c.rl.sac import SacConfig
from ts2c.rl.teacher import train_teacher

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
LEVELS = ("low", "medium", "high")


def _clean(x):
    """JSON-safe copy: NaN and infinities become null."""
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def cmd_train(args):
    cfg = load_config(args.config)
    results, failed = run_experiment(cfg)
    for seed, res in sorted(results.items()):
        rep = res.report
        print(f"{cfg.algorithm} seed {seed}: eval_return {rep['final_eval_return']:.4f} "
              f"train_cost {rep['train_cost_cum']:.0f} interventions {rep['interventions']}")
    for seed, err in failed:
        print(f"{cfg.algorithm} seed {seed}: ABORTED {err}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def two_state_records(eps_list, rhs_scale):
    from ts2c.env.tabular_mdp import two_state_mdp
    from ts2c.oracle.tabular import TabularPolicy

    mdp = two_state_mdp()
    pit = TabularPolicy.deterministic([1, 1], 2)
    pis = TabularPolicy.deterministic([0, 0], 2)
    grid = FuzzGrid(eps_list=tuple(eps_list), etas=(0.5, 2.0))
    records = []
    for params, rep in check_instance(mdp, pit, pis, grid, rhs_scale):
        rec = rep.to_record()
        rec.update(instance=0, n_states=2, n_actions=2, gamma=mdp.gamma, eps=params["eps"], eta=params.get("eta"))
        records.append(rec)
    return records


def cmd_verify_bounds(args):
    if args.two_state:
        records = two_state_records(args.eps, args.rhs_scale)
        summary = summarize(records)
    else:
        grid = FuzzGrid(tuple(args.sizes), tuple(args.actions), tuple(args.gammas), tuple(args.eps), tuple(args.etas))
        records, summary = run_fuzz(args.n, grid, args.seed, args.rhs_scale)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w") as fh:
        for r in records:
            fh.write(json.dumps(_clean(r), sort_keys=True) + "\n")
        fh.write(json.dumps({"summary": summary}, sort_keys=True) + "\n")
    verdict = "all hold" if summary["all_hold"] else f"{summary['failures']} failure(s)"
    print(f"verify-bounds: {summary['checks']} checks, {verdict}")
    for bid, s in sorted(summary["per_bound"].items()):
        print(f"  {bid}: pass {s['pass']} fail {s['fail']} vacuous {s['vacuous']}")
    return EXIT_OK if summary["all_hold"] else EXIT_FAIL


def cmd_export(args):
    out = export_run(args.run_dir, args.format, args.out)
    print(out)
    return EXIT_OK


def _sac_config(preset, overrides):
    base = dict(presets.SAC_PRESETS[preset])
    base.update(overrides or {})
    return build_dataclass(SacConfig, base, "sac")


def cmd_make_teachers(args):
    env = make_env(args.env, json.loads(args.env_params) if args.env_params else None)
    cfg = _sac_config(args.sac_preset, json.loads(args.sac) if args.sac else None)
    budget = args.budget if args.budget is not None else max(args.checkpoints)
    cps = train_teacher(env, budget, args.checkpoints, args.seed, cfg, args.out_dir, args.eval_episodes, args.env)
    levels = LEVELS if len(cps) == 3 else tuple(f"level{i}" for i in range(len(cps)))
    index = [{"level": lv, "step": c.step, "path": Path(c.path).name, "eval_return": c.eval_return,
              "success_rate": c.success_rate} for lv, c in zip(levels, cps)]
    Path(args.out_dir, "index.json").write_text(json.dumps(index, indent=1) + "\n")
    for row in index:
        print(f"{row['level']}: step {row['step']} eval_return {row['eval_return']:.2f} -> {row['path']}")
    return EXIT_OK


def resolve_policy(spec, env):
    if spec.startswith("scripted:"):
        return scripted_teacher(spec.split(":", 1)[1], getattr(env, "p", None))
    policy, _, _ = load_policy(spec)
    return policy


def cmd_eval(args):
    env = make_env(args.env, json.loads(args.env_params) if args.env_params else None)
    rep = evaluate(env, resolve_policy(args.policy, env), args.episodes, args.seed_base)
    print(json.dumps({"mean_return": rep.mean_return, "success_rate": rep.success_rate, "mean_cost": rep.mean_cost}))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ts2c", description="Teacher-student shared-control toolkit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help=f"run a YAML experiment config (output root: ${OUTPUT_ROOT_ENV})")
    t.add_argument("config")
    t.set_defaults(fn=cmd_train)

    v = sub.add_parser("verify-bounds", help="fuzz random tabular MDPs against the bound checks")
    v.add_argument("--n", type=int, default=200)
    v.add_argument("--sizes", type=int, nargs="+", default=[5, 20])
    v.add_argument("--actions", type=int, nargs="+", default=[2, 5])
    v.add_argument("--gammas", type=float, nargs="+", default=[0.9, 0.99])
    v.add_argument("--eps", type=float, nargs="+", default=[0.1, 1.0])
    v.add_argument("--etas", type=float, nargs="+", default=[0.5, 2.0])
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default="bounds_report.jsonl")
    v.add_argument("--rhs-scale", type=float, default=1.0, help="test hook: multiply every right-hand side")
    v.add_argument("--two-state", action="store_true", help="check the two-state example instance only")
    v.set_defaults(fn=cmd_verify_bounds)

    e = sub.add_parser("export", help="flatten a run's metrics")
    e.add_argument("run_dir")
    e.add_argument("--format", choices=FORMATS, default="csv")
    e.add_argument("--out")
    e.set_defaults(fn=cmd_export)

    m = sub.add_parser("make-teachers", help="train SAC and save checkpoints at chosen steps")
    m.add_argument("--env", choices=ENV_IDS, required=True)
    m.add_argument("--checkpoints", type=int, nargs="+", required=True)
    m.add_argument("--budget", type=int)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out-dir", required=True)
    m.add_argument("--eval-episodes", type=int, default=10)
    m.add_argument("--sac-preset", choices=sorted(presets.SAC_PRESETS), default="desk")
    m.add_argument("--sac", help="JSON object of SacConfig overrides")
    m.add_argument("--env-params", help="JSON object of environment parameters")
    m.set_defaults(fn=cmd_make_teachers)

    ev = sub.add_parser("eval", help="evaluate a checkpoint or scripted policy on held-out seeds")
    ev.add_argument("--env", choices=ENV_IDS, required=True)
    ev.add_argument("--policy", required=True, help="checkpoint path or scripted:<name>")
    ev.add_argument("--episodes", type=int, default=10)
    ev.add_argument("--seed-base", type=int, default=EVAL_SEED_BASE)
    ev.add_argument("--env-params", help="JSON object of environment parameters")
    ev.set_defaults(fn=cmd_eval)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, CheckpointError) as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
