"""Teacher-student shared-control training and its baselines.

One loop drives every algorithm so that their random streams line up:

* ``ts2c``          warmup with a noisy teacher, ensemble TD fitting, then shared
                    control gated by the ensemble value/variance rule
* ``action_based``  shared control gated by the student's likelihood of teacher actions
* ``importance``    shared control gated by the Q-range over teacher samples
* ``sac``           the student alone from scratch
* ``bc``            regression onto teacher actions from a warmup-sized dataset

Streams (all spawned from the run seed): learner updates, student action
sampling, teacher action sampling, intervention decisions, warmup noise,
ensemble updates, episode reset seeds.
"""

import copy
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ts2c.errors import ParameterError, StateError, Ts2cError
from ts2c.intervention import InterventionConfig, InterventionDecision, decide
from ts2c.neural.adam import Adam
from ts2c.neural.checkpoint import save_policy
from ts2c.neural.ensemble import QEnsemble
from ts2c.rl.buffer import Batch, ReplayBuffer, Transition
from ts2c.rl.evaluate import EVAL_SEED_BASE, evaluate
from ts2c.rl.sac import SacConfig, SacLearner, _check

ALGORITHMS = ("ts2c", "action_based", "importance", "sac", "bc")
NEEDS_ENSEMBLE = ("ts2c", "importance")
NEEDS_TEACHER = ("ts2c", "action_based", "importance", "bc")
DECISION_KIND = {"ts2c": "ts2c", "action_based": "action", "importance": "importance"}
ENSEMBLE_LOSSES = ("mean", "member")
ENSEMBLE_DATA = ("warmup", "replay")
METRIC_FIELDS = ("step", "eval_return", "success_rate", "train_cost_cum", "intervention_rate")
_STREAMS = ("learner", "student", "teacher", "decision", "warmup", "ensemble", "episodes", "warmup_episodes")


@dataclass
class Ts2cConfig:
    algorithm: str = "ts2c"
    warmup_steps: int = 50_000
    warmup_noise_sigma: float = 0.5
    ensemble_size: int = 10
    ensemble_hidden: tuple = (256, 256)
    ensemble_lr: float = 1e-4
    ensemble_batch: int = 256
    ensemble_loss: str = "mean"
    ensemble_tau: float | None = None  # None -> sac.tau
    ensemble_updates_per_step: int = 1
    freeze_ensemble: bool = True
    ensemble_refresh_every: int = 10
    ensemble_data: str = "warmup"  # data for refreshes after warmup: warmup set or the full replay buffer
    warmup_to_replay: bool = True
    intervention: InterventionConfig = field(default_factory=InterventionConfig)
    training_steps: int = 100_000
    sac: SacConfig = field(default_factory=SacConfig)
    eval_every: int = 2000
    eval_episodes: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ParameterError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.algorithm in NEEDS_ENSEMBLE:
            if self.warmup_steps < 1:
                raise ParameterError("warmup_steps must be positive before shared control")
            if self.ensemble_size < 2:
                raise ParameterError("ensemble_size must be at least 2 for a meaningful variance")
        if self.algorithm == "bc" and self.warmup_steps < 1:
            raise ParameterError("bc needs a positive warmup_steps dataset size")
        if self.warmup_steps < 0 or self.training_steps < 0:
            raise ParameterError("step counts must be non-negative")
        if self.ensemble_loss not in ENSEMBLE_LOSSES:
            raise ParameterError(f"ensemble_loss must be one of {ENSEMBLE_LOSSES}")
        if self.ensemble_data not in ENSEMBLE_DATA:
            raise ParameterError(f"ensemble_data must be one of {ENSEMBLE_DATA}")
        if self.warmup_noise_sigma < 0:
            raise ParameterError("warmup_noise_sigma must be non-negative")
        if self.ensemble_updates_per_step < 1:
            raise ParameterError("ensemble_updates_per_step must be at least 1")
        if self.eval_every < 1 or self.eval_episodes < 1 or self.ensemble_refresh_every < 1:
            raise ParameterError("eval_every, eval_episodes and ensemble_refresh_every must be positive")
        self.ensemble_hidden = tuple(self.ensemble_hidden)

    @property
    def uses_warmup(self):
        return self.algorithm in NEEDS_ENSEMBLE or self.algorithm == "bc"

    @property
    def total_steps(self):
        return (self.warmup_steps if self.uses_warmup else 0) + (0 if self.algorithm == "bc" else self.training_steps)


@dataclass
class RunState:
    step: int = 0
    interventions: int = 0
    train_cost_cum: float = 0.0
    episode_return: float = 0.0
    episode_cost: float = 0.0
    episodes: int = 0
    window_steps: int = 0
    window_interventions: int = 0
    obs: np.ndarray | None = None
    pending: InterventionDecision | None = None

    def count(self, cost, intervened):
        self.step += 1
        self.window_steps += 1
        self.train_cost_cum += cost
        if intervened:
            self.interventions += 1
            self.window_interventions += 1
        if self.interventions > self.step:
            raise StateError("intervention count exceeds step count")

    def window_rate(self):
        """Unweighted intervention fraction since the last metrics record."""
        return self.window_interventions / self.window_steps if self.window_steps else 0.0

    def close_window(self):
        self.window_steps = self.window_interventions = 0


@dataclass
class RunResult:
    metrics: list
    report: dict
    learner: SacLearner
    ensemble: QEnsemble | None
    buffer: ReplayBuffer
    state: RunState
    costs: list


def spawn_streams(seed):
    """Independent generators keyed by role."""
    children = np.random.SeedSequence(int(seed)).spawn(len(_STREAMS))
    return {name: np.random.default_rng(c) for name, c in zip(_STREAMS, children)}


# warmup and ensemble ---------------------------------------------------------


def noisy_teacher_actions(env, teacher, obs, sigma, teacher_rng, noise_rng):
    """Teacher action plus N(0, sigma), clipped to bounds; also returns the clean action."""
    a_t = teacher.act(obs, teacher_rng)
    noisy = a_t + sigma * noise_rng.standard_normal(env.action_dim) if sigma > 0 else a_t.copy()
    return np.clip(noisy, env.action_low, env.action_high), a_t


def warmup_collect(env, teacher, sigma, steps, buffer, rng, run_state=None, episode_rng=None,
                   teacher_rng=None, on_step=None):
    """Roll the noise-perturbed teacher for ``steps`` steps, storing tuples in ``buffer``."""
    if steps < 1:
        raise ParameterError("warmup needs at least one step")
    episode_rng = episode_rng if episode_rng is not None else rng
    teacher_rng = teacher_rng if teacher_rng is not None else rng
    rs = run_state if run_state is not None else RunState()
    if rs.obs is None:
        rs.obs = env.reset(int(episode_rng.integers(0, EVAL_SEED_BASE)))
    for _ in range(steps):
        a, _ = noisy_teacher_actions(env, teacher, rs.obs, sigma, teacher_rng, rng)
        res = env.step(a)
        buffer.push(Transition(rs.obs, a, res.reward, res.cost, res.next_state, res.terminated, False, "teacher"))
        rs.count(res.cost, True)
        _advance_episode(env, rs, res, episode_rng)
        if on_step is not None:
            on_step()
    return rs


def _advance_episode(env, rs, res, episode_rng):
    rs.episode_return += res.reward
    rs.episode_cost += res.cost
    rs.obs = res.next_state
    if res.done:
        rs.episodes += 1
        rs.episode_return = rs.episode_cost = 0.0
        rs.obs = env.reset(int(episode_rng.integers(0, EVAL_SEED_BASE)))


def ensemble_target(ensemble: QEnsemble, batch: Batch, teacher, sigma, gamma, rng, low, high):
    """y = r + gamma (1 - done) Mean_i Qtarget_i(s', a'), a' = teacher(s') + N(0, sigma)."""
    a2 = teacher.act_batch(batch.next_state, rng)
    if sigma > 0:
        a2 = np.clip(a2 + sigma * rng.standard_normal(a2.shape), low, high)
    q2 = ensemble.q_values(batch.next_state, a2, target=True).mean(axis=0)
    return batch.reward + gamma * (1.0 - batch.done) * q2


def ensemble_loss(ensemble: QEnsemble, obs, act, y, form="mean"):
    """TD loss against the shared target y, with gradients for every member.

    ``form="mean"``:   mean_b (y - Mean_i Q_i(s, a))^2, the ensemble mean is regressed.
    ``form="member"``: mean_i mean_b (y - Q_i(s, a))^2, each member is regressed.
    """
    q, acts = ensemble.q_values_cache(obs, act)
    if form == "mean":
        diff = q.mean(axis=0) - y
        loss = _check("ensemble loss", np.mean(diff**2))
        dq = np.broadcast_to(2.0 * diff / (len(y) * ensemble.n_members), q.shape)
    elif form == "member":
        diff = q - y[None, :]
        loss = _check("ensemble loss", np.mean(diff**2))
        dq = 2.0 * diff / diff.size
    else:
        raise ParameterError(f"unknown ensemble loss form {form!r}")
    grads, _ = ensemble.net.backward(acts, dq[..., None])
    return loss, grads


def ensemble_update(ensemble, batch, teacher, sigma, optimizer: Adam, gamma, tau, rng, low, high,
                    form="mean") -> float:
    y = ensemble_target(ensemble, batch, teacher, sigma, gamma, rng, low, high)
    loss, grads = ensemble_loss(ensemble, batch.state, batch.action, y, form)
    optimizer.step(grads)
    ensemble.polyak(tau)
    return loss


# shared control ----------------------------------------------------------------


def shared_control_step(env, teacher, student, ensemble, cfg: InterventionConfig, run_state: RunState,
                        rngs, kind="ts2c", episode_rng=None) -> tuple[Transition, InterventionDecision, object]:
    """One behavior-policy step. Returns (stored transition, decision at s_i, env step result)."""
    obs = run_state.obs
    a_t = teacher.act(obs, rngs["teacher"])
    a_s = student.act(obs, rngs["student"])
    dec = decide(kind, ensemble, teacher, student, obs, cfg, rngs["decision"])
    a_b = a_t if dec.intervene else a_s
    res = env.step(a_b)
    nxt = decide(kind, ensemble, teacher, student, res.next_state, cfg, rngs["decision"])
    tr = Transition(obs, a_b, res.reward, res.cost, res.next_state, res.terminated, nxt.intervene,
                    "teacher" if dec.intervene else "student")
    run_state.count(res.cost, dec.intervene)
    run_state.pending = nxt
    _advance_episode(env, run_state, res, episode_rng if episode_rng is not None else rngs["episodes"])
    return tr, dec, res


# training loop -------------------------------------------------------------------


class _Recorder:
    def __init__(self, cfg, eval_env, run_dir):
        self.cfg = cfg
        self.eval_env = eval_env
        self.records = []
        self.t0 = time.perf_counter()
        self.run_dir = Path(run_dir) if run_dir is not None else None
        if self.run_dir is not None:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            (self.run_dir / "metrics.jsonl").write_text("")
            (self.run_dir / "timing.jsonl").write_text("")

    def record(self, rs: RunState, policy):
        rep = evaluate(self.eval_env, policy, self.cfg.eval_episodes, EVAL_SEED_BASE)
        rec = {
            "step": rs.step,
            "eval_return": rep.mean_return,
            "success_rate": rep.success_rate,
            "train_cost_cum": rs.train_cost_cum,
            "intervention_rate": rs.window_rate(),
            "eval_cost": rep.mean_cost,
            "interventions_cum": rs.interventions,
            "episodes": rs.episodes,
        }
        rs.close_window()
        self.records.append(rec)
        if self.run_dir is not None:
            with open(self.run_dir / "metrics.jsonl", "a") as fh:
                fh.write(json.dumps(rec) + "\n")
            # wall time lives apart so metrics stay bit-reproducible
            with open(self.run_dir / "timing.jsonl", "a") as fh:
                fh.write(json.dumps({"step": rs.step, "wall_seconds": time.perf_counter() - self.t0}) + "\n")
        return rec


def train(cfg: Ts2cConfig, env, teacher=None, eval_env=None, run_dir=None) -> RunResult:
    """Run one configured algorithm; writes metrics, checkpoint and report when ``run_dir`` is given."""
    if cfg.algorithm in NEEDS_TEACHER and teacher is None:
        raise ParameterError(f"algorithm {cfg.algorithm!r} needs a teacher policy")
    # a separate copy so evaluation never resets the training episode
    eval_env = eval_env if eval_env is not None else copy.deepcopy(env)
    rec = _Recorder(cfg, eval_env, run_dir)
    rs = RunState()
    try:
        result = _train(cfg, env, teacher, rec, rs)
    except Ts2cError as exc:
        if rec.run_dir is not None:
            diag = {"aborted": True, "error": type(exc).__name__, "message": str(exc), "step": rs.step}
            (rec.run_dir / "report.json").write_text(json.dumps(diag, indent=2, sort_keys=True) + "\n")
        raise
    if rec.run_dir is not None:
        save_policy(rec.run_dir / "student.ckpt", result.learner.policy, result.learner.critics,
                    {"step": rs.step, "algorithm": cfg.algorithm, "seed": cfg.seed})
        (rec.run_dir / "report.json").write_text(json.dumps(result.report, indent=2, sort_keys=True) + "\n")
    return result


def _train(cfg: Ts2cConfig, env, teacher, rec: _Recorder, rs: RunState) -> RunResult:
    sac = cfg.sac
    rngs = spawn_streams(cfg.seed)
    learner = SacLearner(env.state_dim, env.action_dim, env.action_low, env.action_high, sac, rngs["learner"])
    capacity = min(sac.buffer_capacity, max(cfg.total_steps, 1))
    buffer = ReplayBuffer(capacity, env.state_dim, env.action_dim)
    costs = []
    ensemble = opt = warm = None
    kind = DECISION_KIND.get(cfg.algorithm)

    def maybe_record():
        if rs.step % cfg.eval_every == 0:
            rec.record(rs, learner.policy)

    if cfg.uses_warmup:
        warm = ReplayBuffer(max(cfg.warmup_steps, 1), env.state_dim, env.action_dim)
        if cfg.algorithm in NEEDS_ENSEMBLE:
            ensemble = QEnsemble(env.state_dim, env.action_dim, cfg.ensemble_hidden, cfg.ensemble_size,
                                 rngs["ensemble"])
            opt = Adam(ensemble.params(), cfg.ensemble_lr)

        e_tau = sac.tau if cfg.ensemble_tau is None else cfg.ensemble_tau

        def fit_ensemble(source=None):
            b = (warm if source is None else source).sample(cfg.ensemble_batch, rngs["ensemble"])
            return ensemble_update(ensemble, b, teacher, cfg.warmup_noise_sigma, opt, sac.gamma, e_tau,
                                   rngs["ensemble"], env.action_low, env.action_high, cfg.ensemble_loss)

        def warm_step():
            t = warm.get(len(warm) - 1)
            costs.append(t.cost)
            if cfg.warmup_to_replay and cfg.algorithm != "bc":
                buffer.push(t)
            if ensemble is not None:
                for _ in range(cfg.ensemble_updates_per_step):
                    fit_ensemble()
            maybe_record()

        warmup_collect(env, teacher, cfg.warmup_noise_sigma, cfg.warmup_steps, warm, rngs["warmup"], rs,
                       rngs["warmup_episodes"], rngs["teacher"], warm_step)
        if ensemble is not None:
            ensemble.trained = True

    # shared control opens a fresh episode drawn exactly as a plain SAC run would draw it
    rs.obs = env.reset(int(rngs["episodes"].integers(0, EVAL_SEED_BASE)))
    rs.episode_return = rs.episode_cost = 0.0

    if cfg.algorithm == "bc":
        _behavior_cloning(learner, teacher, warm, cfg, rngs["learner"])
        if rs.step % cfg.eval_every != 0 or rs.step == 0:
            rec.record(rs, learner.policy)
        return RunResult(rec.records, _report(cfg, rec, rs), learner, None, buffer, rs, costs)

    for i in range(cfg.training_steps):
        if kind is None:
            a = learner.policy.act(rs.obs, rngs["student"])
            res = env.step(a)
            tr = Transition(rs.obs, a, res.reward, res.cost, res.next_state, res.terminated)
            rs.count(res.cost, False)
            _advance_episode(env, rs, res, rngs["episodes"])
        else:
            tr, _, res = shared_control_step(env, teacher, learner.policy, ensemble, cfg.intervention, rs,
                                             rngs, kind)
        costs.append(res.cost)
        buffer.push(tr)
        if len(buffer) >= sac.learning_starts:
            lam = cfg.intervention.lam if kind is not None else 0.0
            for _ in range(sac.updates_per_step):
                learner.update(buffer.sample(sac.batch_size, rngs["learner"]), lam, teacher)
        if ensemble is not None and not cfg.freeze_ensemble and (i + 1) % cfg.ensemble_refresh_every == 0:
            # the target uses teacher actions at s', so any stored transition evaluates the teacher
            fit_ensemble(buffer if cfg.ensemble_data == "replay" else warm)
        maybe_record()
    if rs.step % cfg.eval_every != 0 or not rec.records:
        rec.record(rs, learner.policy)
    return RunResult(rec.records, _report(cfg, rec, rs), learner, ensemble, buffer, rs, costs)


def _behavior_cloning(learner: SacLearner, teacher, data: ReplayBuffer, cfg: Ts2cConfig, rng):
    """Fit the policy mean to teacher actions by squared error.

    Warmup stores noisy actions, so clean labels are recomputed from the stored states.
    """
    if len(data) == 0:
        raise StateError("no warmup data for behavior cloning")
    pi = learner.policy
    opt = Adam(pi.params(), cfg.sac.lr)
    for _ in range(cfg.training_steps):
        b = data.sample(cfg.sac.batch_size, rng)
        target = np.clip(teacher.act_batch(b.state, deterministic=True), pi.low, pi.high)
        s = pi.sample(b.state, noise=np.zeros((len(b), pi.action_dim)))
        diff = s.action - target
        _check("bc loss", np.mean(np.sum(diff**2, axis=1)))
        opt.step(pi.backward(s, 2.0 * diff / len(b), np.zeros(len(b))))


def _report(cfg, rec, rs):
    last = rec.records[-1]
    return {
        "aborted": False,
        "algorithm": cfg.algorithm,
        "seed": cfg.seed,
        "steps": rs.step,
        "final_eval_return": last["eval_return"],
        "final_success_rate": last["success_rate"],
        "train_cost_cum": rs.train_cost_cum,
        "interventions": rs.interventions,
        "intervention_rate_series": [[r["step"], r["intervention_rate"]] for r in rec.records],
    }
