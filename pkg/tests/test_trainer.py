import json

import numpy as np
import pytest

from ts2c.env import DrivingToy, Pendulum, scripted_teacher
from ts2c.errors import NumericError, ParameterError, StateError
from ts2c.intervention import InterventionConfig, decide
from ts2c.neural import Adam, QEnsemble
from ts2c.rl import ReplayBuffer, SacConfig
from ts2c.rl.buffer import Batch
from ts2c.trainer import (
    RunState,
    Ts2cConfig,
    ensemble_update,
    shared_control_step,
    spawn_streams,
    train,
    warmup_collect,
)
from ts2c.neural.gaussian import GaussianPolicy

SAC = SacConfig(hidden=(8, 8), batch_size=16, learning_starts=32, lr=1e-3)


def tiny(**kw):
    base = dict(warmup_steps=100, ensemble_size=3, ensemble_hidden=(8, 8), ensemble_batch=16,
                training_steps=150, sac=SAC, eval_every=50, eval_episodes=1, seed=0)
    base.update(kw)
    return Ts2cConfig(**base)


def follower():
    return scripted_teacher("conservative_follower")


def trained_ensemble(env, teacher, seed=0):
    q = QEnsemble(env.state_dim, env.action_dim, (8,), 3, np.random.default_rng(seed))
    q.trained = True
    return q


def start(env, seed=0):
    rs = RunState()
    rs.obs = env.reset(seed)
    return rs


# configuration

@pytest.mark.parametrize("bad", [dict(algorithm="dagger"), dict(warmup_steps=0), dict(ensemble_size=1),
                                 dict(ensemble_loss="huber"), dict(warmup_noise_sigma=-1.0),
                                 dict(eval_every=0), dict(ensemble_data="future"), dict(training_steps=-1)])
def test_config_validation(bad):
    with pytest.raises(ParameterError):
        tiny(**bad)


def test_budgets():
    assert tiny().total_steps == 250
    assert tiny(algorithm="sac").total_steps == 150
    assert tiny(algorithm="bc").total_steps == 100


def test_runstate_counts():
    rs = RunState()
    rs.count(1.0, True)
    rs.count(0.0, False)
    assert rs.window_rate() == 0.5 and rs.train_cost_cum == 1.0
    rs.close_window()
    assert rs.window_rate() == 0.0
    rs.interventions = 5
    with pytest.raises(StateError):
        rs.count(0.0, False)


# warmup

def test_warmup_zero_noise_uses_teacher_actions():
    env = DrivingToy()
    teacher = follower()
    buf = ReplayBuffer(1000, env.state_dim, env.action_dim)
    warmup_collect(env, teacher, 0.0, 300, buf, np.random.default_rng(0))
    b = buf.gather(np.arange(len(buf)))
    np.testing.assert_array_equal(b.action, teacher.act_batch(b.state))
    assert np.all(b.actor == 0) and np.all(b.next_intervention == 0)


def test_warmup_buffer_size():
    env = DrivingToy()
    buf = ReplayBuffer(50, env.state_dim, env.action_dim)
    rs = warmup_collect(env, follower(), 0.5, 120, buf, np.random.default_rng(0))
    assert len(buf) == 50 and rs.step == 120 and rs.interventions == 120
    with pytest.raises(ParameterError):
        warmup_collect(env, follower(), 0.5, 0, buf, np.random.default_rng(0))


def test_warmup_noise_scale():
    env = Pendulum()
    zero = scripted_teacher("pendulum_mediocre")
    zero.fn = lambda o: np.zeros((len(o), 1))
    buf = ReplayBuffer(10_000, 3, 1)
    warmup_collect(env, zero, 0.5, 10_000, buf, np.random.default_rng(3))
    dev = buf.gather(np.arange(10_000)).action[:, 0]
    # clipping at +-2 is a 4 sigma event here
    assert abs(dev.std() - 0.5) < 0.025


# ensemble fitting

def const_batch(n=64, dim=3, adim=1, rng=None):
    rng = rng or np.random.default_rng(0)
    return Batch(rng.standard_normal((n, dim)), rng.uniform(-2, 2, (n, adim)), np.ones(n), np.zeros(n),
                 rng.standard_normal((n, dim)), np.zeros(n), np.zeros(n), np.zeros(n, dtype=np.int8))


@pytest.mark.parametrize("form", ["mean", "member"])
def test_ensemble_fixed_point_gamma_zero(form):
    q = QEnsemble(3, 1, (16,), 3, np.random.default_rng(0))
    opt = Adam(q.params(), 1e-2)
    teacher = scripted_teacher("pendulum_mediocre")
    b = const_batch()
    rng = np.random.default_rng(1)
    for _ in range(1500):
        ensemble_update(q, b, teacher, 0.5, opt, 0.0, 0.05, rng, [-2.0], [2.0], form)
    assert abs(q.q_values(b.state, b.action).mean(axis=0) - 1.0).max() < 0.05


def test_identical_members_stay_identical():
    q = QEnsemble(3, 1, (8,), 2, np.random.default_rng(0))
    for p in q.params():
        p[...] = p[0]
    q.target = q.net.copy()
    opt = Adam(q.params(), 1e-2)
    rng = np.random.default_rng(2)
    for _ in range(50):
        b = const_batch(rng=rng)
        b.reward[:] = rng.standard_normal(len(b))
        ensemble_update(q, b, scripted_teacher("pendulum_mediocre"), 0.5, opt, 0.9, 0.1, rng, [-2.0], [2.0])
    for p in q.params():
        assert np.array_equal(p[0], p[1])


def test_ensemble_update_non_finite_loss():
    q = QEnsemble(3, 1, (4,), 2, np.random.default_rng(0))
    b = const_batch()
    b.reward[0] = np.inf
    with pytest.raises(NumericError):
        ensemble_update(q, b, scripted_teacher("pendulum_mediocre"), 0.0, Adam(q.params(), 1e-3), 0.9, 0.1,
                        np.random.default_rng(0), [-2.0], [2.0])


# shared control

def student_for(env, seed=0):
    return GaussianPolicy(env.state_dim, env.action_dim, (8,), env.action_low, env.action_high,
                          np.random.default_rng(seed))


def test_forced_intervention_always_teacher():
    env = DrivingToy()
    t, s = follower(), student_for(env)
    q = trained_ensemble(env, t)
    cfg = InterventionConfig(eps1=-1e9, eps2=1e9)
    rs, rngs = start(env), spawn_streams(0)
    for _ in range(40):
        obs = rs.obs
        tr, dec, _ = shared_control_step(env, t, s, q, cfg, rs, rngs)
        assert dec.trigger == "gap" and tr.actor == "teacher"
        np.testing.assert_array_equal(tr.action, t.act(obs))
    assert rs.interventions == rs.step == 40


def test_forced_no_intervention_always_student():
    env = DrivingToy()
    t, s = follower(), student_for(env)
    q = trained_ensemble(env, t)
    cfg = InterventionConfig(eps1=1e9, eps2=1e9)
    rs, rngs = start(env), spawn_streams(0)
    shadow = spawn_streams(0)
    for _ in range(40):
        obs = rs.obs
        tr, dec, _ = shared_control_step(env, t, s, q, cfg, rs, rngs)
        assert not dec.intervene and tr.actor == "student" and not tr.next_intervention
        np.testing.assert_array_equal(tr.action, s.act(obs, shadow["student"]))
    assert rs.interventions == 0


def test_next_flag_matches_recomputed_decision():
    env = DrivingToy()
    t, s = follower(), student_for(env)
    q = trained_ensemble(env, t)
    cfg = InterventionConfig(eps1=0.0, eps2=1e-4)
    rs, rngs = start(env), spawn_streams(5)
    shadow = spawn_streams(5)
    for _ in range(30):
        tr, dec, res = shared_control_step(env, t, s, q, cfg, rs, rngs)
        # replay the decision stream: one draw set at s_i, one at s_{i+1}
        again_now = decide("ts2c", q, t, s, tr.state, cfg, shadow["decision"])
        again_next = decide("ts2c", q, t, s, tr.next_state, cfg, shadow["decision"])
        assert again_now == dec and again_next.intervene == tr.next_intervention
        assert tr.actor == ("teacher" if dec.intervene else "student")


# full runs

@pytest.mark.parametrize("algorithm", ["ts2c", "action_based", "importance", "sac", "bc"])
def test_train_runs_and_bookkeeping(algorithm, tmp_path):
    intervention = InterventionConfig(kind={"action_based": "action", "importance": "importance"}.get(algorithm, "ts2c"),
                                      eps=-2.0 if algorithm == "action_based" else 0.5)
    cfg = tiny(algorithm=algorithm, intervention=intervention)
    env = DrivingToy()
    teacher = None if algorithm == "sac" else follower()
    res = train(cfg, env, teacher, run_dir=tmp_path)
    assert res.state.step == cfg.total_steps
    assert res.state.train_cost_cum == sum(res.costs)
    assert len(res.costs) == cfg.total_steps
    steps = [m["step"] for m in res.metrics]
    assert steps == sorted(steps) and steps[-1] == cfg.total_steps
    for m in res.metrics:
        assert 0.0 <= m["intervention_rate"] <= 1.0 and 0.0 <= m["success_rate"] <= 1.0
    lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
    assert [json.loads(x) for x in lines] == res.metrics
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["aborted"] is False and report["train_cost_cum"] == res.state.train_cost_cum
    assert (tmp_path / "student.ckpt").exists()


def test_actor_labels_match_decisions():
    cfg = tiny(intervention=InterventionConfig(eps1=0.05, eps2=0.05), warmup_to_replay=False)
    res = train(cfg, DrivingToy(), follower())
    b = res.buffer.gather(np.arange(len(res.buffer)))
    teacher_steps = int(np.sum(b.actor == 0))
    assert teacher_steps + cfg.warmup_steps == res.state.interventions


def test_saturated_ts2c_equals_plain_sac():
    sac_cfg = tiny(algorithm="sac", training_steps=200)
    ts_cfg = tiny(training_steps=200, warmup_to_replay=False,
                  intervention=InterventionConfig(eps1=1e9, eps2=1e9, lam=0.0))
    a = train(sac_cfg, DrivingToy(), None)
    b = train(ts_cfg, DrivingToy(), follower())
    for x, y in zip(a.learner.policy.params(), b.learner.policy.params()):
        assert np.array_equal(x, y)
    assert a.metrics[-1]["eval_return"] == b.metrics[-1]["eval_return"]
    assert b.state.interventions == ts_cfg.warmup_steps


def test_train_needs_teacher():
    with pytest.raises(ParameterError):
        train(tiny(), DrivingToy(), None)


def test_aborted_run_writes_diagnostic(tmp_path):
    class Broken(DrivingToy):
        def _advance(self, a):
            r, c, d, info = super()._advance(a)
            return (np.nan if self.t > 20 else r), c, d, info

    with pytest.raises(NumericError):
        train(tiny(algorithm="sac", sac=SacConfig(hidden=(8, 8), batch_size=8, learning_starts=8)),
              Broken(), None, run_dir=tmp_path)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["aborted"] is True and report["error"] == "NumericError"


def test_train_deterministic():
    cfg = tiny()
    a = train(cfg, DrivingToy(), follower())
    b = train(cfg, DrivingToy(), follower())
    assert a.metrics == b.metrics
