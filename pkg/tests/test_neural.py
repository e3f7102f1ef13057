import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ts2c.errors import CheckpointError, NumericError, ParameterError
from ts2c.neural import MLP, Adam, AdamState, GaussianPolicy, QEnsemble, adam_step, ensemble_stats, loss_and_grad
from ts2c.neural import checkpoint as ck
from ts2c.neural.gaussian import LOG_STD_MAX, LOG_STD_MIN, log1m_tanh_sq, policy_sample
from ts2c.neural.gradcheck import numeric_grad, relative_error, relu_margin
from ts2c.rl.sac import actor_loss, alpha_loss, critic_loss
from ts2c.trainer import ensemble_loss

GRAD_TOL = 1e-4
KINK_MARGIN = 1e-3  # central steps must not cross a ReLU kink


def half_sq(y):
    return 0.5 * np.sum(y**2), y


# forward / gradient

def test_zero_net_outputs_zero():
    net = MLP([3, 4, 2])
    for p in net.params():
        p[...] = 0.0
    assert np.all(net.forward(np.array([[1.0, -2.0, 3.0]])) == 0.0)
    _, grads = loss_and_grad(net, np.ones((2, 3)), half_sq)
    assert all(np.all(g == 0) for g in grads)


def test_identity_relu_layer():
    net = MLP([2, 2, 2])
    W0, b0, W1, b1 = net.params()
    W0[...], b0[...], W1[...], b1[...] = np.eye(2), 0.0, np.eye(2), 0.0
    np.testing.assert_array_equal(net.forward(np.array([[1.0, -1.0]])), [[1.0, 0.0]])


def test_forward_deterministic_and_dim_check():
    net = MLP([3, 8, 1], np.random.default_rng(0))
    x = np.random.default_rng(1).standard_normal((5, 3))
    assert np.array_equal(net.forward(x), net.forward(x))
    with pytest.raises(ParameterError):
        net.forward(np.ones((1, 4)))
    with pytest.raises(ParameterError):
        MLP([3])
    with pytest.raises(ParameterError):
        MLP([3, 1], activation="tanh")


def test_non_finite_output_and_loss():
    net = MLP([1, 1])
    with pytest.raises(NumericError):
        net.forward(np.array([[np.inf]]))
    with pytest.raises(NumericError):
        loss_and_grad(net, np.ones((1, 1)), lambda y: (np.nan, y))


@given(seed=st.integers(0, 2**31), members=st.sampled_from([None, 3]))
def test_mlp_gradcheck(seed, members):
    rng = np.random.default_rng(seed)
    net = MLP([3, 5, 4, 2], rng, n_members=members)
    x = rng.standard_normal((6, 3))
    target = rng.standard_normal((6, 2))
    assume(relu_margin(net, x) > KINK_MARGIN)

    def lf(y):
        diff = y - target
        return 0.5 * np.sum(diff**2), diff

    _, grads = loss_and_grad(net, x, lf)
    num = numeric_grad(lambda: lf(net.forward(x))[0], net.params())
    assert relative_error(grads, num) < GRAD_TOL


def test_relu_margin_sees_the_kink():
    net = MLP([2, 3, 1], np.random.default_rng(0))
    for b in net.biases:
        b[...] = 0.0
    assert relu_margin(net, np.zeros((1, 2))) == 0.0
    x = np.random.default_rng(1).standard_normal((4, 2))
    pre = x @ net.weights[0]
    assert relu_margin(net, x) == pytest.approx(np.min(np.abs(pre)))


def test_gradient_scales_with_loss():
    rng = np.random.default_rng(3)
    net = MLP([4, 6, 2], rng)
    x = rng.standard_normal((5, 4))
    _, g1 = loss_and_grad(net, x, half_sq)
    _, g3 = loss_and_grad(net, x, lambda y: (1.5 * np.sum(y**2), 3 * y))
    for a, b in zip(g1, g3):
        np.testing.assert_allclose(b, 3 * a, rtol=0, atol=1e-12)


def test_member_and_copy_do_not_share_storage():
    net = MLP([2, 3, 1], np.random.default_rng(0), n_members=4)
    before = net.forward(np.ones((1, 2))).copy()
    solo = net.member(1)
    np.testing.assert_allclose(solo.forward(np.ones((1, 2))), before[1], atol=1e-15)
    clone = net.copy()
    for p in clone.params():
        p += 1.0
    net.params()[0][0] += 5.0  # mutate member 0 only
    after = net.forward(np.ones((1, 2)))
    np.testing.assert_array_equal(after[1:], before[1:])
    assert not np.array_equal(after[0], before[0])


# adam

def test_adam_zero_gradient_keeps_params():
    p = [np.array([1.0, -2.0])]
    state = AdamState.zeros_like(p)
    _, new = adam_step(state, p, [np.zeros(2)], 1e-3)
    np.testing.assert_array_equal(new[0], p[0])


def test_adam_constant_gradient_step_limit():
    p = [np.zeros(3)]
    g = [np.array([2.0, -0.5, 1e-3])]
    opt = Adam(p, lr=1e-3)
    for _ in range(10_000):
        prev = p[0].copy()
        opt.step(g)
    np.testing.assert_allclose(p[0] - prev, -1e-3 * np.sign(g[0]), rtol=1e-4)


def test_adam_deterministic_and_functional():
    p = [np.array([0.3, 0.4])]
    state = AdamState.zeros_like(p)
    g = [np.array([0.1, -0.2])]
    s1, p1 = adam_step(state, p, g, 0.01)
    s2, p2 = adam_step(state, p, g, 0.01)
    assert np.array_equal(p1[0], p2[0]) and s1.t == s2.t == 1
    assert state.t == 0 and np.array_equal(p[0], [0.3, 0.4])


# gaussian policy

def make_policy(seed, obs_dim=3, action_dim=2, low=-1.0, high=1.0):
    rng = np.random.default_rng(seed)
    return GaussianPolicy(obs_dim, action_dim, (8, 8), np.full(action_dim, low), np.full(action_dim, high), rng)


def test_log1m_tanh_sq_stable():
    u = np.array([-50.0, -1.0, 0.0, 0.7, 50.0])
    ref = np.log(1 - np.tanh(u[1:4]) ** 2)
    np.testing.assert_allclose(log1m_tanh_sq(u)[1:4], ref, atol=1e-12)
    assert np.all(np.isfinite(log1m_tanh_sq(u)))


def test_std_to_zero_gives_squashed_mean():
    pi = make_policy(0)
    W, b = pi.trunk.weights[-1], pi.trunk.biases[-1]
    W[:, 2:] = 0.0
    b[2:] = LOG_STD_MIN - 5.0  # clamped to the minimum; std about 2e-9
    obs = np.ones((1, 3))
    rng = np.random.default_rng(0)
    det = pi.act_batch(obs, deterministic=True)
    for _ in range(5):
        np.testing.assert_allclose(pi.act_batch(obs, rng), det, atol=1e-8)
    mean, log_std = pi.distribution(obs)
    assert np.all(log_std == LOG_STD_MIN)


def test_pre_squash_mean_monte_carlo():
    pi = make_policy(1)
    obs = np.repeat(np.array([[0.2, -0.4, 0.9]]), 100_000, axis=0)
    s = pi.sample(obs, np.random.default_rng(2))
    mean, log_std = pi.distribution(obs[:1])
    se = np.exp(log_std[0]) / np.sqrt(len(obs))
    assert np.all(np.abs(s.pre_tanh.mean(axis=0) - mean[0]) < 3 * se)


def test_density_integrates_to_one():
    pi = GaussianPolicy(2, 1, (6,), [-2.0], [2.0], np.random.default_rng(4))
    obs = np.array([0.5, -0.3])
    # substitute a = 2 tanh(u) to integrate over the open interval without endpoint loss
    u = np.linspace(-25, 25, 400_001)
    a = 2.0 * np.tanh(u)
    dens = np.exp(pi.log_prob(np.repeat(obs[None], len(u), axis=0), a[:, None]))
    jac = 2.0 * (1 - np.tanh(u) ** 2)
    total = np.trapezoid(dens * jac, u)
    assert abs(total - 1.0) < 0.01


@given(seed=st.integers(0, 2**31))
def test_sample_log_prob_matches_density(seed):
    pi = make_policy(seed, low=-3.0, high=1.0)
    rng = np.random.default_rng(seed)
    obs = rng.standard_normal((16, 3))
    s = pi.sample(obs, rng)
    assert np.all(np.isfinite(s.pre_tanh))
    assert np.all(s.action >= pi.low) and np.all(s.action <= pi.high)
    # away from the boundary the arctanh inversion is exact to round-off
    inner = np.all(np.abs(s.squashed) < 0.999, axis=1)
    np.testing.assert_allclose(pi.log_prob(obs[inner], s.action[inner]), s.log_prob[inner], atol=1e-8)
    a, lp = policy_sample(pi, obs[0], rng)
    assert a.shape == (2,) and np.isfinite(lp)


@given(seed=st.integers(0, 2**31))
def test_policy_reparam_gradcheck(seed):
    pi = make_policy(seed)
    rng = np.random.default_rng(seed)
    obs = rng.standard_normal((5, 3))
    noise = rng.standard_normal((5, 2))
    wa, wl = rng.standard_normal((5, 2)), rng.standard_normal(5)
    assume(relu_margin(pi.trunk, obs) > KINK_MARGIN)

    def f():
        s = pi.sample(obs, noise=noise)
        return float(np.sum(wa * s.action) + np.sum(wl * s.log_prob))

    s = pi.sample(obs, noise=noise)
    grads = pi.backward(s, wa, wl)
    assert relative_error(grads, numeric_grad(f, pi.params())) < GRAD_TOL


# ensemble

def test_ensemble_identical_members_zero_variance():
    q = QEnsemble(3, 1, (4,), 3, np.random.default_rng(0))
    for p in q.params():
        p[...] = p[0]
    _, var = ensemble_stats(q, np.zeros(3), np.random.default_rng(1).standard_normal((5, 1)))
    assert var < 1e-28  # zero up to round-off in the mean


def test_ensemble_two_constant_members():
    q = QEnsemble(2, 1, (3,), 2, np.random.default_rng(0))
    W0, b0, W1, b1 = q.params()
    W1[...] = 0.0
    b1[0, 0, 0], b1[1, 0, 0] = 1.0, 3.0
    mean, var = ensemble_stats(q, np.ones(2), np.zeros((4, 1)))
    assert mean == 2.0 and var == 1.0
    with pytest.raises(ParameterError):
        ensemble_stats(q, np.ones(2), np.zeros((0, 1)))


def test_ensemble_stats_matches_loop():
    q = QEnsemble(4, 2, (8, 8), 10, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    s, acts = rng.standard_normal(4), rng.standard_normal((7, 2))
    m = []
    for i in range(10):
        net = q.net.member(i)
        m.append(np.mean([net.forward(np.concatenate([s, a])[None])[0, 0] for a in acts]))
    mean, var = ensemble_stats(q, s, acts)
    assert abs(mean - np.mean(m)) < 1e-12 and abs(var - np.var(m)) < 1e-12


def test_ensemble_members_independent_init():
    q = QEnsemble(3, 1, (4,), 3, np.random.default_rng(0))
    W = q.params()[0]
    assert not np.array_equal(W[0], W[1]) and not np.array_equal(W[1], W[2])
    assert q.target.params()[0] is not W


def test_polyak_contraction():
    q = QEnsemble(2, 1, (4,), 2, np.random.default_rng(0))
    for p in q.target.params():
        p += 1.0
    gap0 = max(np.max(np.abs(t - o)) for t, o in zip(q.target.params(), q.params()))
    tau, k = 0.05, 40
    for _ in range(k):
        q.polyak(tau)
    gap = max(np.max(np.abs(t - o)) for t, o in zip(q.target.params(), q.params()))
    assert abs(gap - gap0 * (1 - tau) ** k) < 1e-10


# gradients of every training loss

@given(seed=st.integers(0, 2**31), form=st.sampled_from(["mean", "member"]))
def test_ensemble_loss_gradcheck(seed, form):
    rng = np.random.default_rng(seed)
    q = QEnsemble(3, 2, (6,), 4, rng)
    obs, act, y = rng.standard_normal((7, 3)), rng.standard_normal((7, 2)), rng.standard_normal(7)
    assume(relu_margin(q.net, np.concatenate([obs, act], axis=1)) > KINK_MARGIN)
    _, grads = ensemble_loss(q, obs, act, y, form)
    num = numeric_grad(lambda: ensemble_loss(q, obs, act, y, form)[0], q.params())
    assert relative_error(grads, num) < GRAD_TOL


def test_ensemble_loss_unknown_form():
    q = QEnsemble(1, 1, (2,), 2, np.random.default_rng(0))
    with pytest.raises(ParameterError):
        ensemble_loss(q, np.zeros((1, 1)), np.zeros((1, 1)), np.zeros(1), "median")


@given(seed=st.integers(0, 2**31), n=st.sampled_from([1, 2]))
def test_critic_loss_gradcheck(seed, n):
    rng = np.random.default_rng(seed)
    q = QEnsemble(3, 2, (6, 5), n, rng)
    obs, act, y = rng.standard_normal((8, 3)), rng.standard_normal((8, 2)), rng.standard_normal(8)
    assume(relu_margin(q.net, np.concatenate([obs, act], axis=1)) > KINK_MARGIN)
    _, grads = critic_loss(q, obs, act, y)
    num = numeric_grad(lambda: critic_loss(q, obs, act, y)[0], q.params())
    assert relative_error(grads, num) < GRAD_TOL


@given(seed=st.integers(0, 2**31))
def test_actor_loss_gradcheck(seed):
    rng = np.random.default_rng(seed)
    pi = make_policy(seed)
    q = QEnsemble(3, 2, (6,), 2, rng)
    obs, noise = rng.standard_normal((6, 3)), rng.standard_normal((6, 2))
    alpha = float(rng.uniform(0.05, 1.0))
    a = pi.sample(obs, noise=noise).action
    assume(relu_margin(pi.trunk, obs) > KINK_MARGIN)
    assume(relu_margin(q.net, np.concatenate([obs, a], axis=1)) > KINK_MARGIN)
    _, grads, _ = actor_loss(pi, q, obs, noise, alpha)
    num = numeric_grad(lambda: actor_loss(pi, q, obs, noise, alpha)[0], pi.params())
    assert relative_error(grads, num) < GRAD_TOL


@given(log_alpha=st.floats(-3, 1), seed=st.integers(0, 2**31))
def test_alpha_loss_gradcheck(log_alpha, seed):
    logp = np.random.default_rng(seed).standard_normal(10)
    la = np.array([log_alpha])
    _, g = alpha_loss(la[0], logp, -2.0)
    num = numeric_grad(lambda: alpha_loss(la[0], logp, -2.0)[0], [la])
    assert relative_error([np.array([g])], num) < GRAD_TOL


# checkpoints

def test_checkpoint_round_trip(tmp_path):
    pi = make_policy(0)
    q = QEnsemble(3, 2, (8, 8), 2, np.random.default_rng(1))
    path = tmp_path / "p.ckpt"
    ck.save_policy(path, pi, q, meta={"step": 7})
    pi2, q2, meta = ck.load_policy(path, expected=pi.descriptor())
    obs = np.random.default_rng(2).standard_normal((4, 3))
    assert np.array_equal(pi.act_batch(obs, deterministic=True), pi2.act_batch(obs, deterministic=True))
    assert np.array_equal(q.q_values(obs, np.zeros((4, 2))), q2.q_values(obs, np.zeros((4, 2))))
    assert meta["step"] == 7


def test_checkpoint_errors(tmp_path):
    pi = make_policy(0)
    path = tmp_path / "p.ckpt"
    with pytest.raises(CheckpointError):
        ck.load_policy(tmp_path / "missing.ckpt")
    ck.save_policy(path, pi)
    raw = path.read_bytes()
    with pytest.raises(CheckpointError):
        ck.load_policy(path, expected=make_policy(0, obs_dim=4).descriptor())
    (tmp_path / "bad.ckpt").write_bytes(b"NOTMAGIC" + raw[8:])
    with pytest.raises(CheckpointError):
        ck.load_policy(tmp_path / "bad.ckpt")
    (tmp_path / "short.ckpt").write_bytes(raw[:-8])
    with pytest.raises(CheckpointError):
        ck.load_policy(tmp_path / "short.ckpt")
    (tmp_path / "long.ckpt").write_bytes(raw + b"\0")
    with pytest.raises(CheckpointError):
        ck.load_policy(tmp_path / "long.ckpt")
