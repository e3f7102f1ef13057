import numpy as np
import pytest

from ts2c.env.tabular_mdp import make_random_mdp, two_state_mdp
from ts2c.errors import ParameterError, StateError
from ts2c.intervention import InterventionConfig, decide_ts2c
from ts2c.neural import QEnsemble
from ts2c.oracle import tabular as tab
from ts2c.oracle.embedding import (OneHotPolicy, all_pairs, bellman_residual, ensemble_q_table,
                                   fit_teacher_ensemble, one_hot)
from ts2c.oracle.tabular import TabularPolicy


def test_one_hot_rows():
    x = one_hot([2, 0], 3)
    assert np.array_equal(x, [[0, 0, 1], [1, 0, 0]])
    assert one_hot(1, 2).shape == (1, 2)


def test_all_pairs_row_major():
    mdp = make_random_mdp(3, 2, 0.9, 0)
    s, a = all_pairs(mdp)
    assert s.shape == (6, 3) and a.shape == (6, 2)
    assert np.array_equal(np.argmax(s, axis=1), [0, 0, 1, 1, 2, 2])
    assert np.array_equal(np.argmax(a, axis=1), [0, 1, 0, 1, 0, 1])


def test_one_hot_policy_deterministic_and_frequencies():
    probs = np.array([[0.2, 0.8, 0.0], [0.5, 0.25, 0.25]])
    pi = OneHotPolicy(TabularPolicy(probs))
    assert np.array_equal(pi.act_batch(one_hot([0, 1], 2), deterministic=True), one_hot([1, 0], 3))
    n = 40_000
    acts = pi.act_batch(one_hot(np.ones(n, dtype=int), 2), np.random.default_rng(0))
    freq = acts.mean(axis=0)
    se = np.sqrt(probs[1] * (1 - probs[1]) / n)
    assert np.all(np.abs(freq - probs[1]) < 4 * se)
    assert np.all(acts.sum(axis=1) == 1.0)
    # zero-probability actions are never drawn
    assert pi.act_batch(one_hot(np.zeros(n, dtype=int), 2), np.random.default_rng(1))[:, 2].sum() == 0


def test_q_table_matches_forward_pass():
    mdp = make_random_mdp(4, 3, 0.9, 1)
    ens = QEnsemble(4, 3, (5,), 3, np.random.default_rng(0))
    table = ensemble_q_table(ens, mdp)
    assert table.shape == (3, 4, 3)
    q = ens.q_values(one_hot([2], 4), one_hot([1], 3))
    np.testing.assert_allclose(table[:, 2, 1], q[:, 0], atol=1e-12)


def test_bellman_residual_by_hand():
    mdp = two_state_mdp(0.5)
    pit = TabularPolicy.deterministic([1, 1], 2)
    ens = QEnsemble(2, 2, (3,), 2, np.random.default_rng(0))
    q = ensemble_q_table(ens, mdp).mean(axis=0)
    v = q[:, 1]
    expected = np.max(np.abs(q - (mdp.reward + 0.5 * mdp.transition @ v)))
    assert bellman_residual(ens, mdp, pit) == pytest.approx(expected, abs=1e-12)


def test_fit_reaches_tolerance_and_tracks_exact_q():
    mdp = make_random_mdp(5, 2, 0.9, 3)
    rng = np.random.default_rng(4)
    pit = TabularPolicy.random(5, 2, rng)
    ens, residual, iters = fit_teacher_ensemble(mdp, pit, n_members=3, hidden=(32,), lr=3e-3, seed=0)
    assert ens.trained and residual < 0.01 and iters < 50_000
    _, Q = tab.exact_value(mdp, pit)
    # residual r bounds the value error by r / (1 - gamma)
    err = np.max(np.abs(ensemble_q_table(ens, mdp).mean(axis=0) - Q))
    assert err <= residual / (1 - mdp.gamma) + 1e-9


def test_fit_rejects_large_instance():
    mdp = make_random_mdp(1000, 5, 0.9, 0)
    with pytest.raises(ParameterError):
        fit_teacher_ensemble(mdp, TabularPolicy.uniform(1000, 5))


def test_untrained_ensemble_refuses_decision():
    ens = QEnsemble(2, 2, (3,), 2, np.random.default_rng(0))
    pi = OneHotPolicy(TabularPolicy.uniform(2, 2))
    with pytest.raises(StateError):
        decide_ts2c(ens, pi, pi, one_hot(0, 2)[0], InterventionConfig(), np.random.default_rng(0))
