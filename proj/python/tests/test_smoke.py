import numpy as np
import pytest

import bisim


def test_chain_metric():
    run = bisim.solve_metric(bisim.Mdp.chain(), tol=1e-9)
    d = run["d"]
    assert d.shape == (3, 3)
    assert d[0, 1] == pytest.approx(1.9, abs=1e-9)
    assert d[0, 2] == pytest.approx(0.9, abs=1e-9)
    assert d[1, 2] == pytest.approx(1.0, abs=1e-9)
    assert run["iterations"] <= 4
    assert bisim.check_pseudometric(d)["ok"]


def test_chain_quotients():
    d = bisim.solve_metric(bisim.Mdp.chain())["d"]
    assert bisim.quotient(d, 1.2)["classes"] == [[0, 1, 2]]
    q = bisim.quotient(d, 0.95)
    assert q["classes"] == [[0, 2], [1]]
    assert q["d_q"].shape == (2, 2)


def test_mdp_roundtrip_and_validation():
    p = np.zeros((2, 1, 2))
    p[0, 0, 1] = p[1, 0, 1] = 1.0
    r = np.array([[1.0], [0.0]])
    m = bisim.Mdp(p, r, 0.5)
    assert (m.n_states, m.n_actions, m.gamma) == (2, 1, 0.5)
    np.testing.assert_array_equal(m.transitions, p)
    again = bisim.Mdp.from_json(m.to_json())
    np.testing.assert_array_equal(again.rewards, r)
    # Two-state closed form: d = r / (1 - gamma * 0) since both move to state 1.
    assert bisim.solve_metric(m)["d"][0, 1] == pytest.approx(1.0, abs=1e-9)

    bad = p.copy()
    bad[0, 0, 1] = 0.5
    with pytest.raises(ValueError):
        bisim.Mdp(bad, r, 0.5)
    with pytest.raises(ValueError):
        bisim.Mdp(p, r, 1.0)


def test_w1_on_a_line():
    rng = np.random.default_rng(3)
    n = 12
    mu, nu = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
    cost = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
    sol = bisim.w1(mu, nu, cost)
    oracle = np.abs(np.cumsum(mu - nu)[:-1]).sum()
    assert sol["value"] == pytest.approx(oracle, abs=1e-9)
    assert sol["gap"] <= 1e-7
    np.testing.assert_allclose(sol["coupling"].sum(axis=1), mu, atol=1e-12)


def test_planning_and_bounds():
    m = bisim.Mdp.random(6, 3, 0.9, seed=5)
    v = bisim.value_iteration(m)
    d = bisim.solve_metric(m)["d"]
    assert np.max(np.abs(np.subtract.outer(v, v)) - d) <= 1e-7
    pi = bisim.greedy_policy(m, v)
    np.testing.assert_allclose(bisim.policy_value(m, pi), v, atol=1e-6)
    report = bisim.value_loss(m, 0.1 * d.max())
    assert report["value_loss"] <= report["bound_diam"] + 1e-6


def test_logic():
    m = bisim.Mdp.chain()
    d = bisim.solve_metric(m, tol=1e-12)["d"]
    np.testing.assert_allclose(bisim.eval_formula(m, "(reward 0)"), [0.0, 1.0, 0.0])
    assert bisim.soundness_probe(m, d, seed=1, count=50)["ok"]
    lower, gap = bisim.completeness_probe(m, d, 0, 1, 20)
    assert -1e-9 <= gap <= 0.9**20 * d.max() + 1e-7
    assert isinstance(bisim.random_formula(m, 7), str)


def test_diagnostics():
    d = bisim.solve_metric(bisim.Mdp.grid_world(side=3))["d"]
    rep = bisim.spectral_report(d)
    assert rep["spectral_radius"] <= rep["frobenius"] + 1e-9
    mean, std = bisim.summary_stats(d)
    assert mean > 0 and std >= 0


def test_run_suite_and_config_errors():
    cfg = 'suite = "info_theory"\nenvironment = "chain"\nepsilons = [0.95]\n'
    report = bisim.run_suite(cfg)
    assert report["suite"] == "info_theory"
    assert all(c["passed"] for c in report["checks"])
    with pytest.raises(ValueError):
        bisim.run_suite('suite = "no_such_suite"\n')
