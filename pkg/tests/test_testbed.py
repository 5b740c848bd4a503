import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

import oracles
from miuct.bandits import PolicyConfig, PolicyKind, variant
from miuct.testbed import (
    GaussianBanditTask, TestbedConfig, emit_curves, read_curves, run_task, run_testbed, task_for,
)

UCB1 = PolicyConfig(PolicyKind.UCB1)


@pytest.fixture(scope="module")
def expected_max_60():
    """E[max of 60 iid standard normals] by quadrature over the max's density."""
    f = lambda x: x * 60 * stats.norm.pdf(x) * stats.norm.cdf(x) ** 59
    return integrate.quad(f, -10, 10)[0]


class Fixed:
    def __init__(self, arm):
        self.arm = arm

    def select(self):
        return self.arm

    def update(self, arm, reward):
        pass


class Uniform:
    def __init__(self, k, seed):
        self.k = k
        self.rng = np.random.default_rng(seed)

    def select(self):
        return int(self.rng.integers(self.k))

    def update(self, arm, reward):
        pass


def test_task_reproducible():
    a, b = task_for(3, 7, 60, 10), task_for(3, 7, 60, 10)
    assert np.array_equal(a.means, b.means) and np.array_equal(a.noise, b.noise)
    assert not np.array_equal(a.means, task_for(3, 8, 60, 10).means)
    assert a.optimal_arm == int(np.argmax(a.means))


def test_means_law_of_large_numbers(expected_max_60):
    means = np.array([task_for(0, i, 60, 1).means for i in range(10_000)])
    assert abs(means[:, 0].mean()) <= 0.05
    assert abs(means[:, 0].var() - 1) <= 0.1
    assert abs(expected_max_60 - 2.32) < 0.01
    assert abs(means.max(axis=1).mean() - expected_max_60) <= 0.05


def test_rewards_are_means_plus_unit_noise():
    task = task_for(1, 0, 3, 20_000)
    pull = task.bandit()
    r = np.array([pull(2) for _ in range(20_000)])
    assert abs(r.mean() - task.means[2]) < 0.03 and abs(r.std() - 1) < 0.03


def test_always_optimal_policy_has_zero_regret():
    task = task_for(2, 0, 60, 200)
    inc, flags = run_task(task, UCB1, 200, policy_obj=Fixed(task.optimal_arm))
    assert (inc == 0).all() and (flags == 1).all()


def test_uniform_random_regret(expected_max_60):
    per_play = []
    for i in range(1000):
        task = task_for(4, i, 60, 50)
        inc, _ = run_task(task, UCB1, 50, policy_obj=Uniform(60, i))
        per_play.append(inc.mean())
    assert abs(np.mean(per_play) - expected_max_60) <= 0.1


def test_ucb1_two_arm_noise_free_matches_brute_force():
    H = 1000
    task = GaussianBanditTask(np.array([1.0, 0.0]), np.zeros((2, H)))
    inc, flags = run_task(task, UCB1, H)
    expected = oracles.ucb1(oracles.Arms([[1.0], [0.0]]), 2, H)
    assert list(np.flatnonzero(flags == 0)) == [i for i, a in enumerate(expected) if a != 0]
    cum = np.cumsum(inc)
    assert flags[-100:].mean() > 0.95
    assert cum[-1] / H < cum[99] / 100  # sub-linear
    assert cum[-1] <= 2 * math.log(H) / 1.0 ** 2 + 3  # UCB1 bound with gap 1


def test_received_regret_switch():
    task = task_for(5, 0, 4, 100)
    pseudo, _ = run_task(task, UCB1, 100)
    received, _ = run_task(task, UCB1, 100, regret="received")
    assert (pseudo >= 0).all() and (received < 0).any()
    with pytest.raises(ValueError):
        run_task(task, UCB1, 10, regret="bogus")


def _small(**kw):
    base = dict(policies=[UCB1, variant("miucb-ep"), variant("iucb", 300)],
                num_tasks=60, n_arms=10, horizon=300, seed=9)
    base.update(kw)
    return TestbedConfig(**base)


def test_run_testbed_deterministic_and_bounded():
    a, b = run_testbed(_small()), run_testbed(_small())
    assert list(a) == ["ucb1", "miucb-ep", "iucb"]
    for name in a:
        assert np.array_equal(a[name].cum_regret, b[name].cum_regret)
        assert (np.diff(a[name].cum_regret) >= 0).all() and a[name].cum_regret[0] >= 0
        assert ((a[name].optimal_pct >= 0) & (a[name].optimal_pct <= 100)).all()


def test_single_task_curve_equals_task():
    cfg = _small(num_tasks=1)
    curves = run_testbed(cfg)
    task = task_for(cfg.seed, 0, cfg.n_arms, cfg.horizon)
    inc, flags = run_task(task, UCB1, cfg.horizon)
    assert np.allclose(curves["ucb1"].cum_regret, np.cumsum(inc), rtol=0, atol=1e-12)
    assert np.array_equal(curves["ucb1"].optimal_pct, 100 * flags)


def test_halves_average_to_full_run():
    full = run_testbed(_small(num_tasks=60))
    lo = run_testbed(_small(num_tasks=30))
    hi = run_testbed(_small(num_tasks=30, task_offset=30))
    for name in full:
        avg = (lo[name].cum_regret + hi[name].cum_regret) / 2
        assert np.allclose(full[name].cum_regret, avg, rtol=0, atol=1e-9)


def test_parallel_equals_serial():
    serial = run_testbed(_small())
    par = run_testbed(_small(parallel=2))
    for name in serial:
        assert np.array_equal(serial[name].cum_regret, par[name].cum_regret)
        assert np.array_equal(serial[name].optimal_pct, par[name].optimal_pct)


def test_policies_see_paired_noise():
    task = task_for(6, 3, 5, 50)
    p1, p2 = task.bandit(), task.bandit()
    seq1 = [p1(i % 5) for i in range(30)]
    seq2 = [p2(i) for i in range(5) for _ in range(6)]
    by_arm1 = {a: [r for j, r in enumerate(seq1) if j % 5 == a] for a in range(5)}
    by_arm2 = {a: seq2[6 * a: 6 * a + 6] for a in range(5)}
    assert by_arm1 == by_arm2


@given(st.integers(0, 2**31), st.integers(2, 8), st.integers(1, 60))
@settings(max_examples=30, deadline=None)
def test_pseudo_regret_non_negative(seed, k, horizon):
    task = task_for(seed, 0, k, horizon)
    for pol in (UCB1, variant("miucb", horizon), variant("iucb-ep")):
        inc, flags = run_task(task, pol, horizon)
        assert (inc >= 0).all() and len(inc) == horizon
        assert ((flags == 0) | (flags == 1)).all()


def test_emit_rows_order_and_round_trip(tmp_path):
    cfg = _small(num_tasks=3, horizon=3, policies=[UCB1, variant("miucb-ep")])
    curves = run_testbed(cfg)
    path = tmp_path / "curves.csv"
    emit_curves(curves, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "play,policy,cum_regret,optimal_pct"
    assert len(lines) == 7
    keys = [(l.split(",")[1], int(l.split(",")[0])) for l in lines[1:]]
    assert keys == [("ucb1", 1), ("ucb1", 2), ("ucb1", 3),
                    ("miucb-ep", 1), ("miucb-ep", 2), ("miucb-ep", 3)]
    back = read_curves(path)
    for name in curves:
        assert np.allclose(back[name].cum_regret, curves[name].cum_regret, rtol=0, atol=1e-9)
        assert np.allclose(back[name].optimal_pct, curves[name].optimal_pct, rtol=0, atol=1e-9)


def test_emit_reports_path(tmp_path):
    curves = run_testbed(_small(num_tasks=1, horizon=2))
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        emit_curves(curves, bad)


def test_config_validation():
    with pytest.raises(ValueError):
        TestbedConfig([UCB1], num_tasks=0)
    with pytest.raises(ValueError):
        TestbedConfig([UCB1], n_arms=1)
    with pytest.raises(ValueError):
        TestbedConfig([])
