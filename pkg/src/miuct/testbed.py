"""Gaussian K-armed bandit testbed.

Each task draws K arm means from N(0, 1); a pull of arm i returns
``means[i] + noise`` with unit-variance Gaussian noise.  The noise for the
j-th pull of arm i is fixed per task (a Philox stream keyed by the task
seed), so two policies that pull the same arm the same number of times see
the same rewards.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bandits import PolicyConfig, make_policy, variant_name

BLOCK = 25  # tasks per work unit; fixed so results do not depend on worker count


@dataclass
class GaussianBanditTask:
    means: np.ndarray
    noise: np.ndarray  # (K, max pulls per arm)

    @property
    def n_arms(self) -> int:
        return len(self.means)

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    def bandit(self):
        """Fresh reward oracle: ``oracle(arm) -> reward``."""
        counts = np.zeros(self.n_arms, dtype=np.int64)
        means, noise = self.means, self.noise

        def pull(arm):
            j = counts[arm]
            counts[arm] = j + 1
            return means[arm] + noise[arm, j]

        return pull


def task_seed(seed: int, task_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & (2**63 - 1), int(task_index)])


def generate_task(n_arms: int, rng: np.random.Generator, horizon: int = 1,
                  noise_seed: Optional[np.random.SeedSequence] = None) -> GaussianBanditTask:
    """Draw a task; ``horizon`` bounds how many pulls any arm can receive."""
    if n_arms < 2:
        raise ValueError("a task needs at least two arms")
    means = rng.standard_normal(n_arms)
    noise_rng = np.random.Generator(np.random.Philox(
        noise_seed if noise_seed is not None else int(rng.integers(2**63))
    ))
    noise = noise_rng.standard_normal((n_arms, horizon))
    return GaussianBanditTask(means, noise)


def task_for(seed: int, task_index: int, n_arms: int, horizon: int) -> GaussianBanditTask:
    means_seq, noise_seq = task_seed(seed, task_index).spawn(2)
    return generate_task(n_arms, np.random.default_rng(means_seq), horizon, noise_seq)


def run_task(task: GaussianBanditTask, policy: PolicyConfig, horizon: int,
             regret: str = "pseudo", policy_obj=None):
    """Play ``horizon`` pulls; return per-play regret increments and optimal-arm flags.

    ``regret="pseudo"`` charges ``max(means) - means[arm]``; ``"received"``
    charges ``max(means) - reward`` as in the textbook definition.
    """
    pol = policy_obj if policy_obj is not None else make_policy(policy.with_horizon(horizon), task.n_arms)
    pull = task.bandit()
    best = task.means.max()
    opt = task.optimal_arm
    arms = np.empty(horizon, dtype=np.int64)
    rewards = np.empty(horizon)
    select, update = pol.select, pol.update
    for t in range(horizon):
        arm = select()
        r = pull(arm)
        update(arm, r)
        arms[t] = arm
        rewards[t] = r
    if regret == "pseudo":
        inc = best - task.means[arms]
    elif regret == "received":
        inc = best - rewards
    else:
        raise ValueError(f"unknown regret mode {regret!r}")
    return inc, (arms == opt).astype(np.float64)


@dataclass
class TestbedConfig:
    __test__ = False

    policies: Sequence[PolicyConfig]
    num_tasks: int = 2000
    n_arms: int = 60
    horizon: int = 5000
    seed: int = 0
    task_offset: int = 0
    regret: str = "pseudo"
    parallel: int = 1
    names: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.num_tasks < 1 or self.n_arms < 2 or self.horizon < 1:
            raise ValueError("need num_tasks >= 1, n_arms >= 2, horizon >= 1")
        if not self.policies:
            raise ValueError("no policies given")
        self.policies = [p.with_horizon(self.horizon) for p in self.policies]
        if self.names is None:
            self.names = [variant_name(p) for p in self.policies]


@dataclass
class RegretCurve:
    cum_regret: np.ndarray
    optimal_pct: np.ndarray
    num_tasks: int = 0
    meta: dict = field(default_factory=dict)


def _run_block(config: TestbedConfig, first: int, last: int):
    sums = np.zeros((len(config.policies), 2, config.horizon))
    for i in range(first, last):
        task = task_for(config.seed, config.task_offset + i, config.n_arms, config.horizon)
        for j, pol in enumerate(config.policies):
            inc, flags = run_task(task, pol, config.horizon, config.regret)
            sums[j, 0] += inc
            sums[j, 1] += flags
    return sums


def run_testbed(config: TestbedConfig) -> dict[str, RegretCurve]:
    """Average every policy over the same task sequence."""
    blocks = [(a, min(a + BLOCK, config.num_tasks)) for a in range(0, config.num_tasks, BLOCK)]
    if config.parallel > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(config.parallel) as pool:
            parts = list(pool.map(_run_block, [config] * len(blocks), *zip(*blocks)))
    else:
        parts = [_run_block(config, a, b) for a, b in blocks]
    total = np.zeros_like(parts[0])
    for part in parts:  # fixed block order keeps the float sums reproducible
        total += part
    total /= config.num_tasks
    curves = {}
    for j, name in enumerate(config.names):
        curves[name] = RegretCurve(np.cumsum(total[j, 0]), 100.0 * total[j, 1], config.num_tasks)
    return curves


def emit_curves(curves: dict[str, RegretCurve], path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["play", "policy", "cum_regret", "optimal_pct"])
            for name, curve in curves.items():
                for t in range(len(curve.cum_regret)):
                    w.writerow([t + 1, name, repr(float(curve.cum_regret[t])), repr(float(curve.optimal_pct[t]))])
    except OSError as exc:
        raise OSError(f"cannot write curves to {path}: {exc}") from exc


def read_curves(path) -> dict[str, RegretCurve]:
    rows: dict[str, list] = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.setdefault(row["policy"], []).append(
                (int(row["play"]), float(row["cum_regret"]), float(row["optimal_pct"])))
    curves = {}
    for name, data in rows.items():
        data.sort()
        curves[name] = RegretCurve(np.array([d[1] for d in data]), np.array([d[2] for d in data]))
    return curves
