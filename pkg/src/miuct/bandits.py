"""Bandit policies: UCB1, Improved UCB and Modified Improved UCB.

Every policy follows the same protocol::

    arm = policy.select()
    policy.update(arm, reward)

``run_policy`` drives a policy against a reward oracle for a fixed number
of plays and returns the pull log.  Improved UCB and Modified Improved UCB
need a horizon; when it is unknown they are run episodically with budgets
2, 4, 16, 256, ... (each budget the square of the previous one).

Conventions shared by all formulas below: ``log`` is the natural log, a
log argument below 1 is clamped to 1 so confidence half-widths never go
imaginary, per-arm sample targets are at least 1, and every argmax breaks
ties towards the lowest arm index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Optional

import numpy as np

INF = math.inf


class PolicyKind(str, Enum):
    UCB1 = "UCB1"
    IUCB = "IUCB"
    MODIUCB = "MODIUCB"


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind
    episodic: bool = False
    use_r_factor: bool = False
    exploration_c: float = math.sqrt(2.0)
    horizon: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind(self.kind))
        if self.use_r_factor and self.kind is not PolicyKind.MODIUCB:
            raise ValueError("use_r_factor only applies to MODIUCB")
        if self.kind is PolicyKind.UCB1:
            if self.episodic:
                raise ValueError("UCB1 is anytime; it has no episodic mode")
            if not self.exploration_c > 0:
                raise ValueError("exploration_c must be positive")
        elif not self.episodic and (self.horizon is None or self.horizon < 1):
            raise ValueError(f"{self.kind.value} needs a horizon >= 1 when not episodic")

    def with_horizon(self, horizon: int) -> "PolicyConfig":
        if self.kind is PolicyKind.UCB1 or self.episodic:
            return self
        return PolicyConfig(self.kind, self.episodic, self.use_r_factor, self.exploration_c, horizon)


# CLI names of the seven testbed variants.  Non-episodic variants get their
# horizon filled in by the testbed (``PolicyConfig.with_horizon``).
VARIANTS = {
    "ucb1": dict(kind=PolicyKind.UCB1),
    "iucb": dict(kind=PolicyKind.IUCB, episodic=False),
    "iucb-ep": dict(kind=PolicyKind.IUCB, episodic=True),
    "miucb-nor": dict(kind=PolicyKind.MODIUCB, episodic=False, use_r_factor=False),
    "miucb-nor-ep": dict(kind=PolicyKind.MODIUCB, episodic=True, use_r_factor=False),
    "miucb": dict(kind=PolicyKind.MODIUCB, episodic=False, use_r_factor=True),
    "miucb-ep": dict(kind=PolicyKind.MODIUCB, episodic=True, use_r_factor=True),
}


def variant(name: str, horizon: Optional[int] = None) -> PolicyConfig:
    try:
        kw = dict(VARIANTS[name])
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(VARIANTS)}") from None
    if kw["kind"] is not PolicyKind.UCB1 and not kw["episodic"]:
        kw["horizon"] = horizon
    return PolicyConfig(**kw)


def variant_name(config: PolicyConfig) -> str:
    for name, kw in VARIANTS.items():
        if all(getattr(config, k) == v for k, v in kw.items()):
            return name
    raise ValueError(f"{config} is not one of the named variants")


# ---------------------------------------------------------------- formulas


def clamped_log(x: float) -> float:
    return math.log(x) if x > 1.0 else 0.0


def n_arm_samples(horizon_T: int, delta: float) -> int:
    """Per-arm sample target ``ceil(2 log(T delta^2) / delta^2)``, at least 1."""
    if horizon_T < 1:
        raise ValueError("horizon_T must be >= 1")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    return max(1, math.ceil(2.0 * clamped_log(horizon_T * delta * delta) / (delta * delta)))


def num_rounds(horizon_T: int) -> int:
    """Elimination rounds run by Improved UCB for a budget of ``horizon_T`` plays."""
    if horizon_T < 1:
        raise ValueError("horizon_T must be >= 1")
    return max(0, math.floor(0.5 * math.log2(horizon_T / math.e))) + 1


def half_width(horizon_T: int, delta: float, n: float) -> float:
    return math.sqrt(clamped_log(horizon_T * delta * delta) / (2.0 * n))


def episode_budgets() -> Iterator[int]:
    t = 2
    while True:
        yield t
        t *= t


# ------------------------------------------------------------------ state


class ArmStats:
    """Pull counts and running mean rewards for ``n_arms`` arms."""

    def __init__(self, n_arms: int):
        self.pulls = np.zeros(n_arms, dtype=np.int64)
        self.means = np.zeros(n_arms, dtype=np.float64)

    def __len__(self):
        return len(self.pulls)

    def update(self, arm: int, reward: float):
        n = self.pulls[arm] + 1
        self.pulls[arm] = n
        self.means[arm] += (reward - self.means[arm]) / n


@dataclass
class ModIucbState:
    """Bookkeeping of one Modified Improved UCB episode."""

    delta: float
    horizon_T: int
    n_k: int
    arm_count: int
    delta_deadline: int
    episode: int = 0

    @classmethod
    def start(cls, n_arms: int, horizon_T: int, episode: int = 0) -> "ModIucbState":
        n0 = n_arm_samples(horizon_T, 1.0)
        return cls(1.0, horizon_T, n0, n_arms, n0 * n_arms, episode)


@dataclass
class CandidateSet:
    alive: np.ndarray

    @classmethod
    def full(cls, n_arms: int) -> "CandidateSet":
        return cls(np.ones(n_arms, dtype=bool))

    def remove(self, arm: int):
        self.alive[arm] = False

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.alive)


# ------------------------------------------------------ Modified Improved UCB


def modiucb_values(stats: ArmStats, st: ModIucbState, total_T: int, use_r_factor: bool) -> np.ndarray:
    """Optimistic values ``w_i + sqrt(log(T delta^2) r_i / (2 n_k))``; unpulled arms are +inf."""
    log_term = clamped_log(total_T * st.delta * st.delta)
    pulls = stats.pulls
    with np.errstate(divide="ignore"):
        if use_r_factor:
            r = total_T / pulls.astype(np.float64)
        else:
            r = np.ones(len(pulls))
        values = stats.means + np.sqrt(log_term * r / (2.0 * st.n_k))
    values[pulls == 0] = INF
    return values


def modiucb_select(stats: ArmStats, st: ModIucbState, total_T: int, use_r_factor: bool = True) -> int:
    # argmax over all arms, eliminated ones included
    unpulled = np.flatnonzero(stats.pulls == 0)
    if len(unpulled):
        return int(unpulled[0])
    return int(np.argmax(modiucb_values(stats, st, total_T, use_r_factor)))


def count_eliminated(means: np.ndarray, reference: float, h: float) -> int:
    return int(np.count_nonzero(means + h < reference - h))


def modiucb_update(stats: ArmStats, st: ModIucbState, arm: int, reward: float, m: int, total_T: int):
    """Record a pull made at play index ``m``; process the Δ deadline if it is due."""
    if not math.isfinite(reward):
        raise ValueError("reward must be finite")
    stats.update(arm, reward)
    if m >= st.delta_deadline:
        h = half_width(total_T, st.delta, st.n_k)
        gone = count_eliminated(stats.means, float(stats.means.max()), h)
        st.arm_count = max(1, len(stats) - gone)
        st.delta /= 2.0
        st.n_k = n_arm_samples(total_T, st.delta)
        st.delta_deadline = m + st.n_k * st.arm_count


class ModifiedImprovedUCB:
    """One episode of Modified Improved UCB with a known budget ``horizon``."""

    def __init__(self, n_arms: int, horizon: int, use_r_factor: bool = True,
                 stats: Optional[ArmStats] = None, episode: int = 0):
        self.stats = stats if stats is not None else ArmStats(n_arms)
        self.horizon = horizon
        self.use_r_factor = use_r_factor
        self.state = ModIucbState.start(n_arms, horizon, episode)
        self.m = 0

    def select(self) -> int:
        return modiucb_select(self.stats, self.state, self.horizon, self.use_r_factor)

    def update(self, arm: int, reward: float):
        modiucb_update(self.stats, self.state, arm, reward, self.m, self.horizon)
        self.m += 1


# ------------------------------------------------------------ Improved UCB


class ImprovedUCB:
    """Improved UCB with a known budget ``horizon``.

    Each round tops every candidate arm up to ``n_m`` pulls (counted within
    this run), then drops candidates whose upper bound falls below the
    best candidate's lower bound, then halves Δ.  When the rounds are used
    up before the budget is, the best remaining candidate is pulled.
    """

    def __init__(self, n_arms: int, horizon: int):
        self.n_arms = n_arms
        self.horizon = horizon
        self.stats = ArmStats(n_arms)
        self.candidates = CandidateSet.full(n_arms)
        self.delta = 1.0
        self.rounds = num_rounds(horizon)
        self.round = 0
        self.round_log: list[dict] = []
        self._queue = self._round_schedule()

    def _round_schedule(self) -> list[int]:
        n_m = n_arm_samples(self.horizon, self.delta)
        self.n_m = n_m
        queue = []
        for arm in self.candidates.indices():
            queue.extend([int(arm)] * max(0, n_m - int(self.stats.pulls[arm])))
        queue.reverse()
        return queue

    def _end_round(self):
        alive = self.candidates.indices()
        h = half_width(self.horizon, self.delta, self.n_m)
        w = self.stats.means[alive]
        w_max = w.max()
        for arm, wi in zip(alive, w):
            if wi + h < w_max - h:
                self.candidates.remove(int(arm))
        self.round_log.append({"round": self.round, "n_m": self.n_m, "delta": self.delta,
                               "alive": int(self.candidates.alive.sum())})
        self.delta /= 2.0
        self.round += 1

    def select(self) -> int:
        while not self._queue:
            if self.round >= self.rounds:
                alive = self.candidates.indices()
                return int(alive[np.argmax(self.stats.means[alive])])
            self._queue = self._round_schedule()
            if not self._queue:
                self._end_round()
        return self._queue[-1]

    def update(self, arm: int, reward: float):
        self.stats.update(arm, reward)
        if self._queue and self._queue[-1] == arm:
            self._queue.pop()
            if not self._queue and self.round < self.rounds:
                self._end_round()


# -------------------------------------------------------------------- UCB1


class UCB1:
    """``w_i + c sqrt(log t / t_i)``, every arm pulled once first."""

    def __init__(self, n_arms: int, exploration_c: float = math.sqrt(2.0)):
        self.stats = ArmStats(n_arms)
        self.c = exploration_c
        self.t = 0

    def select(self) -> int:
        if self.t < len(self.stats):
            return self.t
        bonus = self.c * np.sqrt(math.log(self.t) / self.stats.pulls)
        return int(np.argmax(self.stats.means + bonus))

    def update(self, arm: int, reward: float):
        self.stats.update(arm, reward)
        self.t += 1


# --------------------------------------------------------------- episodic


class Episodic:
    """Restart a fixed-budget policy with budgets 2, 4, 16, 256, ...

    ``factory(budget, stats, episode)`` builds the policy for one episode.
    ``stats`` is the cumulative ArmStats that lives across episodes; the
    factory decides whether the episode shares it.
    """

    def __init__(self, n_arms: int, factory: Callable[[int, ArmStats, int], object]):
        self.stats = ArmStats(n_arms)
        self.factory = factory
        self._budgets = episode_budgets()
        self.episode = -1
        self.boundaries: list[int] = []
        self._plays = 0
        self._next_episode()

    def _next_episode(self):
        self.episode += 1
        self.budget = next(self._budgets)
        self.used = 0
        self.boundaries.append(self._plays)
        self.inner = self.factory(self.budget, self.stats, self.episode)

    def select(self) -> int:
        if self.used >= self.budget:
            self._next_episode()
        return self.inner.select()

    def update(self, arm: int, reward: float):
        self.inner.update(arm, reward)
        if self.inner.stats is not self.stats:
            self.stats.update(arm, reward)
        self.used += 1
        self._plays += 1


def make_policy(config: PolicyConfig, n_arms: int):
    if n_arms < 1:
        raise ValueError("need at least one arm")
    if config.kind is PolicyKind.UCB1:
        return UCB1(n_arms, config.exploration_c)
    if config.kind is PolicyKind.IUCB:
        if config.episodic:
            return Episodic(n_arms, lambda budget, stats, ep: ImprovedUCB(n_arms, budget))
        return ImprovedUCB(n_arms, config.horizon)
    if config.episodic:
        # pull counts (hence r_i) and means carry over; Δ, n_k, arm count restart
        return Episodic(n_arms, lambda budget, stats, ep: ModifiedImprovedUCB(
            n_arms, budget, config.use_r_factor, stats=stats, episode=ep))
    return ModifiedImprovedUCB(n_arms, config.horizon, config.use_r_factor)


# -------------------------------------------------------------- runners


@dataclass
class PullLog:
    arms: np.ndarray
    rewards: np.ndarray
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.arms)


def run_policy(config: PolicyConfig, bandit: Callable[[int], float], n_arms: int,
               total_plays: int, policy=None) -> PullLog:
    """Play ``total_plays`` pulls of ``config`` against ``bandit(arm) -> reward``."""
    if total_plays < 1:
        raise ValueError("total_plays must be >= 1")
    policy = policy if policy is not None else make_policy(config, n_arms)
    arms = np.empty(total_plays, dtype=np.int64)
    rewards = np.empty(total_plays, dtype=np.float64)
    for t in range(total_plays):
        arm = policy.select()
        reward = bandit(arm)
        policy.update(arm, reward)
        arms[t] = arm
        rewards[t] = reward
    extra = {}
    if isinstance(policy, Episodic):
        extra["episode_starts"] = list(policy.boundaries)
    return PullLog(arms, rewards, extra)


def run_improved_ucb(bandit: Callable[[int], float], n_arms: int, horizon_T: int) -> PullLog:
    """Improved UCB for exactly its budget; the log stops at ``horizon_T`` pulls."""
    if n_arms < 2:
        raise ValueError("Improved UCB needs at least two arms")
    policy = ImprovedUCB(n_arms, horizon_T)
    log = run_policy(PolicyConfig(PolicyKind.IUCB, horizon=horizon_T), bandit, n_arms, horizon_T, policy)
    log.extra["rounds"] = policy.round_log
    log.extra["alive"] = policy.candidates.alive.copy()
    return log


def run_episodic(config: PolicyConfig, bandit: Callable[[int], float], n_arms: int,
                 total_plays: int) -> PullLog:
    if not config.episodic:
        raise ValueError("run_episodic needs an episodic config")
    return run_policy(config, bandit, n_arms, total_plays)
