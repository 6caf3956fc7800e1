"""The deception intrinsic reward.

For an acting player i and an observing player j, the Bayes factor on i's
true role is

    factor = L(true role) / sum_z L(z) * B_j(z)

where L(z) is the likelihood of i's action under the role-z policy and
B_j(z) is i's model of j's belief about i's role.  The per-step bonus is the
sum of -log(factor) over j: negative when the action looks typical of the
true role, positive when it looks like another role's behavior, and zero
when the observer is already certain.

Observers are the living players that can currently see the actor, plus an
independent Bernoulli sample of the non-observers.  Dead players neither
give nor receive bonuses.  Raw bonuses are computed for everyone; the
post-processing pipeline clips them, zeroes them outside the deceptive
team, normalizes by the running standard deviation of the discounted
intrinsic return, and ramps them in linearly over the first
``warmup_horizon`` agent interactions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import Team
from .engine import GameState
from .observations import visible_players

CLIP_LO = -20.0
CLIP_HI = 20.0
WARMUP_HORIZON = 10_000_000
NONVISIBLE_SAMPLE_RATE = 0.1
RETURN_DISCOUNT = 0.99


def bayes_factor(likelihoods, true_role: Team, believed) -> float:
    """The multiplicative belief update an observer would apply. Positive."""
    like = np.asarray(likelihoods, dtype=np.float64)
    denom = float(like @ np.asarray(believed, dtype=np.float64))
    if denom <= 0.0:
        raise ZeroDivisionError(
            "zero belief-weighted likelihood: some policy lacks an epsilon floor"
        )
    return float(like[true_role]) / denom


def deception_bonus(likelihoods, true_role: Team, believed) -> float:
    """-log of the Bayes factor: the one-observer raw bonus for one action."""
    return -math.log(bayes_factor(likelihoods, true_role, believed))


@dataclass
class BonusConfig:
    """Knobs of the bonus pipeline; defaults follow the standard red setup."""

    alpha: np.ndarray  # per-player bonus magnitude
    clip_lo: float = CLIP_LO
    clip_hi: float = CLIP_HI
    warmup_horizon: int = WARMUP_HORIZON
    nonvisible_sample_rate: float = NONVISIBLE_SAMPLE_RATE
    deceptive_teams: frozenset[Team] = frozenset({Team.RED})

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64)
        if np.any(self.alpha < 0):
            raise ValueError("alpha must be nonnegative")
        if not (self.clip_lo < self.clip_hi):
            raise ValueError("clip_lo must be below clip_hi")
        if not (0.0 <= self.nonvisible_sample_rate <= 1.0):
            raise ValueError("nonvisible_sample_rate must be in [0, 1]")

    @classmethod
    def for_teams(cls, teams, alpha_red: float = 0.5, **kwargs) -> "BonusConfig":
        """Alpha ``alpha_red`` for red players, zero for everyone else."""
        alpha = np.array([alpha_red if t == Team.RED else 0.0 for t in teams])
        return cls(alpha=alpha, **kwargs)


class ExactInverseModel:
    """Perfect-information second-order model: the actor's estimate of each
    observer's belief is the observer's actual tracker row, and the action
    likelihoods are evaluated on the actor's true observation stream."""

    def __init__(self, tracker, step_likelihoods: np.ndarray):
        self._tracker = tracker
        self._likes = step_likelihoods

    def estimate(self, actor: int, observer: int) -> tuple[np.ndarray, np.ndarray]:
        return self._likes[actor], self._tracker.beliefs[observer, actor]


class PredictorInverseModel:
    """Externally supplied estimates (hosts learned direct-prediction heads).

    ``fn(actor, observer) -> (likelihood_per_role, believed_roles)`` for the
    current step's action.
    """

    def __init__(self, fn):
        self._fn = fn

    def estimate(self, actor: int, observer: int) -> tuple[np.ndarray, np.ndarray]:
        return self._fn(actor, observer)


def step_raw_bonus(state: GameState, model, cfg: BonusConfig,
                   rng: np.random.Generator) -> np.ndarray:
    """Per-player raw bonus for one step, before any post-processing.

    Bernoulli draws for non-observing players come from the episode stream
    in (actor, observer) index order, so results are reproducible.
    """
    n = len(state.players)
    raw = np.zeros(n, dtype=np.float64)
    teams = [p.team for p in state.players]
    alive = [p.alive for p in state.players]
    watchers = {j: visible_players(state, j) for j in range(n) if alive[j]}
    for i in range(n):
        if not alive[i]:
            continue
        total = 0.0
        for j in range(n):
            if j == i or not alive[j]:
                continue
            if i in watchers[j]:
                included = True
            else:
                included = rng.random() < cfg.nonvisible_sample_rate
            if not included:
                continue
            likes, believed = model.estimate(i, j)
            total += deception_bonus(likes, teams[i], believed)
        raw[i] = total
    return raw


def warmup_scale(interactions: int, horizon: int = WARMUP_HORIZON) -> float:
    """Linear ramp from 0 to 1 over the first ``horizon`` interactions."""
    if horizon <= 0:
        return 1.0
    return min(1.0, interactions / horizon)


class ReturnNormalizer:
    """Streaming scale estimate for the discounted intrinsic return.

    Keeps one running discounted return per player and Welford moments over
    every return sample pushed.  ``sigma`` is the population standard
    deviation, or 1.0 until there is meaningful variance (bootstrap).
    """

    def __init__(self, gamma: float = RETURN_DISCOUNT):
        self.gamma = gamma
        self.returns: dict[int, float] = {}
        self.count = 0
        self.mean = 0.0
        self.m2 = 0.0

    def update(self, bonuses, dones, players=None) -> None:
        """Push one step of bonuses; ``players`` selects which indices count."""
        idx = range(len(bonuses)) if players is None else players
        for p in idx:
            r = self.gamma * self.returns.get(p, 0.0) + float(bonuses[p])
            self._push(r)
            self.returns[p] = 0.0 if dones[p] else r

    def _push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    @property
    def variance(self) -> float:
        return self.m2 / self.count if self.count else 0.0

    @property
    def sigma(self) -> float:
        var = self.variance
        return math.sqrt(var) if var > 1e-12 else 1.0

    def merge(self, other: "ReturnNormalizer") -> "ReturnNormalizer":
        """Combine moments from a disjoint batch (parallel evaluation)."""
        if other.count:
            total = self.count + other.count
            delta = other.mean - self.mean
            self.m2 += other.m2 + delta * delta * self.count * other.count / total
            self.mean += delta * other.count / total
            self.count = total
            self.returns.update(other.returns)
        return self


def postprocess(raw: np.ndarray, teams, interactions: int,
                normalizer: ReturnNormalizer, cfg: BonusConfig) -> np.ndarray:
    """Raw bonuses -> r_int: clip, zero outside the deceptive team,
    divide by the return scale, apply the warm-up ramp."""
    out = np.clip(raw, cfg.clip_lo, cfg.clip_hi)
    mask = np.array([t in cfg.deceptive_teams for t in teams])
    out = np.where(mask, out, 0.0)
    out = out / normalizer.sigma
    return out * warmup_scale(interactions, cfg.warmup_horizon)


def combine(r_ext, r_int, alpha):
    """Total reward: extrinsic plus alpha-scaled intrinsic, exactly."""
    return np.asarray(r_ext, dtype=np.float64) + np.asarray(alpha) * np.asarray(r_int)


@dataclass
class RewardBundle:
    """Per-player rewards for one step."""

    r_ext: np.ndarray
    raw_bonus: np.ndarray
    r_int: np.ndarray
    r_total: np.ndarray

    @classmethod
    def build(cls, r_ext, raw_bonus, r_int, alpha) -> "RewardBundle":
        r_ext = np.asarray(r_ext, dtype=np.float64)
        raw_bonus = np.asarray(raw_bonus, dtype=np.float64)
        r_int = np.asarray(r_int, dtype=np.float64)
        return cls(r_ext=r_ext, raw_bonus=raw_bonus, r_int=r_int,
                   r_total=combine(r_ext, r_int, alpha))
