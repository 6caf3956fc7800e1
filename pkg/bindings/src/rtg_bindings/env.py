"""Vectorized environment handles over the game core.

A handle owns ``num_envs`` independent episodes.  Observations cross the
boundary as one contiguous uint8 buffer of shape (player, row, col, channel)
per episode; action values are the core's action codes (see
``rtg.legal_actions``), and rewards are extrinsic unless a bonus config is
attached, in which case the combined reward comes back and the per-step
intrinsic quantities ride along in ``info``.

Handles are not safe for concurrent calls; callers serialize access per
handle.  There is no hidden state: recreating a handle with the same
arguments reproduces trajectories exactly.
"""

from __future__ import annotations

import numpy as np

from rtg import (
    Action,
    BeliefTracker,
    GameConfig,
    ReturnNormalizer,
    Scenario,
    builtin_scenario,
    init_game,
    legal_actions,
    load_config,
    render_local,
    step,
)
from rtg.deception import ExactInverseModel, combine, postprocess, step_raw_bonus
from rtg.policies import RoleConditionedPolicySet


def list_scenarios() -> list[str]:
    return [s.value for s in Scenario]


def _parse_config(text: str) -> GameConfig:
    stripped = text.strip()
    if stripped.startswith("{"):
        return load_config(stripped)
    try:
        return builtin_scenario(stripped)
    except Exception:
        valid = ", ".join(list_scenarios())
        raise ValueError(
            f"unknown scenario {stripped!r}; valid names: {valid} "
            "(or pass a JSON config document)"
        ) from None


class _Episode:
    def __init__(self, config: GameConfig, seed: int, bonus_config, policy_set):
        self.config = config
        self.seed = seed
        self.state = init_game(config, seed)
        self.teams = [p.team for p in self.state.players]
        self.bonus = bonus_config(self.teams) if callable(bonus_config) else bonus_config
        self.tracker = None
        self.normalizer = None
        self.interactions = 0
        if self.bonus is not None:
            pset = policy_set or RoleConditionedPolicySet.scripted(config)
            self.tracker = BeliefTracker(self.state, pset)
            self.normalizer = ReturnNormalizer()
        self.legal = set(legal_actions(config))

    @property
    def done(self) -> bool:
        return self.state.terminal is not None

    def observations(self) -> np.ndarray:
        return np.stack([render_local(self.state, i)
                         for i in range(len(self.state.players))])

    def step(self, actions):
        if self.done:
            raise RuntimeError(
                f"episode finished ({self.state.terminal.value}); reset this slot"
            )
        n = len(self.state.players)
        if len(actions) != n:
            raise ValueError(f"expected {n} actions, got {len(actions)}")
        joint = []
        observations = None
        for i, raw in enumerate(actions):
            try:
                action = Action(int(raw))
            except ValueError:
                raise ValueError(f"action value {raw!r} out of range") from None
            if action not in self.legal:
                raise ValueError(f"action {action.name} not available under this config")
            # dead players act vacuously; learners need not special-case them
            joint.append(action if self.state.players[i].alive else Action.NOOP)

        raw_bonus = r_int = None
        if self.tracker is not None:
            observations = [render_local(self.state, i) if p.alive else None
                            for i, p in enumerate(self.state.players)]
            likes = self.tracker.step_likelihoods(self.state, joint, observations)
            raw_bonus = step_raw_bonus(
                self.state, ExactInverseModel(self.tracker, likes),
                self.bonus, self.state.rng)
            self.tracker.apply_step(self.state, likes)

        self.state, result = step(self.state, joint)
        self.interactions += n
        rewards = np.asarray(result.rewards, dtype=np.float64)
        info = {"events": result.events, "r_ext": rewards}
        if raw_bonus is not None:
            clipped = np.clip(raw_bonus, self.bonus.clip_lo, self.bonus.clip_hi)
            self.normalizer.update(
                clipped, np.full(n, result.done),
                players=[i for i, t in enumerate(self.teams)
                         if t in self.bonus.deceptive_teams])
            r_int = postprocess(raw_bonus, self.teams, self.interactions,
                                self.normalizer, self.bonus)
            info["raw_bonuses"] = raw_bonus
            info["r_int"] = r_int
            rewards = combine(rewards, r_int, self.bonus.alpha)
        return self.observations(), rewards, result.done, info


class EnvHandle:
    """A core-owned vector of independent episodes."""

    def __init__(self, config: GameConfig, num_envs: int, seed: int,
                 bonus_config=None, policy_set=None):
        if num_envs < 1:
            raise ValueError("num_envs must be at least 1")
        config.validate()
        self.config = config
        self.n_players = config.n_players
        self._bonus_config = bonus_config
        self._policy_set = policy_set
        self._episodes: list[_Episode] | None = [
            _Episode(config, seed + k, bonus_config, policy_set)
            for k in range(num_envs)
        ]
        self._next_seed = seed + num_envs

    @property
    def num_envs(self) -> int:
        self._check_open()
        return len(self._episodes)

    def _check_open(self) -> None:
        if self._episodes is None:
            raise RuntimeError("handle is closed")

    def _episode(self, index: int) -> _Episode:
        self._check_open()
        if not 0 <= index < len(self._episodes):
            raise IndexError(
                f"env index {index} out of range (have {len(self._episodes)})")
        return self._episodes[index]

    def observations(self, index: int) -> np.ndarray:
        """Current observations of one episode: (player, row, col, channel)."""
        return self._episode(index).observations()

    def reset(self, index: int) -> np.ndarray:
        """Replace one episode with a fresh one on the next seed in line."""
        self._episode(index)
        episode = _Episode(self.config, self._next_seed,
                           self._bonus_config, self._policy_set)
        self._next_seed += 1
        self._episodes[index] = episode
        return episode.observations()

    def step(self, index: int, actions):
        return self._episode(index).step(actions)

    def seed_of(self, index: int) -> int:
        return self._episode(index).seed

    def close(self) -> None:
        self._episodes = None


def create(config_text_or_scenario: str | GameConfig, num_envs: int, seed: int,
           bonus_config=None, policy_set=None) -> EnvHandle:
    """Open a handle on ``num_envs`` episodes seeded seed..seed+num_envs-1.

    The first argument is a scenario name, a JSON config document, or an
    already-built GameConfig.  Attach a ``bonus_config`` (a BonusConfig or a
    callable from the per-player team list to one) to receive combined
    rewards; intrinsic terms are then reported in ``info``.
    """
    if isinstance(config_text_or_scenario, GameConfig):
        config = config_text_or_scenario
    else:
        config = _parse_config(config_text_or_scenario)
    return EnvHandle(config, num_envs, seed, bonus_config, policy_set)


def reset(handle: EnvHandle, index: int) -> np.ndarray:
    return handle.reset(index)


def step_env(handle: EnvHandle, index: int, actions):
    return handle.step(index, actions)


def close(handle: EnvHandle) -> None:
    handle.close()
