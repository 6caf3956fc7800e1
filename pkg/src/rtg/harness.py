"""Episode and tournament orchestration, metrics, and benchmark.

``run_episode`` wires the engine, renderer, policies, belief tracker and
bonus pipeline into one deterministic loop.  Per step it renders all living
players' observations, queries and samples their policies, computes the raw
deception bonuses against pre-update beliefs, applies the belief updates,
then steps the engine.  Randomness order within a step: action sampling in
ascending player index, then the non-observer Bernoulli draws.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
import time
from dataclasses import dataclass

import numpy as np

from . import __version__ as ENGINE_VERSION
from .beliefs import BeliefTracker
from .config import GameConfig, Team, canonical_serialize
from .deception import (
    BonusConfig,
    ExactInverseModel,
    ReturnNormalizer,
    RewardBundle,
    postprocess,
    step_raw_bonus,
)
from .engine import Action, Outcome, init_game, step
from .errors import RTGError
from .observations import render_global, render_local
from .policies import RoleConditionedPolicySet, make_scripted, sample
from .replay import FORMAT_VERSION, Replay, resimulate

TeamPolicies = dict  # Team -> zero-arg factory of PolicyInstance


@dataclass
class EpisodeRecord:
    replay: Replay
    reward_bundles: list[RewardBundle]
    belief_metric: list[float] | None
    team_raw_bonus: list[tuple[float, float, float]] | None
    belief_rows: list[tuple] | None
    final_metric_by_team: dict | None

    @property
    def length(self) -> int:
        return self.replay.n_steps

    @property
    def team_scores(self) -> tuple[float, float, float]:
        return self.replay.team_scores

    @property
    def outcome(self) -> Outcome:
        return self.replay.outcome

    def to_json_bytes(self) -> bytes:
        """Canonical serialization; equal records are byte-identical."""
        doc = {
            "engine_version": self.replay.engine_version,
            "seed": self.replay.seed,
            "config": json.loads(canonical_serialize(self.replay.config)),
            "actions": [list(row) for row in self.replay.actions],
            "outcome": self.replay.outcome.value,
            "team_scores": [float(s) for s in self.replay.team_scores],
            "rewards": [
                {
                    "r_ext": [float(v) for v in b.r_ext],
                    "raw_bonus": [float(v) for v in b.raw_bonus],
                    "r_int": [float(v) for v in b.r_int],
                    "r_total": [float(v) for v in b.r_total],
                }
                for b in self.reward_bundles
            ],
            "belief_metric": self.belief_metric,
            "team_raw_bonus": self.team_raw_bonus,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def run_episode(config: GameConfig, team_policies: TeamPolicies, seed: int, *,
                policy_set: RoleConditionedPolicySet | None = None,
                bonus_config=None, normalizer: ReturnNormalizer | None = None,
                interactions_start: int = 0, record_beliefs: bool = False) -> EpisodeRecord:
    """Play one full episode and record everything needed downstream.

    ``team_policies`` maps each populated team to a policy factory; players
    get fresh instances once roles are assigned.  ``bonus_config`` is a
    BonusConfig, or a callable receiving the per-player team list (alpha is
    per player, and teams are only known after initialization).
    """
    state = init_game(config, seed)
    teams = [p.team for p in state.players]
    n = len(teams)
    for team in {p.team for p in state.players}:
        if team not in team_policies:
            raise RTGError(f"no policy supplied for team {Team(team).name}")
    instances = [team_policies[p.team]() for p in state.players]

    bcfg = bonus_config(teams) if callable(bonus_config) else bonus_config
    want_tracker = record_beliefs or bcfg is not None
    tracker = None
    if want_tracker:
        pset = policy_set or RoleConditionedPolicySet(team_policies)
        tracker = BeliefTracker(state, pset)
    if bcfg is not None and normalizer is None:
        normalizer = ReturnNormalizer()

    interactions = interactions_start
    actions_log: list[tuple[int, ...]] = []
    bundles: list[RewardBundle] = []
    metrics: list[float] | None = [] if record_beliefs else None
    team_bonus: list[tuple[float, float, float]] | None = [] if bcfg is not None else None
    belief_rows: list[tuple] | None = [] if record_beliefs else None
    zeros = np.zeros(n)
    alpha = bcfg.alpha if bcfg is not None else zeros

    while state.terminal is None:
        observations = [render_local(state, i) if p.alive else None
                        for i, p in enumerate(state.players)]
        alive_pre = [p.alive for p in state.players]
        actions = []
        for i, p in enumerate(state.players):
            if not p.alive:
                actions.append(Action.NOOP)
            else:
                dist = instances[i].act(observations[i])
                actions.append(sample(dist, state.rng))
        raw = None
        if tracker is not None:
            likes = tracker.step_likelihoods(state, actions, observations)
            if bcfg is not None:
                raw = step_raw_bonus(state, ExactInverseModel(tracker, likes),
                                     bcfg, state.rng)
            tracker.apply_step(state, likes)

        state, result = step(state, actions)
        actions_log.append(tuple(int(a) for a in actions))
        interactions += n

        if bcfg is not None:
            clipped = np.clip(raw, bcfg.clip_lo, bcfg.clip_hi)
            dones = np.full(n, result.done)
            normalizer.update(
                clipped, dones,
                players=[i for i, t in enumerate(teams) if t in bcfg.deceptive_teams],
            )
            r_int = postprocess(raw, teams, interactions, normalizer, bcfg)
            bundles.append(RewardBundle.build(result.rewards, raw, r_int, alpha))
            team_bonus.append(tuple(
                float(np.mean([raw[i] for i in range(n) if teams[i] == t and alive_pre[i]]))
                if any(teams[i] == t and alive_pre[i] for i in range(n)) else 0.0
                for t in Team
            ))
        else:
            bundles.append(RewardBundle.build(result.rewards, zeros, zeros, zeros))

        if record_beliefs:
            metrics.append(tracker.true_role_metric(state))
            t_now = state.t
            for o in range(n):
                for s in range(n):
                    b = tracker.beliefs[o, s]
                    belief_rows.append(
                        (t_now, o, s, float(b[0]), float(b[1]), float(b[2]))
                    )

    replay = Replay(
        format_version=FORMAT_VERSION,
        engine_version=ENGINE_VERSION,
        config=config,
        seed=seed,
        actions=tuple(actions_log),
        outcome=state.terminal,
        team_scores=tuple(state.team_cumulative_reward),
    )
    final_metric = tracker.team_true_role_metric(state) if record_beliefs else None
    return EpisodeRecord(
        replay=replay,
        reward_bundles=bundles,
        belief_metric=metrics,
        team_raw_bonus=team_bonus,
        belief_rows=belief_rows,
        final_metric_by_team=final_metric,
    )


@dataclass
class EvalReport:
    games: int
    base_seed: int
    team_mean: tuple[float, float, float]
    team_ci: tuple[float | None, float | None, float | None]
    metric_by_observer_team: dict | None
    raw_bonus_by_team: dict | None
    outcomes: dict
    per_game: list[tuple]  # (seed, outcome, scores)

    def summary_lines(self) -> list[str]:
        lines = [f"games: {self.games} (seeds {self.base_seed}..{self.base_seed + self.games - 1})"]
        for t in Team:
            ci = self.team_ci[t]
            ci_txt = f" +/- {ci:.3f}" if ci is not None else ""
            lines.append(f"{t.name.lower():>6} score: {self.team_mean[t]:8.3f}{ci_txt}")
        if self.metric_by_observer_team:
            for t, v in self.metric_by_observer_team.items():
                if v is not None and not math.isnan(v):
                    lines.append(f"{Team(t).name.lower():>6} role prediction: {v:.3f}")
        if self.raw_bonus_by_team:
            for t, v in self.raw_bonus_by_team.items():
                lines.append(f"{Team(t).name.lower():>6} mean raw bonus: {v:+.4f}")
        for outcome, count in sorted(self.outcomes.items()):
            lines.append(f"outcome {outcome}: {count}")
        return lines


def _ci_half_width(values) -> float | None:
    if len(values) < 2:
        return None
    return 1.96 * statistics.stdev(values) / math.sqrt(len(values))


def run_eval(config: GameConfig, pools: dict, n_games: int, base_seed: int, *,
             bonus_config=None, record_beliefs: bool = True) -> EvalReport:
    """Round-robin tournament over policy pools.

    ``pools[team]`` is a nonempty list of factories; game k (seed
    ``base_seed + k``) uses entry ``k % len(pool)`` from each pool.  The
    total number of games is ``n_games * max(pool sizes)``, so sixteen games
    against each of eight opponents yields 128.
    """
    if n_games < 1:
        raise ValueError("n_games must be at least 1")
    for team, pool in pools.items():
        if not pool:
            raise ValueError(f"empty policy pool for team {Team(team).name}")
    total = n_games * max(len(pool) for pool in pools.values())
    scores = []
    metrics: dict[Team, list[float]] = {t: [] for t in Team}
    bonuses: dict[Team, list[float]] = {t: [] for t in Team}
    outcomes: dict[str, int] = {}
    per_game = []
    for k in range(total):
        seed = base_seed + k
        team_policies = {team: pool[k % len(pool)] for team, pool in pools.items()}
        record = run_episode(
            config, team_policies, seed,
            bonus_config=bonus_config, record_beliefs=record_beliefs,
        )
        scores.append(record.team_scores)
        outcomes[record.outcome.value] = outcomes.get(record.outcome.value, 0) + 1
        per_game.append((seed, record.outcome.value, record.team_scores))
        if record.final_metric_by_team:
            for t, v in record.final_metric_by_team.items():
                if not math.isnan(v):
                    metrics[t].append(v)
        if record.team_raw_bonus:
            for t in Team:
                vals = [row[t] for row in record.team_raw_bonus]
                if vals:
                    bonuses[t].append(float(np.mean(vals)))
    by_team = list(zip(*scores))
    return EvalReport(
        games=total,
        base_seed=base_seed,
        team_mean=tuple(float(np.mean(v)) for v in by_team),
        team_ci=tuple(_ci_half_width(v) for v in by_team),
        metric_by_observer_team=(
            {t: (float(np.mean(v)) if v else None) for t, v in metrics.items()}
            if record_beliefs else None
        ),
        raw_bonus_by_team=(
            {t: (float(np.mean(v)) if v else None) for t, v in bonuses.items()}
            if bonus_config is not None else None
        ),
        outcomes=outcomes,
        per_game=per_game,
    )


# ---------------------------------------------------------------------------
# replay rendering and delimited output
# ---------------------------------------------------------------------------

def write_ppm(frame: np.ndarray, path) -> None:
    """Binary P6 image; frame is (rows, cols, 3) uint8."""
    h, w, _ = frame.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(frame.tobytes())


def render_replay(replay: Replay, out_dir) -> list:
    """One global PPM frame per state (episode length + 1 files)."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = []

    def dump(state):
        path = os.path.join(out_dir, f"frame_{len(paths):05d}.ppm")
        write_ppm(render_global(state), path)
        paths.append(path)

    resimulate(replay, on_state=dump)
    return paths


def write_bonus_csv(record: EpisodeRecord, path) -> None:
    """Per-step bonus log: step, player, team, raw_bonus, r_int, r_total."""
    teams = _teams_for_record(record)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "player", "team", "raw_bonus", "r_int", "r_total"])
        for t, bundle in enumerate(record.reward_bundles):
            for i in range(len(bundle.r_ext)):
                writer.writerow([
                    t, i, Team(teams[i]).name.lower(),
                    repr(float(bundle.raw_bonus[i])),
                    repr(float(bundle.r_int[i])),
                    repr(float(bundle.r_total[i])),
                ])


def write_belief_csv(record: EpisodeRecord, path) -> None:
    """Belief trajectories: step, observer, subject, p_red, p_green, p_blue."""
    if record.belief_rows is None:
        raise RTGError("episode was run without record_beliefs")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "observer", "subject", "p_red", "p_green", "p_blue"])
        for row in record.belief_rows:
            writer.writerow([row[0], row[1], row[2],
                             repr(row[3]), repr(row[4]), repr(row[5])])


def write_eval_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["team", "mean_score", "ci_half_width", "role_prediction",
                         "mean_raw_bonus", "games"])
        for t in Team:
            metric = (report.metric_by_observer_team or {}).get(t)
            bonus = (report.raw_bonus_by_team or {}).get(t)
            writer.writerow([
                t.name.lower(),
                repr(report.team_mean[t]),
                repr(report.team_ci[t]) if report.team_ci[t] is not None else "",
                repr(metric) if metric is not None else "",
                repr(bonus) if bonus is not None else "",
                report.games,
            ])


def write_games_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "outcome", "red_score", "green_score", "blue_score"])
        for seed, outcome, scores in report.per_game:
            writer.writerow([seed, outcome] + [repr(float(s)) for s in scores])


def _teams_for_record(record: EpisodeRecord):
    state = init_game(record.replay.config, record.replay.seed)
    return [p.team for p in state.players]


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

@dataclass
class BenchReport:
    steps: int
    seconds: float
    workers: int

    @property
    def steps_per_second(self) -> float:
        return self.steps / self.seconds if self.seconds > 0 else float("inf")


def _bench_chunk(config: GameConfig, n_steps: int, seed0: int) -> tuple[int, float]:
    policies = {
        Team(t): make_scripted(config, Team(t), "wanderer", 1.0)
        for t in range(3) if config.team_counts[t] > 0
    }
    instances = None
    steps = 0
    seed = seed0
    start = time.perf_counter()
    state = None
    while steps < n_steps:
        if state is None or state.terminal is not None:
            state = init_game(config, seed)
            seed += 1
            instances = [policies[p.team]() for p in state.players]
        actions = []
        for i, p in enumerate(state.players):
            if not p.alive:
                actions.append(Action.NOOP)
            else:
                actions.append(sample(instances[i].act(render_local(state, i)), state.rng))
        state, _ = step(state, actions)
        steps += 1
    return steps, time.perf_counter() - start


def bench(config: GameConfig, n_steps: int, workers: int = 1) -> BenchReport:
    """Wall-clock engine+render throughput with uniform-random policies."""
    if n_steps < 10_000:
        raise ValueError("bench needs at least 10000 steps for a stable figure")
    # Warm the JIT-compiled render kernel outside the timed region.
    s = init_game(config, 0)
    render_local(s, 0)
    if workers <= 1:
        steps, seconds = _bench_chunk(config, n_steps, seed0=1)
        return BenchReport(steps=steps, seconds=seconds, workers=1)
    from concurrent.futures import ProcessPoolExecutor

    chunk = (n_steps + workers - 1) // workers
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_bench_chunk, config, chunk, 1 + 10_000_000 * w)
                   for w in range(workers)]
        results = [f.result() for f in futures]
    return BenchReport(
        steps=sum(r[0] for r in results),
        seconds=max(r[1] for r in results),
        workers=workers,
    )
