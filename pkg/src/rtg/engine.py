"""Deterministic game core: state, initialization, and the step function.

All per-episode randomness flows through a single ``numpy`` PCG64 generator
stored on the state.  Draw order is fixed and documented in ``init_game``;
the step function itself consumes no randomness, so a recorded action
sequence re-simulates bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np

from .config import GameConfig, Team
from .errors import InvalidActionError, PlacementError, TerminalStateError
from .palette import ID_COLORS


class Action(IntEnum):
    NOOP = 0
    MOVE_N = 1
    MOVE_S = 2
    MOVE_E = 3
    MOVE_W = 4
    SHOOT_N = 5
    SHOOT_S = 6
    SHOOT_E = 7
    SHOOT_W = 8
    AUTO_SHOOT = 9


# Screen convention: x grows east, y grows south, so north is y - 1.
DIRECTIONS = {
    Action.MOVE_N: (0, -1),
    Action.MOVE_S: (0, 1),
    Action.MOVE_E: (1, 0),
    Action.MOVE_W: (-1, 0),
    Action.SHOOT_N: (0, -1),
    Action.SHOOT_S: (0, 1),
    Action.SHOOT_E: (1, 0),
    Action.SHOOT_W: (-1, 0),
}

MOVE_ACTIONS = (Action.MOVE_N, Action.MOVE_S, Action.MOVE_E, Action.MOVE_W)
SHOOT_ACTIONS = (Action.SHOOT_N, Action.SHOOT_S, Action.SHOOT_E, Action.SHOOT_W)


def legal_actions(config: GameConfig) -> tuple[Action, ...]:
    """The ordered action set; distributions and samplers index into this."""
    if config.auto_shooting:
        return (Action.NOOP, *MOVE_ACTIONS, Action.AUTO_SHOOT)
    return (Action.NOOP, *MOVE_ACTIONS, *SHOOT_ACTIONS)


class Outcome(Enum):
    GENERAL_KILLED = "general_killed"
    GENERAL_RESCUED = "general_rescued"
    TIMEOUT = "timeout"
    LAST_TEAM_STANDING = "last_team_standing"


@dataclass(slots=True)
class Player:
    index: int
    id_color: int
    team: Team
    x: int
    y: int
    health: int
    shoot_cooldown: int = 0
    alive: bool = True
    has_seen_general: bool = False

    @property
    def body_position(self) -> tuple[int, int]:
        """Where the body lies; positions freeze at the moment of death."""
        return (self.x, self.y)


@dataclass(slots=True)
class GameState:
    config: GameConfig
    t: int
    rng: np.random.Generator
    players: list[Player]
    trees: set[tuple[int, int]]
    tree_grid: np.ndarray  # uint8 (map_width, map_height); kept in sync with trees
    general_present: bool
    general_x: int
    general_y: int
    general_health: int
    min_edge_distance: int
    team_cumulative_reward: list[float]
    blue_adjacency_awarded: bool = False
    terminal: Outcome | None = None
    render_epoch: int = 0  # bumped whenever anything visible changes
    render_cache: object = None  # owned by rtg.observations; keyed on render_epoch

    @property
    def general_alive(self) -> bool:
        return self.general_present and self.general_health > 0

    def rng_state(self) -> dict:
        return self.rng.bit_generator.state

    def snapshot(self) -> tuple:
        """Hashable summary of everything gameplay-relevant (for tests)."""
        return (
            self.t,
            tuple((p.x, p.y, p.health, p.shoot_cooldown, p.alive, p.has_seen_general)
                  for p in self.players),
            tuple(sorted(self.trees)),
            (self.general_present, self.general_x, self.general_y, self.general_health),
            self.min_edge_distance,
            tuple(self.team_cumulative_reward),
            self.blue_adjacency_awarded,
            None if self.terminal is None else self.terminal.value,
        )


@dataclass(slots=True)
class StepResult:
    rewards: tuple[float, ...]          # per player, team reward broadcast
    team_rewards: tuple[float, float, float]
    events: list[tuple]
    done: bool
    outcome: Outcome | None = None


def chebyshev(ax: int, ay: int, bx: int, by: int) -> int:
    return max(abs(ax - bx), abs(ay - by))


def manhattan(ax: int, ay: int, bx: int, by: int) -> int:
    return abs(ax - bx) + abs(ay - by)


def edge_distance(x: int, y: int, width: int, height: int) -> int:
    """Manhattan distance from a tile to the nearest map edge."""
    return min(x, y, width - 1 - x, height - 1 - y)


def init_game(config: GameConfig, seed: int) -> GameState:
    """Build the starting state; a pure function of (config, seed).

    Draw order from the per-episode PCG64 stream:
      1. general tile (skipped under battle_royale),
      2. tree tiles,
      3. team multiset shuffle,
      4. player tiles (anchor retries under "together"),
      5. one uniform for the initial-kill coin, then team and victim picks.
    """
    config.validate()
    rng = np.random.default_rng(seed)
    w, h = config.map_width, config.map_height
    n = config.n_players
    if n > len(ID_COLORS):
        raise PlacementError(f"at most {len(ID_COLORS)} players supported, got {n}")

    general_present = not config.battle_royale
    gx = gy = -1
    if general_present:
        # Interior tiles only: at least two tiles from every edge.
        iw, ih = w - 4, h - 4
        idx = int(rng.integers(iw * ih))
        gx = 2 + idx % iw
        gy = 2 + idx // iw

    trees: set[tuple[int, int]] = set()
    candidates = [(x, y) for y in range(h) for x in range(w)
                  if not (general_present and (x, y) == (gx, gy))]
    if config.n_trees > len(candidates):
        raise PlacementError(
            f"cannot place {config.n_trees} trees on a {w}x{h} map"
        )
    if config.n_trees:
        picks = rng.choice(len(candidates), size=config.n_trees, replace=False)
        trees = {candidates[int(i)] for i in picks}

    def tile_ok(x: int, y: int) -> bool:
        if (x, y) in trees:
            return False
        if general_present and chebyshev(x, y, gx, gy) <= 2:
            return False
        return True

    roles = np.repeat(np.arange(3), config.team_counts)
    rng.shuffle(roles)

    if config.starting_locations == "together":
        spots = _place_together(config, rng, tile_ok)
    else:
        open_tiles = [(x, y) for y in range(h) for x in range(w) if tile_ok(x, y)]
        if len(open_tiles) < n:
            raise PlacementError(f"only {len(open_tiles)} open tiles for {n} players")
        picks = rng.choice(len(open_tiles), size=n, replace=False)
        spots = [open_tiles[int(i)] for i in picks]

    players = [
        Player(index=i, id_color=i, team=Team(int(roles[i])), x=spots[i][0], y=spots[i][1],
               health=config.player_initial_health)
        for i in range(n)
    ]

    if rng.random() < config.initial_random_kills:
        nonempty = [k for k in range(3) if config.team_counts[k] > 0]
        team = nonempty[int(rng.integers(len(nonempty)))]
        members = [p for p in players if p.team == team]
        victim = members[int(rng.integers(len(members)))]
        victim.health = 0
        victim.alive = False

    tree_grid = np.zeros((w, h), dtype=np.uint8)
    for (tx, ty) in trees:
        tree_grid[tx, ty] = 1

    state = GameState(
        config=config,
        t=0,
        rng=rng,
        players=players,
        trees=trees,
        tree_grid=tree_grid,
        general_present=general_present,
        general_x=gx,
        general_y=gy,
        general_health=config.general_initial_health if general_present else 0,
        min_edge_distance=edge_distance(gx, gy, w, h) if general_present else 0,
        team_cumulative_reward=[0.0, 0.0, 0.0],
    )
    _update_general_latches(state)
    return state


def _place_together(config: GameConfig, rng, tile_ok) -> list[tuple[int, int]]:
    """Cluster all players within Chebyshev radius 3 of a random anchor."""
    w, h = config.map_width, config.map_height
    n = config.n_players
    for _ in range(1000):
        idx = int(rng.integers(w * h))
        ax, ay = idx % w, idx // w
        cluster = [(x, y)
                   for y in range(max(0, ay - 3), min(h, ay + 4))
                   for x in range(max(0, ax - 3), min(w, ax + 4))
                   if tile_ok(x, y)]
        if len(cluster) >= n:
            picks = rng.choice(len(cluster), size=n, replace=False)
            return [cluster[int(i)] for i in picks]
    raise PlacementError(
        f"could not find a starting cluster for {n} players on a {w}x{h} map"
    )


def _update_general_latches(state: GameState) -> None:
    if not state.general_alive:
        return
    dist = state.config.team_general_view_distance
    for p in state.players:
        if p.alive and not p.has_seen_general:
            if chebyshev(p.x, p.y, state.general_x, state.general_y) <= dist[p.team]:
                p.has_seen_general = True


def resolve_drag(state: GameState, mover: Player, direction: tuple[int, int]) -> bool:
    """Whether this move drags the general one tile along with the mover.

    True iff the mover starts at Manhattan distance 1 from the general, at
    least ``players_to_move_general`` living players (mover included) are
    within Manhattan ``help_distance`` of the general, and the general's
    destination is in bounds.  Any team may drag.
    """
    if not state.general_alive:
        return False
    cfg = state.config
    if manhattan(mover.x, mover.y, state.general_x, state.general_y) != 1:
        return False
    helpers = sum(
        1 for p in state.players
        if p.alive and manhattan(p.x, p.y, state.general_x, state.general_y) <= cfg.help_distance
    )
    if helpers < cfg.players_to_move_general:
        return False
    nx, ny = state.general_x + direction[0], state.general_y + direction[1]
    return 0 <= nx < cfg.map_width and 0 <= ny < cfg.map_height


def resolve_shot(state: GameState, shooter: Player, direction: tuple[int, int]):
    """First living entity on the cardinal ray within the shooter's range.

    Returns ("player", index), ("general",) or None.  Trees and bodies do
    not block.  Two players sharing the hit tile: the lowest index absorbs.
    """
    cfg = state.config
    rng_tiles = cfg.team_shoot_range[shooter.team]
    x, y = shooter.x, shooter.y
    for _ in range(rng_tiles):
        x += direction[0]
        y += direction[1]
        if not (0 <= x < cfg.map_width and 0 <= y < cfg.map_height):
            return None
        if state.general_alive and (x, y) == (state.general_x, state.general_y):
            return ("general",)
        for p in state.players:
            if p.alive and p.x == x and p.y == y:
                return ("player", p.index)
    return None


def _auto_target(state: GameState, shooter: Player) -> tuple[int, int] | None:
    """Nearest living visible player by Euclidean distance within shoot range.

    Ties break toward the lowest player index.  Returns (index, _) or None.
    """
    cfg = state.config
    view = cfg.team_view_distance[shooter.team]
    max_d2 = cfg.team_shoot_range[shooter.team] ** 2
    best: tuple[int, int] | None = None
    for p in state.players:
        if p.index == shooter.index or not p.alive:
            continue
        if chebyshev(p.x, p.y, shooter.x, shooter.y) > view:
            continue
        d2 = (p.x - shooter.x) ** 2 + (p.y - shooter.y) ** 2
        if d2 <= max_d2 and (best is None or d2 < best[0]):
            best = (d2, p.index)
    return None if best is None else (best[1], best[0])


def step(state: GameState, joint_action) -> tuple[GameState, StepResult]:
    """Advance one tick.  Mutates and returns ``state``.

    Phases: simultaneous moves (with general dragging and tree harvesting),
    simultaneous shots with damage applied afterwards, blue shaping rewards,
    termination, optional zero-sum transform, then bookkeeping (broadcast
    rewards, cooldowns, general-sighting latches, step counter).
    """
    if state.terminal is not None:
        raise TerminalStateError(f"episode already ended: {state.terminal.value}")
    cfg = state.config
    n = len(state.players)
    if len(joint_action) != n:
        raise InvalidActionError(f"joint action needs {n} entries, got {len(joint_action)}")
    legal = legal_actions(cfg)
    actions: list[Action] = []
    for i, raw in enumerate(joint_action):
        try:
            a = Action(raw)
        except ValueError:
            raise InvalidActionError(f"invalid action value {raw!r} for player {i}") from None
        if a not in legal:
            raise InvalidActionError(f"action {a.name} not available under this config")
        if not state.players[i].alive and a != Action.NOOP:
            raise InvalidActionError(f"dead player {i} must submit NOOP, got {a.name}")
        actions.append(a)

    events: list[tuple] = []
    team_r = [0.0, 0.0, 0.0]
    w, h = cfg.map_width, cfg.map_height

    # --- phase 1: simultaneous moves -------------------------------------
    dests: list[tuple[int, int] | None] = [None] * n
    for i, a in enumerate(actions):
        if a in MOVE_ACTIONS and state.players[i].alive:
            dx, dy = DIRECTIONS[a]
            nx, ny = state.players[i].x + dx, state.players[i].y + dy
            if 0 <= nx < w and 0 <= ny < h:
                dests[i] = (nx, ny)

    dragger = -1
    if state.general_alive:
        for i, d in enumerate(dests):
            if d is not None and resolve_drag(state, state.players[i], DIRECTIONS[actions[i]]):
                dragger = i
                break

    general_new = (state.general_x, state.general_y)
    if dragger >= 0:
        ddx, ddy = DIRECTIONS[actions[dragger]]
        general_new = (state.general_x + ddx, state.general_y + ddy)

    for i, d in enumerate(dests):
        if d is None:
            continue
        p = state.players[i]
        if i != dragger and state.general_alive and d == general_new:
            continue  # the general's tile is impassable
        p.x, p.y = d
        events.append(("moved", i, d[0], d[1]))
        if p.team == Team.GREEN and d in state.trees:
            state.trees.discard(d)
            state.tree_grid[d[0], d[1]] = 0
            team_r[Team.GREEN] += cfg.reward_per_tree
            events.append(("harvested", i, d[0], d[1]))

    if dragger >= 0:
        state.general_x, state.general_y = general_new
        events.append(("general_dragged", dragger, general_new[0], general_new[1]))

    # --- phase 2: simultaneous shots, then damage ------------------------
    player_damage = [0] * n
    hits_by_victim: dict[int, list[int]] = {}
    general_damage = 0
    for i, a in enumerate(actions):
        p = state.players[i]
        if not p.alive:
            continue
        if a in SHOOT_ACTIONS:
            if p.shoot_cooldown > 0:
                continue  # degrades to NOOP
            hit = resolve_shot(state, p, DIRECTIONS[a])
            p.shoot_cooldown = cfg.team_shoot_timeout[p.team]
            if hit is None:
                continue
            if hit[0] == "general":
                general_damage += cfg.team_shoot_damage[p.team]
                events.append(("shot", i, -1))
            else:
                v = hit[1]
                player_damage[v] += cfg.team_shoot_damage[p.team]
                hits_by_victim.setdefault(v, []).append(i)
                events.append(("shot", i, v))
        elif a == Action.AUTO_SHOOT:
            if p.shoot_cooldown > 0:
                continue
            target = _auto_target(state, p)
            if target is None:
                continue  # nothing in range: the action degrades to NOOP
            p.shoot_cooldown = cfg.team_shoot_timeout[p.team]
            v = target[0]
            player_damage[v] += cfg.team_shoot_damage[p.team]
            hits_by_victim.setdefault(v, []).append(i)
            events.append(("shot", i, v))

    for v, dmg in enumerate(player_damage):
        if dmg <= 0:
            continue
        victim = state.players[v]
        victim.health = max(0, victim.health - dmg)
        if victim.alive and victim.health == 0:
            victim.alive = False
            events.append(("killed", v))
            # Every shooter who hit a victim that died this tick gets credit.
            for shooter_idx in hits_by_victim[v]:
                s_team = state.players[shooter_idx].team
                team_r[s_team] += cfg.points_for_kill[s_team][victim.team]
    if general_damage > 0:
        state.general_health = max(0, state.general_health - general_damage)

    # --- phase 3: shaping rewards (only while the general is alive) ------
    if state.general_alive:
        if not state.blue_adjacency_awarded:
            for p in state.players:
                if p.alive and p.team == Team.BLUE and \
                        chebyshev(p.x, p.y, state.general_x, state.general_y) <= 1:
                    team_r[Team.BLUE] += 1.0
                    state.blue_adjacency_awarded = True
                    events.append(("blue_adjacency", p.index))
                    break
        d = edge_distance(state.general_x, state.general_y, w, h)
        if d < state.min_edge_distance:
            blue_total = state.team_cumulative_reward[Team.BLUE] + team_r[Team.BLUE]
            bonus = (10.0 - blue_total) / 20.0
            team_r[Team.BLUE] += bonus
            state.min_edge_distance = d
            events.append(("general_shaping", bonus))

    # --- phase 4: termination --------------------------------------------
    outcome: Outcome | None = None
    if state.general_present and state.general_health == 0:
        outcome = Outcome.GENERAL_KILLED
        _add(team_r, (10.0, 0.0, -10.0))
    elif state.general_alive and edge_distance(state.general_x, state.general_y, w, h) == 0:
        outcome = Outcome.GENERAL_RESCUED
        blue_total = state.team_cumulative_reward[Team.BLUE] + team_r[Team.BLUE]
        _add(team_r, (-10.0, 0.0, 10.0 - blue_total))
    elif state.t + 1 >= cfg.timeout:
        outcome = Outcome.TIMEOUT
        _add(team_r, cfg.timeout_penalty)
    elif cfg.battle_royale:
        living_teams = {p.team for p in state.players if p.alive}
        if len(living_teams) == 1:
            winner = living_teams.pop()
            for k in range(3):
                if cfg.team_counts[k] == 0:
                    continue
                team_r[k] += 10.0 if k == winner else -10.0
            outcome = Outcome.LAST_TEAM_STANDING

    # --- phase 5: optional zero-sum transform -----------------------------
    if cfg.zero_sum:
        total = sum(team_r)
        team_r = [2.0 * r - total for r in team_r]

    # --- phase 6: bookkeeping ---------------------------------------------
    for k in range(3):
        state.team_cumulative_reward[k] += team_r[k]
    state.t += 1
    for p in state.players:
        if p.alive and p.shoot_cooldown > 0:
            p.shoot_cooldown -= 1
    _update_general_latches(state)
    state.terminal = outcome
    state.render_epoch += 1
    if outcome is not None:
        events.append(("terminal", outcome.value))

    rewards = tuple(team_r[p.team] for p in state.players)
    return state, StepResult(
        rewards=rewards,
        team_rewards=(team_r[0], team_r[1], team_r[2]),
        events=events,
        done=outcome is not None,
        outcome=outcome,
    )


def _add(acc: list[float], extra) -> None:
    for k in range(3):
        acc[k] += extra[k]
