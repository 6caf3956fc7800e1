"""Stochastic policies over observation histories, plus scripted baselines.

Every policy maps an observation to a probability distribution over the
config's action set, deterministically given the instance's memory.  The
scripted kinds mix a hand-written behavior with an epsilon floor, so every
action always has probability at least ``epsilon / n_actions``; exact
Bayesian updates rely on that floor staying positive.

Scripted behaviors read the rendered pixels only (position and cooldown come
from the status row, entities from exact palette matches), so the same code
can evaluate "what would role z have done" on any player's observation
stream.
"""

from __future__ import annotations

import numpy as np

from . import palette
from .config import GameConfig, Team
from .engine import Action, legal_actions

DIST_ATOL = 1e-9

KINDS = ("hunter", "rescuer", "harvester", "wanderer", "stationary")
_ROLE_LOCKED = {"hunter": Team.RED, "rescuer": Team.BLUE, "harvester": Team.GREEN}

_GRASS = np.array(palette.GRASS, dtype=np.uint8)
_TREE = np.array(palette.TREE, dtype=np.uint8)
_GENERAL = np.array(palette.GENERAL, dtype=np.uint8)
_LIVING_RINGS = frozenset(palette.ID_COLORS)
_BODY_RINGS = frozenset(palette.dim(c) for c in palette.ID_COLORS)
# Tile-center colors a shot passes through: terrain, unseen, and bodies.
_SHOT_TRANSPARENT = frozenset(
    {palette.GRASS, palette.TREE, palette.BLACK}
    | {palette.dim(c) for c in palette.TEAM_COLORS}
    | {palette.dim(palette.NEUTRAL_ROLE)}
)

_ROTATE_CW = {
    Action.MOVE_N: Action.MOVE_E,
    Action.MOVE_E: Action.MOVE_S,
    Action.MOVE_S: Action.MOVE_W,
    Action.MOVE_W: Action.MOVE_N,
}


def is_distribution(dist: np.ndarray) -> bool:
    return bool(np.all(dist >= 0) and abs(float(dist.sum()) - 1.0) <= DIST_ATOL)


def sample(dist: np.ndarray, rng: np.random.Generator) -> Action:
    """Inverse-CDF draw in the fixed action order (inferred from length)."""
    actions = (Action.NOOP, *_MOVES, Action.AUTO_SHOOT) if len(dist) == 6 else _FULL_ORDER
    u = rng.random()
    acc = 0.0
    for i, p in enumerate(dist):
        acc += p
        if u < acc:
            return actions[i]
    return actions[len(dist) - 1]


_MOVES = (Action.MOVE_N, Action.MOVE_S, Action.MOVE_E, Action.MOVE_W)
_FULL_ORDER = tuple(Action(i) for i in range(9))


class PolicyInstance:
    """Base: epsilon-greedy wrapper around a scripted decision rule."""

    kind = "base"

    def __init__(self, config: GameConfig, role: Team, epsilon: float):
        self.config = config
        self.role = role
        self.epsilon = float(epsilon)
        self.actions = legal_actions(config)
        self._index = {a: i for i, a in enumerate(self.actions)}
        n = len(self.actions)
        self._floor = np.full(n, self.epsilon / n, dtype=np.float64)
        self._side = 2 * config.max_view_distance + 1
        self.reset()

    def reset(self) -> None:
        self._last_pos: tuple[int, int] | None = None
        self._last_move: Action | None = None
        self._memory_reset()

    def _memory_reset(self) -> None:
        pass

    def act(self, obs: np.ndarray) -> np.ndarray:
        grid_px = self._side * palette.TILE_PX
        if obs.shape != (grid_px + palette.TILE_PX, grid_px, 3):
            raise ValueError(
                f"observation shape {obs.shape} does not match this config"
            )
        view = _View(obs, self.config, self._side)
        choice = self._decide(view)
        if choice in _ROTATE_CW and self._last_move == choice and self._last_pos == view.pos:
            choice = _ROTATE_CW[choice]  # last identical move was blocked; detour
        self._last_pos = view.pos
        self._last_move = choice if choice in _ROTATE_CW else None
        dist = self._floor.copy()
        dist[self._index[choice]] += 1.0 - self.epsilon
        return dist

    def _decide(self, view: "_View") -> Action:
        raise NotImplementedError


class _View:
    """Lazy pixel-parser shared by the scripted behaviors."""

    def __init__(self, obs: np.ndarray, config: GameConfig, side: int):
        self.obs = obs
        self.config = config
        self.side = side
        self.center = config.max_view_distance
        grid = obs[: side * palette.TILE_PX]
        self.tile_centers = grid[1::3, 1::3]
        self.tile_corners = grid[0::3, 0::3]
        row = side * palette.TILE_PX + 1
        self.pos = (
            palette.byte_to_count(int(obs[row, 4, 0]), config.map_width - 1),
            palette.byte_to_count(int(obs[row, 7, 0]), config.map_height - 1),
        )
        self._status_row = row

    @property
    def can_shoot(self) -> bool:
        return int(self.obs[self._status_row, 13, 0]) == 0

    def find_tiles(self, color: np.ndarray) -> np.ndarray:
        """Window-tile (wy, wx) pairs whose center pixel matches exactly."""
        return np.argwhere((self.tile_centers == color).all(axis=2))

    def offsets(self, color: np.ndarray) -> list[tuple[int, int]]:
        """Matching tiles as (dx, dy) offsets from the observer."""
        c = self.center
        return [(int(wx) - c, int(wy) - c) for wy, wx in self.find_tiles(color)]

    def living_player_offsets(self) -> list[tuple[int, int]]:
        """Offsets of living player sprites (self included), by ring color."""
        self._scan_players()
        return self._living

    def body_count(self) -> int:
        self._scan_players()
        return self._bodies

    def _scan_players(self) -> None:
        if hasattr(self, "_living"):
            return
        mask = np.ones(self.tile_corners.shape[:2], dtype=bool)
        for color in (_GRASS, _TREE, _GENERAL):
            mask &= ~(self.tile_corners == color).all(axis=2)
        mask &= self.tile_corners.any(axis=2)
        living = []
        bodies = 0
        c = self.center
        for wy, wx in np.argwhere(mask):
            rgb = tuple(int(v) for v in self.tile_corners[wy, wx])
            if rgb in _LIVING_RINGS:
                living.append((int(wx) - c, int(wy) - c))
            elif rgb in _BODY_RINGS:
                bodies += 1
        self._living = living
        self._bodies = bodies

    def indicator_octant(self) -> tuple[int, int] | None:
        rgb = tuple(int(v) for v in self.obs[self._status_row, 19])
        return palette.OCTANT_BY_COLOR.get(rgb)

    def tile_is_clear(self, dx: int, dy: int) -> bool:
        """No shot-blocking entity at the tile offset (unseen counts clear)."""
        wy, wx = self.center + dy, self.center + dx
        if not (0 <= wy < self.side and 0 <= wx < self.side):
            return True
        rgb = tuple(int(v) for v in self.tile_centers[wy, wx])
        return rgb in _SHOT_TRANSPARENT


def _step_toward(dx: int, dy: int, prefer_x: bool = True) -> Action | None:
    """Move along the axis with the larger offset (ties go to x)."""
    if dx == 0 and dy == 0:
        return None
    if abs(dx) > abs(dy) or (abs(dx) == abs(dy) and prefer_x) or dy == 0:
        if dx != 0:
            return Action.MOVE_E if dx > 0 else Action.MOVE_W
    return Action.MOVE_S if dy > 0 else Action.MOVE_N


_SHOOTS = {
    (0, -1): Action.SHOOT_N,
    (0, 1): Action.SHOOT_S,
    (1, 0): Action.SHOOT_E,
    (-1, 0): Action.SHOOT_W,
}


def _safe_burn(view: _View, others: list[tuple[int, int]],
               general: list[tuple[int, int]], shoot_range: int,
               view_distance: int, n_players: int) -> Action | None:
    """A shot direction guaranteed to hit nothing even after others move.

    Non-combat policies fire such a throwaway shot whenever their cooldown
    reaches zero near anything shootable, so the epsilon-random shots mixed
    into their behavior almost always degrade to NOOP instead of landing.
    Only fires with complete information: every player in the game must be
    visible (alive or as a body), otherwise someone could be lurking beyond
    view, or hidden underneath this very sprite, and walk into the ray.
    Shots resolve against post-move positions, so visible hazards need a
    one-tile margin: anyone adjacent to a ray tile could step onto it.
    """
    if len(others) + view.body_count() < n_players:
        return None
    x, y = view.pos
    cfg = view.config
    hazards = [o for o in others if o != (0, 0)]
    hazards.extend(general)
    for (sx, sy), action in _SHOOTS.items():
        safe = True
        for k in range(1, shoot_range + 1):
            rx, ry = sx * k, sy * k
            if not (0 <= x + rx < cfg.map_width and 0 <= y + ry < cfg.map_height):
                break  # the ray leaves the map; nothing beyond can be hit
            if any(abs(hx - rx) + abs(hy - ry) <= 1 for hx, hy in hazards):
                safe = False
                break
        if safe:
            return action
    return None


def _sweep_waypoints(width: int, height: int, radius: int) -> list[tuple[int, int]]:
    """Serpentine lattice whose cells cover the map at the given radius."""
    radius = max(1, radius)

    def axis(limit: int) -> list[int]:
        vals = list(range(radius, limit, 2 * radius)) or [limit // 2]
        if vals[-1] < limit - 1 - radius:
            vals.append(limit - 1 - radius)
        return vals

    xs, ys = axis(width), axis(height)
    path = []
    for i, y in enumerate(ys):
        row = xs if i % 2 == 0 else list(reversed(xs))
        path.extend((x, y) for x in row)
    return path


class WandererPolicy(PolicyInstance):
    """Uniform over the whole action set, regardless of epsilon."""

    kind = "wanderer"

    def __init__(self, config, role, epsilon):
        super().__init__(config, role, epsilon)
        n = len(self.actions)
        self._uniform = np.full(n, 1.0 / n, dtype=np.float64)
        self._uniform.flags.writeable = False

    def act(self, obs: np.ndarray) -> np.ndarray:
        return self._uniform


class StationaryPolicy(PolicyInstance):
    kind = "stationary"

    def _decide(self, view: _View) -> Action:
        return Action.NOOP


class _SweepingPolicy(PolicyInstance):
    """Shared waypoint-walking memory for hunter and harvester."""

    sweep_radius_from: str = "team_view_distance"

    def _memory_reset(self) -> None:
        radius = getattr(self.config, self.sweep_radius_from)[self.role]
        self._waypoints = _sweep_waypoints(
            self.config.map_width, self.config.map_height, radius
        )
        self._wp = 0

    def _sweep(self, pos: tuple[int, int]) -> Action:
        if pos == self._waypoints[self._wp]:
            self._wp = (self._wp + 1) % len(self._waypoints)
        tx, ty = self._waypoints[self._wp]
        move = _step_toward(tx - pos[0], ty - pos[1])
        return move if move is not None else Action.NOOP


class HunterPolicy(_SweepingPolicy):
    """Red: sweep until the general is found, then line up and shoot it."""

    kind = "hunter"
    sweep_radius_from = "team_general_view_distance"

    def _memory_reset(self) -> None:
        super()._memory_reset()
        self._general: tuple[int, int] | None = None

    def _decide(self, view: _View) -> Action:
        hits = view.offsets(_GENERAL)
        x, y = view.pos
        if hits:
            self._general = (x + hits[0][0], y + hits[0][1])
        if self._general is not None:
            gx, gy = self._general
            dx, dy = gx - x, gy - y
            if dx == 0 and dy == 0:
                self._general = None
                return self._sweep(view.pos)
            aligned = dx == 0 or dy == 0
            dist = abs(dx) + abs(dy)
            if aligned and dist <= self.config.team_shoot_range[self.role]:
                if view.can_shoot and self._ray_clear(view, dx, dy):
                    return self._shoot_direction(dx, dy)
                return Action.NOOP
            if aligned:
                return _step_toward(dx, dy)
            # Zero the smaller offset first to get onto a shooting line.
            if abs(dx) <= abs(dy):
                return Action.MOVE_E if dx > 0 else Action.MOVE_W
            return Action.MOVE_S if dy > 0 else Action.MOVE_N
        return self._sweep(view.pos)

    def _shoot_direction(self, dx: int, dy: int) -> Action:
        if dx == 0:
            return Action.SHOOT_S if dy > 0 else Action.SHOOT_N
        return Action.SHOOT_E if dx > 0 else Action.SHOOT_W

    def _ray_clear(self, view: _View, dx: int, dy: int) -> bool:
        sx = (dx > 0) - (dx < 0)
        sy = (dy > 0) - (dy < 0)
        for k in range(1, abs(dx) + abs(dy)):
            if not view.tile_is_clear(sx * k, sy * k):
                return False
        return True


_DIAGONALS = ((1, 1), (1, -1), (-1, 1), (-1, -1))

_MOVE_DELTAS = {
    Action.MOVE_N: (0, -1),
    Action.MOVE_S: (0, 1),
    Action.MOVE_E: (1, 0),
    Action.MOVE_W: (-1, 0),
}


class RescuerPolicy(PolicyInstance):
    """Blue: converge on the general and drag it toward the nearest edge.

    Stray shots are the main hazard for a rescue (a random shot into the
    general loses the game outright), so besides burning the shoot cooldown
    this policy keeps everyone off firing lines: it travels avoiding cardinal
    alignment with teammates, waits on diagonal tiles beside the general
    rather than next to it, and once two players are in range the closest
    one (position as tiebreaker) pushes every step while the others convoy
    along on a diagonal ahead.
    """

    kind = "rescuer"

    def _memory_reset(self) -> None:
        self._toggle = False

    def _decide(self, view: _View) -> Action:
        cfg = self.config
        others = view.living_player_offsets()
        general = view.offsets(_GENERAL)
        if not cfg.auto_shooting and view.can_shoot and (len(others) > 1 or general):
            burn = _safe_burn(view, others, general, cfg.team_shoot_range[self.role],
                              cfg.team_view_distance[self.role], cfg.n_players)
            if burn is not None:
                return burn
        if general:
            return self._work_the_general(view, general[0], others)
        octant = view.indicator_octant()
        if octant is None:
            return Action.NOOP
        sx, sy = octant
        if sx != 0 and sy != 0:
            sx, sy = (sx, 0) if self._flip() else (0, sy)
        return self._travel(view, sx * 3, sy * 3, others)

    def _work_the_general(self, view: _View, g: tuple[int, int], others) -> Action:
        cfg = self.config
        x, y = view.pos
        gdx, gdy = g
        gx, gy = x + gdx, y + gdy
        my_d = abs(gdx) + abs(gdy)
        teammates = [(abs(px - gdx) + abs(py - gdy), x + px, y + py)
                     for px, py in others if (px, py) != (0, 0)]
        near = sum(1 for d, _, _ in teammates if d <= cfg.help_distance)
        if my_d <= cfg.help_distance:
            near += 1
        movable = near >= cfg.players_to_move_general
        i_drag = not teammates or (my_d, x, y) <= min(teammates)
        push = self._push_move(gx, gy)

        if my_d == 1:
            if movable:
                # Rowing together: whichever adjacent mover the engine picks
                # as the dragger, the general advances toward the edge.
                return push
            return self._to_flank(view, gdx, gdy, others)
        if my_d == 2 and gdx != 0 and gdy != 0:
            if movable:
                if i_drag:
                    move = _step_toward(gdx, gdy)  # step adjacent, push next
                    return move if move is not None else Action.NOOP
                if any(d == 1 for d, _, _ in teammates):
                    return push  # convoy: keep pace with the expected drag
            return Action.NOOP  # hold the flank until there is enough help
        return self._to_flank(view, gdx, gdy, others)

    def _push_vector(self, gx: int, gy: int) -> tuple[int, int]:
        """Unit vector toward the general's nearest map edge."""
        cfg = self.config
        options = (
            (gx, (-1, 0)),
            (cfg.map_width - 1 - gx, (1, 0)),
            (gy, (0, -1)),
            (cfg.map_height - 1 - gy, (0, 1)),
        )
        return min(options, key=lambda o: o[0])[1]

    def _push_move(self, gx: int, gy: int) -> Action:
        d = self._push_vector(gx, gy)
        return {(-1, 0): Action.MOVE_W, (1, 0): Action.MOVE_E,
                (0, -1): Action.MOVE_N, (0, 1): Action.MOVE_S}[d]

    def _to_flank(self, view: _View, gdx: int, gdy: int, others) -> Action:
        """Head for a diagonal beside the general: close, off both firing
        rays, and a move there cannot drag the general anywhere."""
        cfg = self.config
        x, y = view.pos
        gx, gy = x + gdx, y + gdy
        dx, dy = self._push_vector(gx, gy)
        ranked = sorted(
            _DIAGONALS,
            key=lambda p: (abs(gx + p[0] - x) + abs(gy + p[1] - y),
                           -(p[0] * dx + p[1] * dy)),
        )
        occupied = {(x + px, y + py) for px, py in others if (px, py) != (0, 0)}
        fallback = None
        for sx, sy in ranked:
            tx, ty = gx + sx, gy + sy
            if not (0 <= tx < cfg.map_width and 0 <= ty < cfg.map_height):
                continue
            if (tx, ty) == (x, y):
                return Action.NOOP
            if (tx, ty) in occupied:
                # Sharing a tile hides the occupant behind this sprite and
                # wrecks coordination; take a free slot instead.
                fallback = fallback or (tx, ty)
                continue
            return self._travel(view, tx - x, ty - y, others, avoid=(gx, gy))
        if fallback is not None:
            return self._travel(view, fallback[0] - x, fallback[1] - y, others,
                                avoid=(gx, gy))
        return Action.NOOP

    def _travel(self, view: _View, dx: int, dy: int, others,
                avoid: tuple[int, int] | None = None) -> Action:
        """Greedy move that avoids stepping onto firing lines.

        Of the one or two axis moves that make progress, prefer one whose
        destination is neither cardinally aligned with a visible teammate
        nor next to the general (where a move would drag it).
        """
        x, y = view.pos
        candidates = []
        if dx != 0:
            candidates.append(Action.MOVE_E if dx > 0 else Action.MOVE_W)
        if dy != 0:
            candidates.append(Action.MOVE_S if dy > 0 else Action.MOVE_N)
        if not candidates:
            return Action.NOOP
        if abs(dy) > abs(dx):
            candidates.reverse()
        teammates = [o for o in others if o != (0, 0)]

        def penalty(action: Action) -> int:
            mx, my = _MOVE_DELTAS[action]
            score = 0
            if avoid is not None and abs(avoid[0] - x - mx) + abs(avoid[1] - y - my) <= 1:
                score += 2  # adjacent to the general: a move there would drag it
            for px, py in teammates:
                if (px, py) == (mx, my):
                    score += 4  # sharing a tile hides whoever is underneath
                elif avoid is None and max(abs(px - mx), abs(py - my)) <= 1:
                    score += 2  # personal space: simultaneous arrivals collide
                rx, ry = px - mx, py - my
                if (rx == 0 or ry == 0) and abs(rx) + abs(ry) <= 6:
                    score += 1  # on a teammate's potential firing line
            return score

        best = min(candidates, key=penalty)
        if penalty(best) > 0 and abs(dx) + abs(dy) > 3:
            # Every forward move keeps someone on a firing line; a sideways
            # step is worth the detour while the goal is still far away.
            cfg = self.config
            for action in _MOVES:
                if action in candidates:
                    continue
                mx, my = _MOVE_DELTAS[action]
                if not (0 <= x + mx < cfg.map_width and 0 <= y + my < cfg.map_height):
                    continue
                if penalty(action) == 0:
                    return action
        return best

    def _flip(self) -> bool:
        self._toggle = not self._toggle
        return self._toggle


class HarvesterPolicy(_SweepingPolicy):
    """Green: walk onto the nearest visible tree, sweep when none in sight."""

    kind = "harvester"
    sweep_radius_from = "team_view_distance"

    def _decide(self, view: _View) -> Action:
        cfg = self.config
        if not cfg.auto_shooting and view.can_shoot:
            others = view.living_player_offsets()
            general = view.offsets(_GENERAL)
            if len(others) > 1 or general:
                burn = _safe_burn(view, others, general, cfg.team_shoot_range[self.role],
                                  cfg.team_view_distance[self.role], cfg.n_players)
                if burn is not None:
                    return burn
        trees = view.offsets(_TREE)
        if trees:
            dx, dy = min(trees, key=lambda o: (max(abs(o[0]), abs(o[1])), o[1], o[0]))
            move = _step_toward(dx, dy)
            if move is not None:
                return move
        return self._sweep(view.pos)


_KIND_CLASSES = {
    "hunter": HunterPolicy,
    "rescuer": RescuerPolicy,
    "harvester": HarvesterPolicy,
    "wanderer": WandererPolicy,
    "stationary": StationaryPolicy,
}


def make_scripted(config: GameConfig, role: Team, kind: str, epsilon: float = 0.05):
    """A factory of fresh policy instances for one role.

    Raises ValueError for unknown kinds, role-incompatible kinds, or an
    epsilon outside [0, 1].
    """
    if kind not in _KIND_CLASSES:
        raise ValueError(f"unknown policy kind {kind!r}; valid: {', '.join(KINDS)}")
    locked = _ROLE_LOCKED.get(kind)
    if locked is not None and locked != role:
        raise ValueError(f"policy kind {kind!r} plays {locked.name}, not {Team(role).name}")
    if not (0.0 <= epsilon <= 1.0):
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    cls = _KIND_CLASSES[kind]
    return lambda: cls(config, Team(role), epsilon)


class RoleConditionedPolicySet:
    """One policy constructor per role, shared knowledge for belief updates."""

    def __init__(self, factories: dict[Team, "callable"]):
        self.factories = dict(factories)

    @classmethod
    def scripted(cls, config: GameConfig, kinds: dict[Team, str] | None = None,
                 epsilon: float = 0.05) -> "RoleConditionedPolicySet":
        kinds = kinds or DEFAULT_KINDS
        factories = {}
        for team in Team:
            if config.team_counts[team] > 0:
                factories[team] = make_scripted(config, team, kinds[team], epsilon)
        return cls(factories)

    def __contains__(self, team: Team) -> bool:
        return team in self.factories

    def new_instance(self, team: Team) -> PolicyInstance:
        return self.factories[team]()

    def roles(self) -> tuple[Team, ...]:
        return tuple(sorted(self.factories))


DEFAULT_KINDS = {Team.RED: "hunter", Team.GREEN: "harvester", Team.BLUE: "rescuer"}


def parse_policy_spec(spec: str) -> tuple[str, float]:
    """CLI policy strings: "hunter:0.05" or just "wanderer" (epsilon 0.05)."""
    kind, _, eps = spec.partition(":")
    kind = kind.strip().lower()
    if kind not in _KIND_CLASSES:
        raise ValueError(f"unknown policy kind {kind!r}; valid: {', '.join(KINDS)}")
    epsilon = float(eps) if eps else 0.05
    return kind, epsilon
