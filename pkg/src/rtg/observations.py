"""Egocentric and global RGB rendering.

The pixel format is frozen in docs/observation-layout.md.  A local
observation is a (2*max_view_distance+1) tile square window centered on the
observer, 3x3 pixels per tile, plus one bottom status row of 3x3 pixel
cells.  Rendering is a pure function of (state, observer): per-step arrays
are cached on the state keyed by ``render_epoch``, so code that mutates a
state outside ``engine.step`` must call ``invalidate_render_cache``.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import palette
from .config import GameConfig, Team
from .engine import GameState, Player, chebyshev, manhattan

_GRASS = palette.as_array(palette.GRASS)
_TREE = palette.as_array(palette.TREE)
_GENERAL = palette.as_array(palette.GENERAL)
_TEAM_RGB = np.array(palette.TEAM_COLORS, dtype=np.uint8)
_ID_RGB = np.array(palette.ID_COLORS, dtype=np.uint8)
_NEUTRAL = palette.as_array(palette.NEUTRAL_ROLE)


def observation_shape(config: GameConfig) -> tuple[int, int, int]:
    """(rows, cols, 3): the tile window plus one status row."""
    side = 2 * config.max_view_distance + 1
    return ((side + 1) * palette.TILE_PX, side * palette.TILE_PX, 3)


def invalidate_render_cache(state: GameState) -> None:
    """Force array rebuild after mutating a state by hand (tests, tools)."""
    state.render_epoch += 1


def role_visible(config: GameConfig, observer: Player, subject: Player) -> bool:
    """Whether the observer may see the subject's team color."""
    if subject.index == observer.index:
        return True
    if config.hidden_roles == "all":
        return True
    if config.hidden_roles == "none":
        return False
    return observer.team == Team.RED


@njit(cache=True)
def _grid_kernel(out, side, max_view, view, ox, oy, map_w, map_h, tree_grid,
                 grass, tree, px, py, alive, ring, center, n,
                 show_general, gx, gy, general_rgb):
    for wy in range(side):
        my = oy + wy - max_view
        if my < 0 or my >= map_h:
            continue
        for wx in range(side):
            mx = ox + wx - max_view
            if mx < 0 or mx >= map_w:
                continue
            dx = wx - max_view
            if dx < 0:
                dx = -dx
            dy = wy - max_view
            if dy < 0:
                dy = -dy
            cheb = dx if dx > dy else dy
            if cheb > view:
                continue
            if tree_grid[mx, my] == 1:
                c0, c1, c2 = tree[0], tree[1], tree[2]
            else:
                c0, c1, c2 = grass[0], grass[1], grass[2]
            r0 = wy * 3
            c0l = wx * 3
            for rr in range(r0, r0 + 3):
                for cc in range(c0l, c0l + 3):
                    out[rr, cc, 0] = c0
                    out[rr, cc, 1] = c1
                    out[rr, cc, 2] = c2
    # Bodies first, then living players; descending index within each pass so
    # the lowest index ends on top of a shared tile.
    for want_alive in range(2):
        for i in range(n - 1, -1, -1):
            if alive[i] != want_alive:
                continue
            ddx = px[i] - ox
            ddy = py[i] - oy
            adx = -ddx if ddx < 0 else ddx
            ady = -ddy if ddy < 0 else ddy
            d = adx if adx > ady else ady
            if d > view or adx > max_view or ady > max_view:
                continue
            r0 = (ddy + max_view) * 3
            c0l = (ddx + max_view) * 3
            for rr in range(3):
                for cc in range(3):
                    out[r0 + rr, c0l + cc, 0] = ring[i, 0]
                    out[r0 + rr, c0l + cc, 1] = ring[i, 1]
                    out[r0 + rr, c0l + cc, 2] = ring[i, 2]
            out[r0 + 1, c0l + 1, 0] = center[i, 0]
            out[r0 + 1, c0l + 1, 1] = center[i, 1]
            out[r0 + 1, c0l + 1, 2] = center[i, 2]
    if show_general == 1:
        ddx = gx - ox
        ddy = gy - oy
        adx = -ddx if ddx < 0 else ddx
        ady = -ddy if ddy < 0 else ddy
        d = adx if adx > ady else ady
        if d <= view and adx <= max_view and ady <= max_view:
            r0 = (ddy + max_view) * 3
            c0l = (ddx + max_view) * 3
            for rr in range(r0, r0 + 3):
                for cc in range(c0l, c0l + 3):
                    out[rr, cc, 0] = general_rgb[0]
                    out[rr, cc, 1] = general_rgb[1]
                    out[rr, cc, 2] = general_rgb[2]


class _RenderArrays:
    """Per-step flat views of player data, shared across all observers."""

    __slots__ = ("epoch", "px", "py", "alive", "ring", "centers_by_team")

    def __init__(self, state: GameState):
        cfg = state.config
        n = len(state.players)
        self.epoch = state.render_epoch
        self.px = np.empty(n, dtype=np.int64)
        self.py = np.empty(n, dtype=np.int64)
        self.alive = np.empty(n, dtype=np.uint8)
        self.ring = np.empty((n, 3), dtype=np.uint8)
        # Center colors as seen by an observer of each team, assuming the
        # subject is not the observer; render_local overrides the self entry.
        self.centers_by_team = np.empty((3, n, 3), dtype=np.uint8)
        for i, p in enumerate(state.players):
            self.px[i] = p.x
            self.py[i] = p.y
            self.alive[i] = 1 if p.alive else 0
            ring = palette.ID_COLORS[p.id_color]
            team = palette.TEAM_COLORS[p.team]
            if p.alive:
                self.ring[i] = ring
            else:
                self.ring[i] = palette.dim(ring)
            for ot in range(3):
                if not cfg.local_team_colors:
                    c = palette.NEUTRAL_ROLE
                elif not p.alive and cfg.reveal_team_on_death:
                    c = team
                elif cfg.hidden_roles == "all" or (cfg.hidden_roles == "default" and ot == Team.RED):
                    c = team
                else:
                    c = palette.NEUTRAL_ROLE
                self.centers_by_team[ot, i] = c if p.alive else palette.dim(c)


def _arrays(state: GameState) -> _RenderArrays:
    cache = state.render_cache
    if cache is None or cache.epoch != state.render_epoch:
        cache = _RenderArrays(state)
        state.render_cache = cache
    return cache


def _status_cells(state: GameState, p: Player) -> np.ndarray:
    cfg = state.config
    side = 2 * cfg.max_view_distance + 1
    cells = np.zeros((side, 3), dtype=np.uint8)
    cells[0] = palette.TEAM_COLORS[p.team]
    v = palette.intensity_byte(p.x, cfg.map_width - 1)
    cells[1] = (v, v, v)
    v = palette.intensity_byte(p.y, cfg.map_height - 1)
    cells[2] = (v, v, v)
    v = palette.intensity_byte(p.health, cfg.player_initial_health)
    cells[3] = (v, v, v)
    v = palette.intensity_byte(p.shoot_cooldown, cfg.team_shoot_timeout[p.team])
    cells[4] = (v, v, v)
    v = palette.intensity_byte(cfg.timeout - state.t, cfg.timeout)
    cells[5] = (v, v, v)
    if p.team == Team.BLUE and state.general_alive:
        if cfg.blue_general_indicator == "direction":
            sx = (state.general_x > p.x) - (state.general_x < p.x)
            sy = (state.general_y > p.y) - (state.general_y < p.y)
            if (sx, sy) != (0, 0):
                cells[6] = palette.OCTANT_COLORS[(sx, sy)]
        else:
            span = cfg.map_width + cfg.map_height
            d = manhattan(p.x, p.y, state.general_x, state.general_y)
            v = palette.intensity_byte(max(0, span - d), span)
            cells[6] = (v, v, v)
    return cells


def render_local(state: GameState, observer: int) -> np.ndarray:
    """The egocentric observation of one player as a fresh uint8 array.

    Dead observers receive a black grid; the status row is always drawn.
    """
    cfg = state.config
    p = state.players[observer]
    shape = observation_shape(cfg)
    out = np.zeros(shape, dtype=np.uint8)
    if p.alive:
        arrays = _arrays(state)
        centers = arrays.centers_by_team[p.team].copy()
        if cfg.local_team_colors:
            centers[observer] = palette.TEAM_COLORS[p.team]
        show_general = 1 if (state.general_present
                             and (p.has_seen_general or p.team == Team.BLUE)) else 0
        _grid_kernel(
            out, 2 * cfg.max_view_distance + 1, cfg.max_view_distance,
            cfg.team_view_distance[p.team], p.x, p.y,
            cfg.map_width, cfg.map_height, state.tree_grid,
            _GRASS, _TREE, arrays.px, arrays.py, arrays.alive, arrays.ring,
            centers, len(state.players),
            show_general, state.general_x, state.general_y, _GENERAL,
        )
    cells = _status_cells(state, p)
    grid_px = (2 * cfg.max_view_distance + 1) * palette.TILE_PX
    out[grid_px:, :, :] = np.repeat(cells, palette.TILE_PX, axis=0)[None, :, :]
    return out


def render_all_local(state: GameState) -> list[np.ndarray | None]:
    """Local observations for every living player; None for the dead."""
    return [render_local(state, p.index) if p.alive else None for p in state.players]


def render_global(state: GameState) -> np.ndarray:
    """Omniscient full-map frame: all roles and the general visible."""
    cfg = state.config
    w, h = cfg.map_width, cfg.map_height
    out = np.empty((h * 3, w * 3, 3), dtype=np.uint8)
    out[:, :] = _GRASS
    for (tx, ty) in state.trees:
        out[ty * 3:ty * 3 + 3, tx * 3:tx * 3 + 3] = _TREE
    for want_alive in (False, True):
        for p in reversed(state.players):
            if p.alive != want_alive:
                continue
            ring = palette.ID_COLORS[p.id_color]
            team = palette.TEAM_COLORS[p.team]
            if not p.alive:
                ring, team = palette.dim(ring), palette.dim(team)
            r0, c0 = p.y * 3, p.x * 3
            out[r0:r0 + 3, c0:c0 + 3] = ring
            out[r0 + 1, c0 + 1] = team
    if state.general_present:
        r0, c0 = state.general_y * 3, state.general_x * 3
        out[r0:r0 + 3, c0:c0 + 3] = _GENERAL
    return out


def visible_players(state: GameState, observer: int) -> set[int]:
    """Players (living or bodies) within the observer's team view distance.

    Includes the observer.  Dead observers see nothing.
    """
    p = state.players[observer]
    if not p.alive:
        return set()
    view = state.config.team_view_distance[p.team]
    return {
        q.index for q in state.players
        if chebyshev(p.x, p.y, q.x, q.y) <= view
    }
