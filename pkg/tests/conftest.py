import numpy as np
import pytest

from rtg.config import GameConfig, Team
from rtg.engine import GameState, Player, edge_distance


def build_state(config: GameConfig, players, general=None, trees=(), seed=0,
                latch_all=False) -> GameState:
    """Hand-built state for engineered scenarios.

    ``players`` is a list of (x, y, team) or (x, y, team, alive) tuples.
    Placement constraints are not enforced here; callers are responsible
    for geometry that makes sense.
    """
    w, h = config.map_width, config.map_height
    tree_set = set(trees)
    tree_grid = np.zeros((w, h), dtype=np.uint8)
    for tx, ty in tree_set:
        tree_grid[tx, ty] = 1
    plist = []
    for i, spec in enumerate(players):
        x, y, team = spec[0], spec[1], Team(spec[2])
        alive = spec[3] if len(spec) > 3 else True
        plist.append(Player(
            index=i, id_color=i, team=team, x=x, y=y,
            health=config.player_initial_health if alive else 0, alive=alive,
        ))
    present = general is not None and not config.battle_royale
    gx, gy = general if present else (-1, -1)
    state = GameState(
        config=config, t=0, rng=np.random.default_rng(seed), players=plist,
        trees=tree_set, tree_grid=tree_grid,
        general_present=present, general_x=gx, general_y=gy,
        general_health=config.general_initial_health if present else 0,
        min_edge_distance=edge_distance(gx, gy, w, h) if present else 0,
        team_cumulative_reward=[0.0, 0.0, 0.0],
    )
    if latch_all:
        for p in plist:
            p.has_seen_general = True
    return state


@pytest.fixture
def rescue_config() -> GameConfig:
    from rtg.config import builtin_scenario

    return builtin_scenario("rescue")
