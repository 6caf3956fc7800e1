from dataclasses import replace

import numpy as np
import pytest

from rtg import palette
from rtg.config import GameConfig, Team, builtin_scenario
from rtg.engine import init_game, step, Action
from rtg.observations import (
    invalidate_render_cache,
    observation_shape,
    render_global,
    render_local,
    visible_players,
)

from conftest import build_state

OPEN = GameConfig(n_trees=0, initial_random_kills=0.0)


def tile(obs, wx, wy):
    """The 3x3 pixel block of a window tile."""
    return obs[wy * 3:wy * 3 + 3, wx * 3:wx * 3 + 3]


def status_cell(obs, cell, side=13):
    return obs[side * 3 + 1, cell * 3 + 1]


class TestGeometry:
    def test_default_dimensions(self):
        # independent pixel count: 13-tile window plus a status row
        side = 2 * 6 + 1
        assert observation_shape(GameConfig()) == ((side + 1) * 3, side * 3, 3)
        s = build_state(OPEN, [(10, 10, Team.BLUE)], general=(20, 20))
        assert render_local(s, 0).shape == (42, 39, 3)
        assert render_local(s, 0).dtype == np.uint8

    def test_global_dimensions(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE)], general=(20, 20))
        frame = render_global(s)
        assert frame.shape == (96, 96, 3)

    def test_observer_at_center(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE)], general=(20, 20))
        obs = render_local(s, 0)
        block = tile(obs, 6, 6)
        assert tuple(block[0, 0]) == palette.ID_COLORS[0]
        assert tuple(block[1, 1]) == palette.TEAM_COLORS[Team.BLUE]


class TestRoleMasking:
    def scene(self, hidden, observer_team, subject_team, **kw):
        cfg = replace(OPEN, hidden_roles=hidden, **kw)
        s = build_state(cfg, [(10, 10, observer_team), (12, 10, subject_team)],
                        general=(25, 25))
        return render_local(s, 0)

    def test_blue_sees_gray_center_for_red(self):
        obs = self.scene("default", Team.BLUE, Team.RED)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.NEUTRAL_ROLE

    def test_no_red_pixel_anywhere_for_masked_observer(self):
        for observer in (Team.BLUE, Team.GREEN):
            obs = self.scene("default", observer, Team.RED)
            red = np.array(palette.TEAM_COLORS[Team.RED], dtype=np.uint8)
            assert not (obs == red).all(axis=2).any()

    def test_red_sees_roles_under_default(self):
        obs = self.scene("default", Team.RED, Team.RED)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.TEAM_COLORS[Team.RED]

    def test_all_mode_everyone_sees(self):
        obs = self.scene("all", Team.GREEN, Team.RED)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.TEAM_COLORS[Team.RED]

    def test_none_mode_only_self(self):
        obs = self.scene("none", Team.RED, Team.RED)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.NEUTRAL_ROLE
        assert tuple(tile(obs, 6, 6)[1, 1]) == palette.TEAM_COLORS[Team.RED]

    def test_local_team_colors_off_hides_all(self):
        obs = self.scene("all", Team.RED, Team.RED, local_team_colors=False)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.NEUTRAL_ROLE
        assert tuple(tile(obs, 6, 6)[1, 1]) == palette.NEUTRAL_ROLE

    def test_reveal_team_on_death(self):
        cfg = replace(OPEN, reveal_team_on_death=True)
        s = build_state(cfg, [(10, 10, Team.BLUE), (12, 10, Team.RED, False)],
                        general=(25, 25))
        obs = render_local(s, 0)
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.dim(palette.TEAM_COLORS[Team.RED])

    def test_bodies_dimmed(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE), (12, 10, Team.RED, False)],
                        general=(25, 25))
        obs = render_local(s, 0)
        assert tuple(tile(obs, 8, 6)[0, 0]) == palette.dim(palette.ID_COLORS[1])
        assert tuple(tile(obs, 8, 6)[1, 1]) == palette.dim(palette.NEUTRAL_ROLE)


class TestViewDistance:
    def test_green_blue_ring_is_black(self):
        # view distance 5 < window radius 6: the outer tile ring stays black
        s = build_state(OPEN, [(16, 16, Team.BLUE)], general=(2, 2))
        obs = render_local(s, 0)
        assert (tile(obs, 0, 6) == 0).all()
        assert (tile(obs, 12, 6) == 0).all()
        assert not (tile(obs, 1, 6) == 0).all()

    def test_red_sees_full_window(self):
        s = build_state(OPEN, [(16, 16, Team.RED)], general=(2, 2))
        obs = render_local(s, 0)
        assert (tile(obs, 0, 6) == palette.as_array(palette.GRASS)).all()

    def test_out_of_map_black(self):
        s = build_state(OPEN, [(0, 0, Team.RED)], general=(20, 20))
        obs = render_local(s, 0)
        assert (tile(obs, 0, 0) == 0).all()  # northwest of the map corner
        assert (tile(obs, 6, 6) != 0).any()

    def test_player_at_view_boundary(self):
        s = build_state(OPEN, [(16, 16, Team.BLUE), (21, 16, Team.GREEN),
                               (22, 16, Team.GREEN)], general=(2, 2))
        obs = render_local(s, 0)
        assert tuple(tile(obs, 11, 6)[0, 0]) == palette.ID_COLORS[1]  # distance 5
        assert (tile(obs, 12, 6) == 0).all()  # distance 6: out of view


class TestGeneralVisibility:
    def test_unlatched_red_does_not_see_general(self):
        s = build_state(OPEN, [(14, 10, Team.RED)], general=(10, 10))
        obs = render_local(s, 0)  # distance 4 > red latch distance 3
        assert tuple(tile(obs, 2, 6)[1, 1]) != palette.GENERAL

    def test_latched_red_sees_general(self):
        s = build_state(OPEN, [(14, 10, Team.RED)], general=(10, 10), latch_all=True)
        obs = render_local(s, 0)
        assert (tile(obs, 2, 6) == palette.as_array(palette.GENERAL)).all()

    def test_blue_always_sees_general_in_view(self):
        s = build_state(OPEN, [(14, 10, Team.BLUE)], general=(10, 10))
        obs = render_local(s, 0)
        assert (tile(obs, 2, 6) == palette.as_array(palette.GENERAL)).all()

    def test_tree_rendering(self):
        s = build_state(OPEN, [(10, 10, Team.RED)], general=(25, 25), trees=[(11, 10)])
        obs = render_local(s, 0)
        assert (tile(obs, 7, 6) == palette.as_array(palette.TREE)).all()


class TestStatusRow:
    def test_team_color_cell(self):
        for team in Team:
            s = build_state(OPEN, [(10, 10, team)], general=(25, 25))
            obs = render_local(s, 0)
            assert tuple(status_cell(obs, 0)) == palette.TEAM_COLORS[team]

    def test_position_cells_roundtrip(self):
        s = build_state(OPEN, [(13, 27, Team.RED)], general=(5, 5))
        obs = render_local(s, 0)
        vx, vy = int(status_cell(obs, 1)[0]), int(status_cell(obs, 2)[0])
        assert palette.byte_to_count(vx, 31) == 13
        assert palette.byte_to_count(vy, 31) == 27

    def test_health_and_cooldown_cells(self):
        s = build_state(OPEN, [(10, 10, Team.RED)], general=(25, 25))
        s.players[0].health = 5
        s.players[0].shoot_cooldown = 10
        invalidate_render_cache(s)
        obs = render_local(s, 0)
        assert int(status_cell(obs, 3)[0]) == palette.intensity_byte(5, 10)
        assert int(status_cell(obs, 4)[0]) == palette.intensity_byte(10, 10) == 255

    def test_remaining_steps_cell(self):
        s = build_state(OPEN, [(10, 10, Team.RED)], general=(25, 25))
        s.t = 100
        invalidate_render_cache(s)
        obs = render_local(s, 0)
        assert int(status_cell(obs, 5)[0]) == palette.intensity_byte(400, 500)

    @pytest.mark.parametrize("gpos, octant", [
        ((10, 5), (0, -1)), ((15, 5), (1, -1)), ((15, 10), (1, 0)),
        ((15, 15), (1, 1)), ((10, 15), (0, 1)), ((5, 15), (-1, 1)),
        ((5, 10), (-1, 0)), ((5, 5), (-1, -1)),
    ])
    def test_direction_indicator_octants(self, gpos, octant):
        s = build_state(OPEN, [(10, 10, Team.BLUE)], general=gpos)
        obs = render_local(s, 0)
        assert tuple(status_cell(obs, 6)) == palette.OCTANT_COLORS[octant]

    def test_indicator_black_for_non_blue(self):
        for team in (Team.RED, Team.GREEN):
            s = build_state(OPEN, [(10, 10, team)], general=(20, 20))
            obs = render_local(s, 0)
            assert tuple(status_cell(obs, 6)) == (0, 0, 0)

    def test_distance_indicator(self):
        cfg = replace(OPEN, blue_general_indicator="distance")
        s = build_state(cfg, [(10, 10, Team.BLUE)], general=(20, 25))
        obs = render_local(s, 0)
        d = 10 + 15
        expected = palette.intensity_byte(64 - d, 64)
        assert tuple(status_cell(obs, 6)) == (expected,) * 3

    def test_remaining_cells_black(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE)], general=(20, 20))
        obs = render_local(s, 0)
        for cell in range(7, 13):
            assert tuple(status_cell(obs, cell)) == (0, 0, 0)

    def test_dead_observer_black_grid_with_status(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE, False)], general=(20, 20))
        obs = render_local(s, 0)
        assert (obs[:39] == 0).all()
        assert tuple(status_cell(obs, 0)) == palette.TEAM_COLORS[Team.BLUE]
        assert int(status_cell(obs, 3)[0]) == 0  # zero health


class TestPurity:
    def test_render_local_pure(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE), (12, 11, Team.RED)], general=(15, 15))
        a = render_local(s, 0)
        b = render_local(s, 0)
        assert np.array_equal(a, b)
        assert a is not b

    def test_render_global_pure(self):
        s = init_game(builtin_scenario("rescue"), 3)
        assert np.array_equal(render_global(s), render_global(s))

    def test_translation_symmetry(self):
        cfg = OPEN
        base = build_state(cfg, [(12, 12, Team.RED), (14, 13, Team.GREEN)],
                           general=(16, 16), trees=[(11, 14)], latch_all=True)
        moved = build_state(cfg, [(15, 14, Team.RED), (17, 15, Team.GREEN)],
                            general=(19, 18), trees=[(14, 16)], latch_all=True)
        a = render_local(base, 0)
        b = render_local(moved, 0)
        side = 13 * 3
        assert np.array_equal(a[:side], b[:side])  # grids identical
        assert not np.array_equal(a[side:], b[side:])  # x/y cells moved

    def test_render_after_step_reflects_change(self):
        s = build_state(OPEN, [(10, 10, Team.GREEN)], general=(25, 25), trees=[(11, 10)])
        before = render_local(s, 0)
        step(s, [Action.MOVE_E])
        after = render_local(s, 0)
        assert not np.array_equal(before, after)


class TestGlobalFrame:
    def test_each_living_player_exactly_one_block(self):
        state = init_game(builtin_scenario("rescue"), 12)
        frame = render_global(state)
        corners = frame[0::3, 0::3]
        for p in state.players:
            if not p.alive:
                continue
            color = np.array(palette.ID_COLORS[p.id_color], dtype=np.uint8)
            assert int((corners == color).all(axis=2).sum()) == 1

    def test_global_shows_roles_and_general(self):
        s = build_state(OPEN, [(10, 10, Team.RED)], general=(20, 20))
        frame = render_global(s)
        assert tuple(frame[10 * 3 + 1, 10 * 3 + 1]) == palette.TEAM_COLORS[Team.RED]
        assert tuple(frame[20 * 3, 20 * 3]) == palette.GENERAL


class TestVisiblePlayers:
    def test_boundary(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE), (15, 10, Team.RED),
                               (16, 10, Team.GREEN)], general=(25, 25))
        vis = visible_players(s, 0)
        assert vis == {0, 1}  # distance five yes, six no

    def test_red_range_six(self):
        s = build_state(OPEN, [(10, 10, Team.RED), (16, 10, Team.GREEN)], general=(25, 25))
        assert visible_players(s, 0) == {0, 1}

    def test_dead_observer_sees_nothing(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE, False), (11, 10, Team.RED)],
                        general=(25, 25))
        assert visible_players(s, 0) == set()

    def test_bodies_are_visible(self):
        s = build_state(OPEN, [(10, 10, Team.BLUE), (12, 10, Team.RED, False)],
                        general=(25, 25))
        assert visible_players(s, 0) == {0, 1}


class TestPalette:
    def test_id_colors_distinct(self):
        assert len(set(palette.ID_COLORS)) == len(palette.ID_COLORS)
        assert not set(palette.ID_COLORS) & set(palette.TEAM_COLORS)

    def test_parser_critical_colors_never_collide(self):
        terrain = {palette.GRASS, palette.TREE, palette.GENERAL, palette.BLACK,
                   palette.NEUTRAL_ROLE}
        teams = set(palette.TEAM_COLORS)
        ids = set(palette.ID_COLORS)
        octants = set(palette.OCTANT_COLORS.values())
        dims = {palette.dim(c)
                for c in teams | ids | {palette.NEUTRAL_ROLE}}
        groups = [terrain, teams, ids, octants, dims]
        for i, a in enumerate(groups):
            for b in groups[i + 1:]:
                assert not a & b

    def test_intensity_byte_roundtrip(self):
        for den in (9, 31, 255):
            for num in range(den + 1):
                byte = palette.intensity_byte(num, den)
                assert 0 <= byte <= 255
                assert palette.byte_to_count(byte, den) == num
