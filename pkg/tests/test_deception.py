import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtg.beliefs import BeliefTracker
from rtg.config import GameConfig, Team
from rtg.deception import (
    BonusConfig,
    ExactInverseModel,
    PredictorInverseModel,
    ReturnNormalizer,
    RewardBundle,
    bayes_factor,
    combine,
    deception_bonus,
    postprocess,
    step_raw_bonus,
    warmup_scale,
)
from rtg.engine import init_game
from rtg.policies import RoleConditionedPolicySet

from conftest import build_state
from oracles import run_traced_episode

OPEN = GameConfig(n_trees=0, initial_random_kills=0.0)

UNIFORM = np.full(3, 1 / 3)


class TestBayesFactor:
    def test_revealing_action_penalized(self):
        # true-role likelihood far above the mixture: factor 27/11
        rho = bayes_factor([0.9, 0.1, 0.1], Team.RED, UNIFORM)
        assert rho == pytest.approx(0.9 / (1.1 / 3), abs=1e-12)
        assert rho == pytest.approx(2.4545454545, abs=1e-9)
        assert deception_bonus([0.9, 0.1, 0.1], Team.RED, UNIFORM) == pytest.approx(
            -math.log(27 / 11), abs=1e-12)
        assert deception_bonus([0.9, 0.1, 0.1], Team.RED, UNIFORM) < 0

    def test_mimicking_action_rewarded(self):
        rho = bayes_factor([0.1, 0.9, 0.1], Team.RED, UNIFORM)
        assert rho == pytest.approx(0.3 / 1.1, abs=1e-9)
        bonus = deception_bonus([0.1, 0.9, 0.1], Team.RED, UNIFORM)
        assert bonus == pytest.approx(-math.log(0.3 / 1.1), abs=1e-12)
        assert bonus == pytest.approx(1.299, abs=1e-3)

    def test_uninformative_action_neutral(self):
        assert bayes_factor([0.4, 0.4, 0.4], Team.GREEN, UNIFORM) == pytest.approx(1.0)
        assert deception_bonus([0.4, 0.4, 0.4], Team.GREEN, UNIFORM) == 0.0

    def test_certain_observer_cannot_be_deceived(self):
        believed = np.array([1.0, 0.0, 0.0])
        assert bayes_factor([0.7, 0.2, 0.9], Team.RED, believed) == pytest.approx(1.0)
        assert deception_bonus([0.7, 0.2, 0.9], Team.RED, believed) == pytest.approx(0.0)

    def test_zero_denominator(self):
        with pytest.raises(ZeroDivisionError):
            bayes_factor([0.0, 1.0, 0.0], Team.RED, np.array([1.0, 0.0, 0.0]))

    @settings(max_examples=100, deadline=None)
    @given(
        likes=st.tuples(*[st.floats(0.01, 1)] * 3),
        bel=st.tuples(*[st.floats(0.01, 1)] * 3),
    )
    def test_sign_semantics(self, likes, bel):
        believed = np.array(bel) / sum(bel)
        mixture = float(np.dot(likes, believed))
        bonus = deception_bonus(likes, Team.RED, believed)
        if likes[0] > mixture:
            assert bonus < 0
        elif likes[0] < mixture:
            assert bonus > 0


def full_view_state(n=3):
    cfg = replace(
        OPEN, map_width=9, map_height=9, max_view_distance=8,
        team_view_distance=(8, 8, 8), team_counts=(1, 1, 1), hidden_roles="none",
    )
    players = [(1, 1, Team.RED), (4, 1, Team.GREEN), (7, 1, Team.BLUE)][:n]
    return build_state(cfg, players, general=(4, 4))


class TestStepRawBonus:
    def constant_model(self, table):
        """table[(actor, observer)] = (likelihoods, believed)."""
        return PredictorInverseModel(lambda i, j: table[(i, j)])

    def test_neutral_observers_sum_to_zero(self):
        s = full_view_state()
        table = {(i, j): (np.array([0.3, 0.3, 0.3]), UNIFORM)
                 for i in range(3) for j in range(3) if i != j}
        raw = step_raw_bonus(s, self.constant_model(table), self._cfg(), s.rng)
        np.testing.assert_allclose(raw, 0.0)

    def test_single_observer_log_two(self):
        # only players 0 and 1, mutually visible; rho = 0.5 for player 0
        cfg = replace(
            OPEN, map_width=9, map_height=9, max_view_distance=8,
            team_view_distance=(8, 8, 8), team_counts=(1, 1, 0), hidden_roles="none",
        )
        s = build_state(cfg, [(1, 1, Team.RED), (4, 1, Team.GREEN)], general=(4, 4))
        table = {
            (0, 1): (np.array([0.25, 0.75, 0.0]), np.array([0.5, 0.5, 0.0])),
            (1, 0): (np.array([0.5, 0.5, 0.5]), np.array([0.5, 0.5, 0.0])),
        }
        raw = step_raw_bonus(s, self.constant_model(table), self._cfg(2), s.rng)
        # rho_0 = 0.25 / (0.25*0.5 + 0.75*0.5) = 0.5
        assert raw[0] == pytest.approx(math.log(2.0), abs=1e-12)
        assert raw[1] == pytest.approx(0.0, abs=1e-12)

    def test_dead_players_neither_give_nor_receive(self):
        s = full_view_state()
        s.players[2].alive = False
        s.players[2].health = 0
        table = {(i, j): (np.array([0.9, 0.1, 0.1]), UNIFORM)
                 for i in range(3) for j in range(3) if i != j}
        raw = step_raw_bonus(s, self.constant_model(table), self._cfg(), s.rng)
        assert raw[2] == 0.0
        # the two living players only see each other: one observer each
        assert raw[0] != 0.0 and raw[1] != 0.0

    def test_nonvisible_sampling_rates(self):
        cfg = replace(OPEN, team_counts=(1, 1, 0), hidden_roles="none")
        s = build_state(cfg, [(1, 1, Team.RED), (30, 30, Team.GREEN)], general=(15, 15))
        table = {(i, j): (np.array([0.9, 0.1, 0.1]), UNIFORM)
                 for i in range(2) for j in range(2) if i != j}
        never = step_raw_bonus(s, self.constant_model(table),
                               self._cfg(2, rate=0.0), s.rng)
        np.testing.assert_allclose(never, 0.0)
        always = step_raw_bonus(s, self.constant_model(table),
                                self._cfg(2, rate=1.0), s.rng)
        assert always[0] != 0.0 and always[1] != 0.0

    def test_sampling_frequency(self):
        cfg = replace(OPEN, team_counts=(1, 1, 0), hidden_roles="none")
        s = build_state(cfg, [(1, 1, Team.RED), (30, 30, Team.GREEN)], general=(15, 15))
        table = {(i, j): (np.array([0.9, 0.1, 0.1]), UNIFORM)
                 for i in range(2) for j in range(2) if i != j}
        bcfg = self._cfg(2, rate=0.1)
        hits = sum(
            step_raw_bonus(s, self.constant_model(table), bcfg, s.rng)[0] != 0.0
            for _ in range(5000)
        )
        assert abs(hits / 5000 - 0.1) <= 0.02

    def _cfg(self, n=3, rate=0.1):
        return BonusConfig(alpha=np.zeros(n), nonvisible_sample_rate=rate)


class TestTelescoping:
    def test_product_of_factors_equals_posterior_ratio(self):
        cfg = replace(
            OPEN, map_width=9, map_height=9, max_view_distance=8,
            team_view_distance=(8, 8, 8), team_counts=(1, 1, 1),
            hidden_roles="none", timeout=50,
        )
        kinds = {Team.RED: "wanderer", Team.GREEN: "stationary", Team.BLUE: "wanderer"}
        for seed in range(5):
            pset = RoleConditionedPolicySet.scripted(cfg, kinds=kinds, epsilon=0.3)
            state = init_game(cfg, seed)
            teams = [p.team for p in state.players]
            tracker = BeliefTracker(state, pset)
            priors = tracker.beliefs.copy()
            products = np.ones((3, 3))
            import rtg.engine as engine
            from rtg.observations import render_local
            from rtg.policies import sample

            instances = [pset.new_instance(p.team) for p in state.players]
            for _ in range(8):
                obs = [render_local(state, i) if p.alive else None
                       for i, p in enumerate(state.players)]
                actions = [
                    sample(instances[i].act(obs[i]), state.rng) if p.alive
                    else engine.Action.NOOP
                    for i, p in enumerate(state.players)
                ]
                likes = tracker.step_likelihoods(state, actions, obs)
                for i in range(3):
                    for j in range(3):
                        # only steps the observer actually witnessed count
                        if i != j and state.players[i].alive and state.players[j].alive:
                            products[j, i] *= bayes_factor(
                                likes[i], teams[i], tracker.beliefs[j, i])
                tracker.apply_step(state, likes)
                state, _ = engine.step(state, actions)
                if state.terminal is not None:
                    break
            for i in range(3):
                for j in range(3):
                    if i == j:
                        continue
                    ratio = tracker.beliefs[j, i][teams[i]] / priors[j, i][teams[i]]
                    assert products[j, i] == pytest.approx(ratio, rel=1e-9)


class TestPostprocess:
    def _cfg(self, **kw):
        return BonusConfig(alpha=np.array([0.5, 0.0, 0.0]), **kw)

    def test_clipping(self):
        teams = [Team.RED]
        norm = ReturnNormalizer()
        cfg = BonusConfig(alpha=np.array([0.5]))
        out = postprocess(np.array([25.0]), teams, 10 ** 8, norm, cfg)
        assert out[0] == pytest.approx(20.0)
        out = postprocess(np.array([-33.0]), teams, 10 ** 8, norm, cfg)
        assert out[0] == pytest.approx(-20.0)

    def test_warmup_values(self):
        assert warmup_scale(5_000_000) == pytest.approx(0.5)
        assert warmup_scale(10_000_000) == 1.0
        assert warmup_scale(25_000_000) == 1.0
        assert warmup_scale(0) == 0.0

    def test_non_red_zeroed(self):
        teams = [Team.RED, Team.GREEN, Team.BLUE]
        cfg = BonusConfig(alpha=np.zeros(3))
        out = postprocess(np.array([3.0, 3.0, 3.0]), teams, 10 ** 8,
                          ReturnNormalizer(), cfg)
        assert out[0] != 0.0 and out[1] == 0.0 and out[2] == 0.0

    def test_normalizer_scaling_example(self):
        # clipped bonus 3, return std 2, warm-up finished: r_int = 1.5
        norm = ReturnNormalizer(gamma=0.0)
        rng = np.random.default_rng(0)
        for _ in range(20000):
            norm.update([rng.normal(0.0, 2.0)], [True])
        assert norm.sigma == pytest.approx(2.0, rel=0.05)
        out = postprocess(np.array([3.0]), [Team.RED], 2 * 10 ** 7, norm,
                          BonusConfig(alpha=np.array([0.5])))
        assert out[0] == pytest.approx(3.0 / norm.sigma)

    @settings(max_examples=60, deadline=None)
    @given(a=st.floats(-19, 19), b=st.floats(-19, 19))
    def test_monotone_on_unclipped_range(self, a, b):
        cfg = BonusConfig(alpha=np.array([0.5]))
        norm = ReturnNormalizer()
        out_a = postprocess(np.array([a]), [Team.RED], 10 ** 8, norm, cfg)[0]
        out_b = postprocess(np.array([b]), [Team.RED], 10 ** 8, norm, cfg)[0]
        if a < b:
            assert out_a <= out_b


class TestCombine:
    def test_examples(self):
        assert combine(1.0, 2.0, 0.5) == pytest.approx(2.0)
        assert combine(7.0, 123.0, 0.0) == pytest.approx(7.0)
        assert combine(0.0, 3.25, 1.0) == pytest.approx(3.25)

    def test_bundle_invariant(self):
        bundle = RewardBundle.build(
            r_ext=[1.0, 2.0], raw_bonus=[4.0, -1.0], r_int=[0.5, -0.25],
            alpha=[0.5, 1.0],
        )
        np.testing.assert_allclose(bundle.r_total, bundle.r_ext + [0.5 * 0.5, -0.25])


class TestReturnNormalizer:
    def test_zero_stream_keeps_bootstrap_scale(self):
        norm = ReturnNormalizer()
        for _ in range(100):
            norm.update([0.0, 0.0], [False, False])
        assert norm.sigma == 1.0

    def test_determinism(self):
        rng = np.random.default_rng(5)
        stream = rng.normal(size=(500, 2))
        a, b = ReturnNormalizer(), ReturnNormalizer()
        for row in stream:
            a.update(row, [False, False])
            b.update(row, [False, False])
        assert (a.count, a.mean, a.m2) == (b.count, b.mean, b.m2)

    def test_reset_on_done(self):
        norm = ReturnNormalizer(gamma=1.0)
        norm.update([1.0], [True])
        norm.update([1.0], [False])
        assert norm.returns[0] == 1.0  # reset after the first episode ended

    def test_merge_equals_single_stream(self):
        # Parallel batches merge exactly when split on an episode boundary
        # (the running return resets there, so both sides push the same
        # return samples).
        rng = np.random.default_rng(11)
        stream = rng.normal(size=1000)
        cut = 400
        whole = ReturnNormalizer()
        for k, v in enumerate(stream):
            whole.update([v], [k == cut - 1])
        left, right = ReturnNormalizer(), ReturnNormalizer()
        for k, v in enumerate(stream[:cut]):
            left.update([v], [k == cut - 1])
        for v in stream[cut:]:
            right.update([v], [False])
        right.returns = {}
        left.merge(right)
        assert left.count == whole.count
        assert left.mean == pytest.approx(whole.mean, rel=1e-9)
        assert left.m2 == pytest.approx(whole.m2, rel=1e-9)

    def test_player_mask(self):
        norm = ReturnNormalizer()
        norm.update([5.0, 7.0], [False, False], players=[0])
        assert norm.count == 1


class TestExactModel:
    def test_exact_model_views_tracker(self):
        cfg = replace(
            OPEN, map_width=9, map_height=9, max_view_distance=8,
            team_view_distance=(8, 8, 8), team_counts=(1, 1, 1), hidden_roles="none",
        )
        kinds = {Team.RED: "wanderer", Team.GREEN: "wanderer", Team.BLUE: "wanderer"}
        pset = RoleConditionedPolicySet.scripted(cfg, kinds=kinds, epsilon=1.0)
        state = init_game(cfg, 0)
        tracker = BeliefTracker(state, pset)
        likes = np.full((3, 3), 1 / 9)
        model = ExactInverseModel(tracker, likes)
        got_likes, got_belief = model.estimate(1, 0)
        np.testing.assert_array_equal(got_likes, likes[1])
        np.testing.assert_array_equal(got_belief, tracker.beliefs[0, 1])
