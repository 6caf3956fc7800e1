"""Exact Bayesian role-belief tracking per (observer, subject) pair.

Each observer keeps an independent belief vector over the three roles for
every other player, seeded from population counts and updated by Bayes'
rule whenever the subject acts in view.  Likelihoods come from counterfactual
policy instances: for every living subject one instance per candidate role
is fed the subject's actual observation stream, so the likelihood of an
action under role z is exactly what the known role-z policy would have
assigned.

Self-beliefs are one-hot, as are beliefs about subjects whose role is
visible to the observer (red sees everyone under the default hidden-role
rule).  Dead subjects stop producing evidence and dead observers stop
updating; their last beliefs are retained.
"""

from __future__ import annotations

import math

import numpy as np

from .config import GameConfig, Team
from .engine import Action, GameState, legal_actions
from .observations import render_local, visible_players
from .policies import RoleConditionedPolicySet

N_ROLES = 3

BELIEF_ATOL = 1e-9


def roles_visible_to(config: GameConfig, observer_team: Team) -> bool:
    """Whether an observer of this team sees every player's true role."""
    if config.hidden_roles == "all":
        return True
    if config.hidden_roles == "none":
        return False
    return observer_team == Team.RED


def count_prior(config: GameConfig, teams, observer: int) -> np.ndarray:
    """Population-count priors: an (n, 3) row per subject for one observer.

    The observer knows its own role; other subjects get the remaining role
    counts normalized, except role-visible subjects which are one-hot on
    their true role.
    """
    n = len(teams)
    out = np.zeros((n, N_ROLES), dtype=np.float64)
    own = teams[observer]
    see_all = roles_visible_to(config, own)
    remaining = np.array(config.team_counts, dtype=np.float64)
    remaining[own] -= 1.0
    total = remaining.sum()
    for s in range(n):
        if s == observer or see_all:
            out[s, teams[s]] = 1.0
        else:
            out[s] = remaining / total
    return out


def bayes_update(prior: np.ndarray, likelihoods) -> np.ndarray:
    """posterior(z) = likelihood(z) * prior(z), renormalized."""
    post = np.asarray(likelihoods, dtype=np.float64) * prior
    total = post.sum()
    if total <= 0.0:
        raise ZeroDivisionError(
            "all-zero posterior: some policy lacks an epsilon floor"
        )
    return post / total


class BeliefTracker:
    """All (observer, subject) beliefs for one episode.

    ``observe_step`` must be called with the pre-step state, the joint action
    chosen in it, and (optionally) the observations each player acted from;
    omitted observations are re-rendered, which is exact because rendering is
    a pure function of the state.
    """

    def __init__(self, state: GameState, policy_set: RoleConditionedPolicySet,
                 record_log: bool = False):
        config = state.config
        self.config = config
        self.teams = tuple(p.team for p in state.players)
        self.n = len(self.teams)
        self.policy_set = policy_set
        self.beliefs = np.stack([count_prior(config, self.teams, o) for o in range(self.n)])
        self._actions = legal_actions(config)
        self._action_index = {a: i for i, a in enumerate(self._actions)}
        self._roles = policy_set.roles()
        self._counterfactual = [
            {z: policy_set.new_instance(z) for z in self._roles} for _ in range(self.n)
        ]
        self.update_log: list[tuple] | None = [] if record_log else None

    def step_likelihoods(self, state: GameState, joint_action,
                         observations=None) -> np.ndarray:
        """(n, 3) action likelihoods under each role; advances counterfactuals.

        Rows for dead players are all ones and must not be used as evidence.
        """
        likes = np.ones((self.n, N_ROLES), dtype=np.float64)
        for s, player in enumerate(state.players):
            if not player.alive:
                continue
            obs = observations[s] if observations is not None else None
            if obs is None:
                obs = render_local(state, s)
            a_idx = self._action_index[Action(joint_action[s])]
            for z in self._roles:
                dist = self._counterfactual[s][z].act(obs)
                likes[s, z] = float(dist[a_idx])
        return likes

    def apply_step(self, state: GameState, likelihoods: np.ndarray) -> None:
        """Bayes-update every living observer on every living visible subject."""
        for o, observer in enumerate(state.players):
            if not observer.alive:
                continue
            for s in sorted(visible_players(state, o)):
                if s == o or not state.players[s].alive:
                    continue
                self.beliefs[o, s] = bayes_update(self.beliefs[o, s], likelihoods[s])
                if self.update_log is not None:
                    self.update_log.append((state.t, o, s, tuple(self.beliefs[o, s])))

    def observe_step(self, state: GameState, joint_action, observations=None) -> None:
        self.apply_step(state, self.step_likelihoods(state, joint_action, observations))

    def belief(self, observer: int, subject: int) -> np.ndarray:
        return self.beliefs[observer, subject].copy()

    def true_role_metric(self, state: GameState) -> float:
        """Geometric mean of the probability assigned to true roles.

        Pairs run over living observers and all subjects, self included
        (self pairs contribute probability one).
        """
        total = 0.0
        pairs = 0
        for o, observer in enumerate(state.players):
            if not observer.alive:
                continue
            for s in range(self.n):
                total += math.log(max(self.beliefs[o, s][self.teams[s]], 1e-300))
                pairs += 1
        if pairs == 0:
            return float("nan")
        return math.exp(total / pairs)

    def team_true_role_metric(self, state: GameState) -> dict[Team, float]:
        """The same geometric mean, restricted to observers of each team."""
        sums = {t: 0.0 for t in Team}
        counts = {t: 0 for t in Team}
        for o, observer in enumerate(state.players):
            if not observer.alive:
                continue
            t = observer.team
            for s in range(self.n):
                sums[t] += math.log(max(self.beliefs[o, s][self.teams[s]], 1e-300))
                counts[t] += 1
        return {
            t: math.exp(sums[t] / counts[t]) if counts[t] else float("nan")
            for t in Team
        }
