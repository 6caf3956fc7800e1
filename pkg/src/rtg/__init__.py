"""Rescue the General: a deterministic hidden-role gridworld.

Three teams share a map: blue must drag a general to the edge, red must
find and kill it, green harvests trees.  Nobody can see anyone else's team,
so identities have to be inferred from behavior, and the package ships an
exact Bayesian belief tracker plus an intrinsic "deception bonus" that pays
players for actions that push observers' beliefs away from their true role.
"""

__version__ = "0.1.0"

from .config import (  # noqa: E402,F401
    GameConfig,
    Scenario,
    Team,
    builtin_scenario,
    canonical_serialize,
    load_config,
)
from .engine import (  # noqa: E402,F401
    Action,
    GameState,
    Outcome,
    Player,
    StepResult,
    init_game,
    legal_actions,
    resolve_drag,
    resolve_shot,
    step,
)
from .observations import (  # noqa: E402,F401
    observation_shape,
    render_global,
    render_local,
    visible_players,
)
from .policies import (  # noqa: E402,F401
    RoleConditionedPolicySet,
    make_scripted,
    sample,
)
from .beliefs import BeliefTracker, bayes_update, count_prior  # noqa: E402,F401
from .deception import (  # noqa: E402,F401
    BonusConfig,
    ReturnNormalizer,
    RewardBundle,
    bayes_factor,
    combine,
    deception_bonus,
    postprocess,
    step_raw_bonus,
    warmup_scale,
)
from .replay import Replay, load_replay, read_replay, save_replay, write_replay  # noqa: E402,F401
from .harness import (  # noqa: E402,F401
    EpisodeRecord,
    EvalReport,
    bench,
    render_replay,
    run_episode,
    run_eval,
)
