"""Game configuration: option surface, validation, scenarios, serialization.

The external format is a flat UTF-8 JSON object whose keys are exactly the
snake_case option names below.  Length-3 tuples are encoded as JSON arrays,
``points_for_kill`` as a 3x3 array.  ``canonical_serialize`` produces a
key-sorted, byte-stable document so equal configs serialize identically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import Enum, IntEnum

from .errors import ConfigError, UnknownKeyError, UnsupportedFeatureError


class Team(IntEnum):
    RED = 0
    GREEN = 1
    BLUE = 2


TEAMS = (Team.RED, Team.GREEN, Team.BLUE)
TEAM_NAMES = ("red", "green", "blue")

HIDDEN_ROLES_MODES = ("default", "all", "none")
STARTING_LOCATIONS_MODES = ("random", "together")
GENERAL_INDICATOR_MODES = ("direction", "distance")


class Scenario(Enum):
    """The six built-in scenarios."""

    RESCUE = "rescue"
    WOLF = "wolf"
    R2G2 = "r2g2"
    RED2 = "red2"
    GREEN2 = "green2"
    BLUE2 = "blue2"

    @classmethod
    def parse(cls, name: str) -> "Scenario":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ConfigError(f"unknown scenario {name!r}; valid names: {valid}") from None


Triple = tuple[float, float, float]
IntTriple = tuple[int, int, int]


@dataclass(frozen=True)
class GameConfig:
    """Every tunable rule of the game, immutable once validated.

    Defaults describe the standard rescue setup: a 32x32 map, ten trees,
    six players split 1-1-4 across red/green/blue, hidden roles that only
    red can see, and a 500 step limit.
    """

    map_width: int = 32
    map_height: int = 32
    n_trees: int = 10
    reward_per_tree: float = 1.0
    max_view_distance: int = 6
    team_view_distance: IntTriple = (6, 5, 5)
    team_shoot_damage: IntTriple = (10, 10, 10)
    team_general_view_distance: IntTriple = (3, 5, 5)
    team_shoot_range: IntTriple = (5, 5, 5)
    team_counts: IntTriple = (1, 1, 4)
    team_shoot_timeout: IntTriple = (10, 10, 10)
    enable_voting: bool = False
    voting_button: bool = False
    auto_shooting: bool = False
    zero_sum: bool = False
    timeout: int = 500
    general_initial_health: int = 1
    player_initial_health: int = 10
    battle_royale: bool = False
    help_distance: int = 2
    starting_locations: str = "together"
    local_team_colors: bool = True
    initial_random_kills: float = 0.5
    blue_general_indicator: str = "direction"
    players_to_move_general: int = 2
    timeout_penalty: Triple = (5.0, 0.0, -5.0)
    points_for_kill: tuple[Triple, Triple, Triple] = (
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
        (0.0, 0.0, 0.0),
    )
    hidden_roles: str = "default"
    reveal_team_on_death: bool = False

    @property
    def n_players(self) -> int:
        return sum(self.team_counts)

    @property
    def n_actions(self) -> int:
        """Size of the per-player action set (6 with auto shooting, else 9)."""
        return 6 if self.auto_shooting else 9

    def validate(self) -> "GameConfig":
        """Check every invariant, raising ConfigError naming the bad field."""
        if self.enable_voting or self.voting_button:
            raise UnsupportedFeatureError(
                "enable_voting/voting_button: the voting system is not supported"
            )
        for name in ("map_width", "map_height"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 5:
                raise ConfigError(f"{name}: must be an integer >= 5, got {v!r}")
        _require_nonneg_int(self, "n_trees")
        _require_nonneg_int(self, "max_view_distance")
        if self.max_view_distance < 3:
            # The status row needs seven cells, i.e. a window at least 7 tiles wide.
            raise ConfigError(
                f"max_view_distance: must be >= 3, got {self.max_view_distance!r}"
            )
        _require_nonneg_int(self, "help_distance")
        for name in ("timeout", "general_initial_health", "player_initial_health",
                     "players_to_move_general"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name}: must be an integer >= 1, got {v!r}")
        if not isinstance(self.reward_per_tree, (int, float)) or self.reward_per_tree < 0:
            raise ConfigError(f"reward_per_tree: must be >= 0, got {self.reward_per_tree!r}")
        for name in ("team_view_distance", "team_shoot_damage", "team_general_view_distance",
                     "team_shoot_range", "team_counts", "team_shoot_timeout"):
            v = getattr(self, name)
            if len(v) != 3 or any((not isinstance(x, int)) or x < 0 for x in v):
                raise ConfigError(f"{name}: must be three nonnegative integers, got {v!r}")
        if any(d > self.max_view_distance for d in self.team_view_distance):
            raise ConfigError(
                f"team_view_distance: entries must not exceed max_view_distance "
                f"({self.max_view_distance}), got {self.team_view_distance!r}"
            )
        if not any(self.team_counts):
            raise ConfigError("team_counts: at least one team must have players")
        if not (0.0 <= self.initial_random_kills <= 1.0):
            raise ConfigError(
                f"initial_random_kills: must be in [0, 1], got {self.initial_random_kills!r}"
            )
        if self.starting_locations not in STARTING_LOCATIONS_MODES:
            raise ConfigError(
                f"starting_locations: must be one of {STARTING_LOCATIONS_MODES}, "
                f"got {self.starting_locations!r}"
            )
        if self.blue_general_indicator not in GENERAL_INDICATOR_MODES:
            raise ConfigError(
                f"blue_general_indicator: must be one of {GENERAL_INDICATOR_MODES}, "
                f"got {self.blue_general_indicator!r}"
            )
        if self.hidden_roles not in HIDDEN_ROLES_MODES:
            raise ConfigError(
                f"hidden_roles: must be one of {HIDDEN_ROLES_MODES}, got {self.hidden_roles!r}"
            )
        if len(self.timeout_penalty) != 3:
            raise ConfigError(f"timeout_penalty: must have three entries, got {self.timeout_penalty!r}")
        pfk = self.points_for_kill
        if len(pfk) != 3 or any(len(row) != 3 for row in pfk):
            raise ConfigError(f"points_for_kill: must be a 3x3 matrix, got {pfk!r}")
        for name in ("enable_voting", "voting_button", "auto_shooting", "zero_sum",
                     "battle_royale", "local_team_colors", "reveal_team_on_death"):
            if not isinstance(getattr(self, name), bool):
                raise ConfigError(f"{name}: must be a boolean")
        return self


def _require_nonneg_int(cfg: GameConfig, name: str) -> None:
    v = getattr(cfg, name)
    if not isinstance(v, int) or isinstance(v, bool) or v < 0:
        raise ConfigError(f"{name}: must be a nonnegative integer, got {v!r}")


_FIELD_NAMES = tuple(f.name for f in fields(GameConfig))

_INT_TRIPLES = ("team_view_distance", "team_shoot_damage", "team_general_view_distance",
                "team_shoot_range", "team_counts", "team_shoot_timeout")


def _coerce(name: str, value):
    """Convert JSON values to the field's internal representation."""
    if name in _INT_TRIPLES:
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(f"{name}: expected an array of three integers, got {value!r}")
        return tuple(int(x) if isinstance(x, int) and not isinstance(x, bool) else x
                     for x in value)
    if name == "timeout_penalty":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(f"{name}: expected an array of three numbers, got {value!r}")
        return tuple(float(x) for x in value)
    if name == "points_for_kill":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ConfigError(f"{name}: expected a 3x3 array, got {value!r}")
        rows = []
        for row in value:
            if not isinstance(row, (list, tuple)) or len(row) != 3:
                raise ConfigError(f"{name}: expected a 3x3 array, got {value!r}")
            rows.append(tuple(float(x) for x in row))
        return tuple(rows)
    if name in ("reward_per_tree", "initial_random_kills"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    return value


def load_config(text: str) -> GameConfig:
    """Parse a JSON config document, fill defaults, and validate.

    Raises ConfigError with the parse position on syntax errors, names any
    unknown keys, and rejects documents that enable voting.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"top-level value must be a JSON object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(_FIELD_NAMES))
    if unknown:
        raise UnknownKeyError(f"unknown configuration key(s): {', '.join(unknown)}")
    kwargs = {name: _coerce(name, value) for name, value in doc.items()}
    return GameConfig(**kwargs).validate()


def canonical_serialize(config: GameConfig) -> str:
    """Key-sorted compact JSON; equal configs always produce identical bytes."""
    doc = {}
    for f in fields(GameConfig):
        v = getattr(config, f.name)
        if isinstance(v, tuple):
            v = [list(row) if isinstance(row, tuple) else row for row in v]
        doc[f.name] = v
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def builtin_scenario(name: Scenario | str) -> GameConfig:
    """The canonical config for one of the six built-in scenarios."""
    if isinstance(name, str):
        name = Scenario.parse(name)
    base = GameConfig()
    if name is Scenario.RESCUE:
        cfg = replace(base, team_counts=(1, 1, 4), hidden_roles="default")
    elif name is Scenario.WOLF:
        cfg = replace(base, team_counts=(1, 3, 0), battle_royale=True, hidden_roles="default")
    elif name is Scenario.R2G2:
        cfg = replace(base, team_counts=(2, 2, 0), hidden_roles="all")
    elif name is Scenario.RED2:
        cfg = replace(base, team_counts=(2, 0, 0), hidden_roles="all")
    elif name is Scenario.GREEN2:
        cfg = replace(base, team_counts=(0, 2, 0), hidden_roles="all")
    else:
        cfg = replace(base, team_counts=(0, 0, 2), hidden_roles="all")
    return cfg.validate()


def apply_overrides(config: GameConfig, overrides: dict[str, object]) -> GameConfig:
    """Apply ``key=value`` overrides (already JSON-decoded) on top of a config."""
    unknown = sorted(set(overrides) - set(_FIELD_NAMES))
    if unknown:
        raise UnknownKeyError(f"unknown configuration key(s): {', '.join(unknown)}")
    kwargs = {name: _coerce(name, value) for name, value in overrides.items()}
    return replace(config, **kwargs).validate()
