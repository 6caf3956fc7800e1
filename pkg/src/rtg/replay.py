"""Binary replay files: seed + config + actions, enough to re-simulate.

Layout of a ``.rtgr`` blob (all integers little-endian):

    magic "RTGR" | u16 format version | u8 len + engine version ascii |
    u32 len + canonical config JSON | u64 seed | u8 outcome code |
    3 x f64 final team scores | u32 step count | u8 players per step |
    one action byte per (step, player), step-major | u32 CRC32

The CRC covers everything before it.  The recorded outcome and scores let a
reader sanity-check a re-simulation without trusting the engine build that
produced the file; ``resimulate`` raises if they diverge.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .config import GameConfig, canonical_serialize, load_config
from .engine import Action, GameState, Outcome, StepResult, init_game, step
from .errors import ChecksumError, ReplayFormatError, ResimulationError, VersionMismatchError

MAGIC = b"RTGR"
FORMAT_VERSION = 1

_OUTCOME_CODES = {o: i for i, o in enumerate(Outcome)}
_OUTCOMES_BY_CODE = {i: o for o, i in _OUTCOME_CODES.items()}


@dataclass(frozen=True)
class Replay:
    format_version: int
    engine_version: str
    config: GameConfig
    seed: int
    actions: tuple[tuple[int, ...], ...]  # [step][player]
    outcome: Outcome
    team_scores: tuple[float, float, float]

    @property
    def n_steps(self) -> int:
        return len(self.actions)


def write_replay(replay: Replay) -> bytes:
    if not (0 <= replay.seed < 2 ** 64):
        raise ReplayFormatError(f"seed must fit in 64 unsigned bits, got {replay.seed}")
    engine = replay.engine_version.encode("ascii")
    config = canonical_serialize(replay.config).encode("utf-8")
    n_players = len(replay.actions[0]) if replay.actions else replay.config.n_players
    parts = [
        MAGIC,
        struct.pack("<H", replay.format_version),
        struct.pack("<B", len(engine)), engine,
        struct.pack("<I", len(config)), config,
        struct.pack("<Q", replay.seed),
        struct.pack("<B", _OUTCOME_CODES[replay.outcome]),
        struct.pack("<3d", *replay.team_scores),
        struct.pack("<I", len(replay.actions)),
        struct.pack("<B", n_players),
        bytes(a for row in replay.actions for a in row),
    ]
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def read_replay(data: bytes, engine_version: str) -> Replay:
    """Parse and verify a replay blob.

    Rejects wrong magic, unsupported format versions, engine version skew
    (bit-exact re-simulation is only guaranteed by the exact same engine),
    CRC mismatches, and truncation.
    """
    if len(data) < 10 or data[:4] != MAGIC:
        raise ReplayFormatError("not a replay file (bad magic)")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise ChecksumError("replay CRC32 mismatch: file corrupted")
    view = memoryview(data[:-4])
    off = 4

    def take(n: int) -> memoryview:
        nonlocal off
        if off + n > len(view):
            raise ReplayFormatError("replay truncated")
        chunk = view[off:off + n]
        off += n
        return chunk

    fmt = struct.unpack("<H", take(2))[0]
    if fmt != FORMAT_VERSION:
        raise VersionMismatchError(
            f"replay format version {fmt}, this build reads version {FORMAT_VERSION}"
        )
    engine = bytes(take(struct.unpack("<B", take(1))[0])).decode("ascii")
    if engine != engine_version:
        raise VersionMismatchError(
            f"replay from engine {engine}, this build is engine {engine_version}"
        )
    config = load_config(bytes(take(struct.unpack("<I", take(4))[0])).decode("utf-8"))
    seed = struct.unpack("<Q", take(8))[0]
    outcome_code = struct.unpack("<B", take(1))[0]
    if outcome_code not in _OUTCOMES_BY_CODE:
        raise ReplayFormatError(f"unknown outcome code {outcome_code}")
    scores = struct.unpack("<3d", take(24))
    n_steps = struct.unpack("<I", take(4))[0]
    n_players = struct.unpack("<B", take(1))[0]
    flat = bytes(take(n_steps * n_players))
    if off != len(view):
        raise ReplayFormatError("trailing bytes after action table")
    actions = tuple(
        tuple(flat[s * n_players:(s + 1) * n_players]) for s in range(n_steps)
    )
    return Replay(
        format_version=fmt, engine_version=engine, config=config, seed=seed,
        actions=actions, outcome=_OUTCOMES_BY_CODE[outcome_code], team_scores=scores,
    )


def save_replay(replay: Replay, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_replay(replay))


def load_replay(path, engine_version: str) -> Replay:
    with open(path, "rb") as fh:
        return read_replay(fh.read(), engine_version)


def resimulate(replay: Replay, on_state=None) -> tuple[Outcome, tuple[float, float, float]]:
    """Re-run the recorded actions and verify outcome and scores match.

    ``on_state(state)`` is invoked on the initial state and after every step
    (episode length + 1 calls in total).
    """
    state = init_game(replay.config, replay.seed)
    if on_state is not None:
        on_state(state)
    result: StepResult | None = None
    for row in replay.actions:
        state, result = step(state, [Action(a) for a in row])
        if on_state is not None:
            on_state(state)
    if result is None or result.outcome is None:
        raise ResimulationError("replay ended with no terminal outcome")
    scores = tuple(state.team_cumulative_reward)
    if result.outcome != replay.outcome or any(
        abs(a - b) > 0 for a, b in zip(scores, replay.team_scores)
    ):
        raise ResimulationError(
            f"re-simulation diverged: got ({result.outcome.value}, {scores}), "
            f"recorded ({replay.outcome.value}, {replay.team_scores}); "
            "engine/replay version skew?"
        )
    return result.outcome, scores
