"""Command-line interface.

Subcommands: play, eval, render, bench, config.  Exit codes: 0 success,
1 usage error, 2 configuration/validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .config import GameConfig, Team, apply_overrides, builtin_scenario, canonical_serialize, load_config
from .deception import BonusConfig
from .errors import ConfigError, RTGError
from .harness import (
    bench,
    render_replay,
    run_episode,
    run_eval,
    write_belief_csv,
    write_bonus_csv,
    write_eval_csv,
    write_games_csv,
)
from .policies import DEFAULT_KINDS, make_scripted, parse_policy_spec
from .replay import load_replay, save_replay


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", help="built-in scenario name (rescue, wolf, r2g2, red2, green2, blue2)")
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one option after loading (repeatable)")


def _build_config(args) -> GameConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = load_config(fh.read())
    elif args.scenario:
        cfg = builtin_scenario(args.scenario)
    else:
        cfg = builtin_scenario("rescue")
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key.strip()] = value
    return apply_overrides(cfg, overrides) if overrides else cfg


def _team_factories(config: GameConfig, args) -> dict:
    factories = {}
    for team, flag in ((Team.RED, args.red), (Team.GREEN, args.green), (Team.BLUE, args.blue)):
        if config.team_counts[team] == 0:
            continue
        spec = flag if flag else DEFAULT_KINDS[team] + ":0.05"
        kind, eps = parse_policy_spec(spec)
        factories[team] = make_scripted(config, team, kind, eps)
    return factories


def _team_pools(config: GameConfig, args) -> dict:
    pools = {}
    for team, flag in ((Team.RED, args.red), (Team.GREEN, args.green), (Team.BLUE, args.blue)):
        if config.team_counts[team] == 0:
            continue
        specs = (flag or DEFAULT_KINDS[team] + ":0.05").split(",")
        pool = []
        for spec in specs:
            kind, eps = parse_policy_spec(spec)
            pool.append(make_scripted(config, team, kind, eps))
        pools[team] = pool
    return pools


def _bonus_factory(args):
    alpha = getattr(args, "alpha_red", None)
    wants_bonus = alpha is not None or getattr(args, "csv", None) or getattr(args, "plot", None)
    if not wants_bonus:
        return None
    alpha = alpha if alpha is not None else 0.0
    return lambda teams: BonusConfig.for_teams(teams, alpha_red=alpha)


def _cmd_play(args) -> int:
    config = _build_config(args)
    factories = _team_factories(config, args)
    record_beliefs = bool(args.beliefs_csv or args.plot or args.verbose)
    record = run_episode(
        config, factories, args.seed,
        bonus_config=_bonus_factory(args),
        interactions_start=args.interactions_start,
        record_beliefs=record_beliefs,
    )
    print(f"outcome: {record.outcome.value} after {record.length} steps")
    for t in Team:
        print(f"{t.name.lower():>6} score: {record.team_scores[t]:.3f}")
    if record.belief_metric:
        print(f"final role prediction (all observers): {record.belief_metric[-1]:.3f}")
    if args.replay:
        save_replay(record.replay, args.replay)
        print(f"replay written to {args.replay}")
    if args.csv:
        write_bonus_csv(record, args.csv)
        print(f"bonus log written to {args.csv}")
    if args.beliefs_csv:
        write_belief_csv(record, args.beliefs_csv)
        print(f"belief trajectories written to {args.beliefs_csv}")
    if args.plot:
        from .plots import save_episode_figures

        for path in save_episode_figures(record, args.plot):
            print(f"figure written to {path}")
    return 0


def _cmd_eval(args) -> int:
    config = _build_config(args)
    pools = _team_pools(config, args)
    report = run_eval(
        config, pools, args.games, args.seed,
        bonus_config=_bonus_factory(args),
        record_beliefs=not args.no_beliefs,
    )
    for line in report.summary_lines():
        print(line)
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        write_eval_csv(report, os.path.join(args.out_dir, "report.csv"))
        write_games_csv(report, os.path.join(args.out_dir, "games.csv"))
        from .plots import save_eval_figures

        paths = save_eval_figures(report, args.out_dir)
        print(f"report written to {args.out_dir} ({len(paths) + 2} files)")
    return 0


def _cmd_render(args) -> int:
    replay = load_replay(args.replay, __version__)
    paths = render_replay(replay, args.out)
    print(f"{len(paths)} frames written to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    config = _build_config(args)
    report = bench(config, args.steps, workers=args.workers)
    print(f"{report.steps} steps in {report.seconds:.3f}s "
          f"({report.steps_per_second:,.0f} steps/s, {report.workers} worker(s))")
    return 0


def _cmd_config(args) -> int:
    config = _build_config(args)
    if args.action == "print":
        print(canonical_serialize(config))
    else:
        print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rtg", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rtg {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("play", help="run one episode", parents=[])
    _add_config_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--red", help="red policy, e.g. hunter:0.05")
    p.add_argument("--green", help="green policy, e.g. harvester:0.05")
    p.add_argument("--blue", help="blue policy, e.g. rescuer:0.05")
    p.add_argument("--alpha-red", type=float, default=None,
                   help="deception bonus magnitude for red players")
    p.add_argument("--interactions-start", type=int, default=0,
                   help="warm-up counter offset in agent interactions")
    p.add_argument("--replay", help="write a .rtgr replay here")
    p.add_argument("--csv", help="write the per-step bonus log here")
    p.add_argument("--beliefs-csv", help="write belief trajectories here")
    p.add_argument("--plot", metavar="PREFIX", help="write PNG figures with this path prefix")
    p.add_argument("--verbose", action="store_true", help="track beliefs even without output files")
    p.set_defaults(fn=_cmd_play)

    p = sub.add_parser("eval", help="round-robin tournament with confidence intervals")
    _add_config_args(p)
    p.add_argument("--games", type=int, default=16, help="games per pool pairing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--red", help="comma-separated red pool, e.g. hunter:0.05,wanderer")
    p.add_argument("--green", help="comma-separated green pool")
    p.add_argument("--blue", help="comma-separated blue pool")
    p.add_argument("--alpha-red", type=float, default=None)
    p.add_argument("--no-beliefs", action="store_true", help="skip belief tracking (faster)")
    p.add_argument("--out-dir", help="write report.csv, games.csv and figures here")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("render", help="re-simulate a replay into PPM frames")
    p.add_argument("--replay", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_render)

    p = sub.add_parser("bench", help="measure engine+render throughput")
    _add_config_args(p)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_bench)

    p = sub.add_parser("config", help="validate or print a configuration")
    p.add_argument("action", choices=("validate", "print"))
    _add_config_args(p)
    p.set_defaults(fn=_cmd_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RTGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
