"""Command line entry point: ``miuct bandit ...`` and ``miuct match ...``.

Exit status: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .bandits import VARIANTS, variant
from .match import MatchConfig, emit_match, run_match
from .search import EngineConfig
from .testbed import TestbedConfig, emit_curves, run_testbed

log = logging.getLogger("miuct")


def parse_engine(text: str, playouts: int) -> EngineConfig:
    """``uct:C=<real>``, ``miuct`` or ``miuct:ref=best``."""
    kind, _, opts = text.partition(":")
    params = {}
    for item in filter(None, opts.split(",")):
        key, eq, value = item.partition("=")
        if not eq:
            raise argparse.ArgumentTypeError(f"bad engine option {item!r} in {text!r}")
        params[key.strip()] = value.strip()
    try:
        if kind == "uct":
            c = float(params.pop("C"))
            if params:
                raise KeyError(next(iter(params)))
            return EngineConfig("uct", exploration_c=c, playouts_per_move=playouts)
        if kind == "miuct":
            ref = params.pop("ref", "node")
            if params:
                raise KeyError(next(iter(params)))
            return EngineConfig("miuct", playouts_per_move=playouts, elimination_reference=ref)
    except (KeyError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"bad engine spec {text!r}: {exc}") from None
    raise argparse.ArgumentTypeError(f"unknown engine {text!r} (use uct:C=<real> or miuct)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miuct", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bandit", help="Gaussian K-armed bandit testbed")
    b.add_argument("--policy", action="append", choices=list(VARIANTS), required=True)
    b.add_argument("--arms", type=int, default=60)
    b.add_argument("--tasks", type=int, default=2000)
    b.add_argument("--horizon", type=int, default=5000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--parallel", type=int, default=1)
    b.add_argument("--regret", choices=["pseudo", "received"], default="pseudo")

    m = sub.add_parser("match", help="engine-vs-engine match")
    m.add_argument("--game", choices=["go9", "nogo9"], required=True)
    m.add_argument("--engine-a", required=True)
    m.add_argument("--engine-b", required=True)
    m.add_argument("--playouts", type=int, default=1000)
    m.add_argument("--games", type=int, default=1000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.add_argument("--parallel", type=int, default=1)
    return parser


def parse_cli(argv=None):
    """Parse ``argv`` into a TestbedConfig or MatchConfig.  Usage errors exit with status 2."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bandit":
            config = TestbedConfig([variant(p, args.horizon) for p in args.policy],
                                   num_tasks=args.tasks, n_arms=args.arms, horizon=args.horizon,
                                   seed=args.seed, regret=args.regret, parallel=args.parallel,
                                   names=list(args.policy))
        else:
            config = MatchConfig(args.game, parse_engine(args.engine_a, args.playouts),
                                 parse_engine(args.engine_b, args.playouts),
                                 num_games=args.games, base_seed=args.seed,
                                 parallel=args.parallel, out=args.out)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        parser.error(str(exc))
    return args, config


def main(argv=None) -> int:
    args, config = parse_cli(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    start = time.time()
    try:
        if isinstance(config, TestbedConfig):
            curves = run_testbed(config)
            emit_curves(curves, args.out)
            for name, c in curves.items():
                print(f"{name:14s} cum_regret={c.cum_regret[-1]:.2f} optimal_pct={c.optimal_pct[-1]:.2f}")
        else:
            def progress(rec):
                log.info("game %d: black=%s winner=%s moves=%d", rec.game_index,
                         rec.black_player, rec.winner, rec.move_count)

            records, summary = run_match(config, progress)
            emit_match(records, summary, args.out)
            print(f"A={config.engine_a.label} B={config.engine_b.label} "
                  f"win_rate_a={summary.win_rate_a:.4f} n={summary.games} "
                  f"wilson95=[{summary.wilson_low:.4f},{summary.wilson_high:.4f}]")
    except Exception as exc:  # runtime failure, not a usage error
        print(f"miuct: error: {exc}", file=sys.stderr)
        return 1
    log.info("done in %.1fs", time.time() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
