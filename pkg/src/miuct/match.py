"""Engine-vs-engine matches with alternating colours.

Game ``g`` of a match is seeded with ``mix64(base_seed, g)`` (splitmix64
finalizer folding, see ``rng.mix64``).  Inside a game each colour's engine
draws from its own stream ``make_stream(game_seed, colour)``, so a game's
transcript depends only on its seed and the two engine configurations,
never on which worker played it or in what order.
"""

from __future__ import annotations

import csv
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import kernels as K
from .games import color_name, format_move, new_game
from .rng import make_stream, mix64
from .search import Engine, EngineConfig

Z95 = 1.959963984540054


class EngineError(RuntimeError):
    """An engine produced an illegal move."""


@dataclass(frozen=True)
class MatchConfig:
    game: str
    engine_a: EngineConfig
    engine_b: EngineConfig
    num_games: int = 1000
    base_seed: int = 0
    parallel: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        if self.game not in ("go9", "nogo9"):
            raise ValueError(f"unknown game {self.game!r}")
        if self.num_games < 1:
            raise ValueError("num_games must be >= 1")
        if self.parallel < 1:
            raise ValueError("parallel must be >= 1")


@dataclass
class MatchRecord:
    game_index: int
    black_player: str
    winner: str
    move_count: int
    game_seed: int
    moves: list = field(default_factory=list, repr=False, compare=False)
    playouts: dict = field(default_factory=dict, repr=False, compare=False)


@dataclass
class MatchSummary:
    wins_a: int
    games: int
    win_rate_a: float
    wilson_low: float
    wilson_high: float


@dataclass
class GameResult:
    winner: int
    moves: list
    playouts_per_move: dict


def wilson_interval(wins: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("no games")
    p = wins / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def run_game(game: str, black: EngineConfig, white: EngineConfig, seed: int) -> GameResult:
    state = new_game(game)
    engines = {K.BLACK: Engine(black, make_stream(seed, K.BLACK)),
               K.WHITE: Engine(white, make_stream(seed, K.WHITE))}
    moves = []
    while not state.is_terminal():
        engine = engines[state.to_move]
        move = engine.best_move(state)
        if not state.is_legal(move):
            raise EngineError(
                f"{engine.config.label} playing {color_name(state.to_move)} chose illegal move "
                f"{format_move(move)} at move {state.move_count + 1}\n{state.diagram()}")
        state = state.play(move)
        moves.append(move)
    return GameResult(state.winner(), moves,
                      {c: e.iterations_per_move for c, e in engines.items()})


def _play_match_game(config: MatchConfig, g: int) -> MatchRecord:
    seed = mix64(config.base_seed, g)
    a_black = g % 2 == 0
    black, white = (config.engine_a, config.engine_b) if a_black else (config.engine_b, config.engine_a)
    try:
        res = run_game(config.game, black, white, seed)
    except EngineError as exc:
        raise EngineError(f"game {g}: {exc}") from exc
    black_label = "A" if a_black else "B"
    white_label = "B" if a_black else "A"
    winner = black_label if res.winner == K.BLACK else white_label
    return MatchRecord(g, black_label, winner, len(res.moves), seed, res.moves,
                       {black_label: res.playouts_per_move[K.BLACK],
                        white_label: res.playouts_per_move[K.WHITE]})


def summarize(records: list[MatchRecord]) -> MatchSummary:
    if not records:
        raise ValueError("no games were played")
    wins = sum(r.winner == "A" for r in records)
    lo, hi = wilson_interval(wins, len(records))
    return MatchSummary(wins, len(records), wins / len(records), lo, hi)


def run_match(config: MatchConfig, progress=None) -> tuple[list[MatchRecord], MatchSummary]:
    """Play the whole match; records come back sorted by game index."""
    indices = range(config.num_games)
    records = []
    if config.parallel > 1:
        with ProcessPoolExecutor(config.parallel) as pool:
            for rec in pool.map(_play_match_game, [config] * config.num_games, indices):
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for g in indices:
            rec = _play_match_game(config, g)
            records.append(rec)
            if progress:
                progress(rec)
    records.sort(key=lambda r: r.game_index)
    return records, summarize(records)


def emit_match(records: list[MatchRecord], summary: MatchSummary, path) -> None:
    if not records:
        raise ValueError("refusing to write an empty match")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["game", "black", "winner", "moves", "seed"])
            for r in records:
                w.writerow([r.game_index, r.black_player, r.winner, r.move_count, r.game_seed])
            fh.write(f"# win_rate_a={summary.win_rate_a:.4f} n={summary.games} "
                     f"wilson95=[{summary.wilson_low:.4f},{summary.wilson_high:.4f}]\n")
    except OSError as exc:
        raise OSError(f"cannot write match results to {path}: {exc}") from exc


_SUMMARY = re.compile(r"# win_rate_a=([0-9.]+) n=(\d+) wilson95=\[([0-9.]+),([0-9.]+)\]")


def read_match(path) -> tuple[list[MatchRecord], MatchSummary]:
    lines = Path(path).read_text().splitlines()
    body = [ln for ln in lines if not ln.startswith("#")]
    records = [MatchRecord(int(r["game"]), r["black"], r["winner"], int(r["moves"]), int(r["seed"]))
               for r in csv.DictReader(body)]
    m = next(_SUMMARY.match(ln) for ln in lines if ln.startswith("#"))
    n = int(m.group(2))
    rate = float(m.group(1))
    summary = MatchSummary(round(rate * n), n, rate, float(m.group(3)), float(m.group(4)))
    return records, summary
