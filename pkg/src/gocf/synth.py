"""Seeded synthetic corpora for verification and benchmarks.

Games are legal playouts that share opening lines from a small pool, so the
novelty scan sees realistic prefix reuse: most games deviate from their line
at a random depth, and a few copy a line wholesale (no novel move at all).
"""

from __future__ import annotations

import datetime as _dt
import random
from pathlib import Path

import numpy as np

from . import board as go
from .novelty import N_TOKEN_VALUES
from .record import GameDate, GameRecord, Move
from .sgf import record_content_id, serialize_record


def _random_playout(rng: random.Random, board: go.Board, n_moves: int,
                    moves: list[Move]) -> None:
    for _ in range(n_moves):
        point = None
        for _attempt in range(40):  # boards stay sparse in the opening
            idx = rng.randrange(go.N_POINTS)
            if board.grid[idx] == go.EMPTY:
                cand = go.index_point(idx)
                if board.is_legal(cand):
                    point = cand
                    break
        if point is None:
            candidates = sorted(board.legal_moves() - {None})
            if not candidates:
                break
            point = rng.choice(candidates)
        color = go.color_name(board.to_move)
        board_next = board.apply_move(board.to_move, point)
        moves.append(Move(number=len(moves) + 1, color=color, point=point))
        board = board_next


def _opening_lines(rng: random.Random, n_lines: int, length: int) -> list[list[Move]]:
    lines = []
    for _ in range(n_lines):
        moves: list[Move] = []
        _random_playout(rng, go.Board.empty(), length, moves)
        lines.append(moves)
    return lines


def make_corpus(n_games: int, seed: int, n_lines: int = 12,
                n_players: int = 24, year_min: int = 1950,
                year_max: int = 2021, game_length: int = 60,
                duplicate_rate: float = 0.05) -> list[GameRecord]:
    """Legal synthetic games with shared openings and seeded determinism."""
    rng = random.Random(f"corpus:{seed}")
    lines = _opening_lines(rng, n_lines, game_length)
    players = [f"P{i:03d}" for i in range(n_players)]
    records = []
    for i in range(n_games):
        line = rng.choice(lines)
        roll = rng.random()
        if roll < duplicate_rate:
            depth = game_length  # wholesale copy of the line
        else:
            depth = rng.randint(0, game_length - 1)
        moves = [Move(number=m.number, color=m.color, point=m.point)
                 for m in line[:depth]]
        if depth < game_length:
            board = go.Board.empty()
            for m in moves:
                board = board.apply_move(go.color_code(m.color), m.point)
            _random_playout(rng, board, game_length - depth, moves)
        year = rng.randint(year_min, year_max)
        month = rng.randint(1, 12)
        day = rng.randint(1, 28)
        black, white = rng.sample(players, 2)
        result = rng.choice(["black-win", "white-win"])
        date = GameDate(year, month, day)
        rec = GameRecord(
            game_id="", date=date, black_id=black, white_id=white,
            result=result, komi=6.5, board_size=19, setup_stones=[],
            moves=moves, source_path=f"synth:{seed}:{i}")
        rec.game_id = record_content_id(date.raw(), black, white, result,
                                        rec.komi, [], moves) + f"-{i:05d}"
        records.append(rec)
    records.sort(key=GameRecord.sort_key)
    return records


def write_corpus_sgf(records: list[GameRecord], out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, rec in enumerate(records):
        path = out_dir / f"game_{i:05d}.sgf"
        path.write_bytes(serialize_record(rec))
        paths.append(path)
    return paths


def token_corpus(n_games: int, max_move: int = 60, seed: int = 0,
                 n_lines: int = 1000) -> tuple[np.ndarray, np.ndarray]:
    """Token matrix (no board legality) for novelty-scan benchmarks.

    Each game copies a pooled line up to a random depth and then continues
    with random tokens, mimicking the prefix-sharing shape of real corpora.
    """
    rng = np.random.default_rng(seed)
    lines = rng.integers(0, N_TOKEN_VALUES, size=(n_lines, max_move),
                         dtype=np.int16)
    which = rng.integers(0, n_lines, size=n_games)
    depth = rng.integers(0, max_move + 1, size=n_games)
    tokens = lines[which].copy()
    tail = rng.integers(0, N_TOKEN_VALUES, size=(n_games, max_move),
                        dtype=np.int16)
    cols = np.arange(max_move)[None, :]
    mask = cols >= depth[:, None]
    tokens[mask] = tail[mask]
    lengths = np.full(n_games, max_move, dtype=np.int64)
    return tokens, lengths


def planted_observations(seed: int, n_players: int = 40, n_games: int = 400,
                         moves_per_game: int = 30,
                         beta_after: float = 0.6, beta_nov: float = -0.6,
                         beta_inter: float = 0.5, noise_sd: float = 2.0,
                         cutoff: _dt.date = _dt.date(2016, 3, 15)) -> dict:
    """Move-level synthetic data with known interaction effect.

    Outcome = after*b1 + novel*b2 + after*novel*b3 + player effect
    + move-number effect + noise; months span 2000-2021 so both regimes are
    populated. Returns column arrays keyed like the observation table.
    """
    rng = np.random.default_rng(seed)
    player_fx = rng.normal(95.0, 1.5, size=n_players)
    move_fx = rng.normal(0.0, 0.8, size=moves_per_game + 1)
    months = [(y, m) for y in range(2000, 2022) for m in range(1, 13)]

    cols: dict[str, list] = {k: [] for k in
                             ("dqi", "after_ai", "novelty_dummy", "player_id",
                              "month_id", "move_number", "game_id")}
    for g in range(n_games):
        y, m = months[rng.integers(0, len(months))]
        after = int(_dt.date(y, m, 15) >= cutoff)
        black, white = rng.choice(n_players, size=2, replace=False)
        novel_move = int(rng.integers(1, moves_per_game + 1))
        for mv in range(1, moves_per_game + 1):
            player = black if mv % 2 == 1 else white
            novel = int(mv == novel_move)
            value = (beta_after * after + beta_nov * novel
                     + beta_inter * after * novel
                     + player_fx[player] + move_fx[mv]
                     + rng.normal(0.0, noise_sd))
            cols["dqi"].append(value)
            cols["after_ai"].append(after)
            cols["novelty_dummy"].append(novel)
            cols["player_id"].append(f"P{player:03d}")
            cols["month_id"].append(f"{y:04d}-{m:02d}")
            cols["move_number"].append(mv)
            cols["game_id"].append(f"g{g:05d}")
    return {k: np.asarray(v) for k, v in cols.items()}
