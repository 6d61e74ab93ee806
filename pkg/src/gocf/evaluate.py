"""Counterfactual evaluation of human moves and decision-quality scoring.

For every move the engine analyzes the position before it, with the human
move forced into the candidate set. The quality index compares the human
move's win rate to the best candidate's:

    quality = 100 - 100 * (best_winrate - human_winrate)

Because the max is taken over a candidate set that includes the human move,
the index never exceeds 100, and a move matching the engine's choice scores
exactly 100.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path

from . import board as go
from .engine import Evaluation, coord_text, coord_order
from .evalcache import EvalCache, cache_key
from .record import GameDate, GameRecord, Move
from .sgf import point_from_letters, record_content_id

DEFAULT_VISITS = 50
FULL_VISITS = 10_000


@dataclass
class EvalConfig:
    visits: int = DEFAULT_VISITS
    komi: float = 6.5
    ruleset: str = "japanese"
    max_move: int = 60


@dataclass(frozen=True)
class PositionQuery:
    moves: tuple[tuple[str, tuple[int, int] | None], ...]
    to_move: str
    komi: float = 6.5
    ruleset: str = "japanese"
    visits: int = FULL_VISITS  # desk-scale configs drop this to 50


@dataclass
class DecisionEval:
    game_id: str
    move_number: int
    player_id: str
    color: str
    human_move: str
    human_winrate: float
    best_winrate: float
    dqi: float
    matched_ai: bool


def dqi(human_winrate: float, best_winrate: float) -> float:
    """Decision quality in percentage points from two win rates in [0, 1]."""
    for name, v in (("human_winrate", human_winrate), ("best_winrate", best_winrate)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name} must be within [0, 1], got {v}")
    return 100.0 - 100.0 * (best_winrate - human_winrate)


def evaluate_position(engine, query: PositionQuery,
                      cache: EvalCache | None = None,
                      allow_moves: tuple[str, ...] = ()) -> Evaluation:
    """Analyze a position, via the cache when possible.

    The move list is replayed through the rules engine first; an invalid
    sequence raises before the engine is contacted. ``allow_moves`` forces
    the listed coordinates into the evaluated candidate set; a cache hit is
    used only if it already covers them.
    """
    board = go.replay_moves(query.moves)
    if go.color_name(board.to_move) != query.to_move:
        raise ValueError(f"{query.to_move} is not the side to move after "
                         f"{len(query.moves)} moves")
    key = cache_key(board.zobrist, query.to_move, query.komi, query.ruleset,
                    query.visits, engine.engine_id)
    if cache is not None:
        hit = cache.get(key)
        if hit is not None and all(mv in hit.winrates for mv in allow_moves):
            return hit
    evaluation = engine.analyze(list(query.moves), query.visits,
                                allow_moves=allow_moves,
                                rules=query.ruleset, komi=query.komi)
    evaluation.validate()
    if cache is not None:
        cache.put(key, evaluation)
    return evaluation


def evaluate_game(engine, record: GameRecord, config: EvalConfig | None = None,
                  cache: EvalCache | None = None) -> list[DecisionEval]:
    """Per-move counterfactual evaluations for the first ``max_move`` moves.

    Evaluations are cached position-by-position as they complete, so an
    interrupted run resumes from the cache and produces identical output.
    """
    config = config or EvalConfig()
    if record.setup_stones:
        raise ValueError(f"game {record.game_id} has setup stones; "
                         "counterfactual evaluation expects an empty start")
    out: list[DecisionEval] = []
    prefix: list[tuple[str, tuple[int, int] | None]] = []
    for move in record.moves[: config.max_move]:
        query = PositionQuery(moves=tuple(prefix), to_move=move.color,
                              komi=config.komi, ruleset=config.ruleset,
                              visits=config.visits)
        human_coord = coord_text(move.point)
        try:
            evaluation = evaluate_position(engine, query, cache,
                                           allow_moves=(human_coord,))
        except Exception as exc:
            raise RuntimeError(f"evaluation failed at {record.game_id} move "
                               f"{move.number}: {exc}") from exc
        human_wr = evaluation.winrates[human_coord]
        best_wr = max(evaluation.winrates.values())
        best_moves = [c for c, w in evaluation.winrates.items() if w == best_wr]
        best_move = min(best_moves, key=coord_order)
        matched = human_coord == best_move
        quality = dqi(human_wr, best_wr)
        if matched:
            quality = 100.0
        out.append(DecisionEval(
            game_id=record.game_id,
            move_number=move.number,
            player_id=record.player_of(move.color),
            color=move.color,
            human_move=human_coord,
            human_winrate=human_wr,
            best_winrate=best_wr,
            dqi=quality,
            matched_ai=matched,
        ))
        prefix.append((move.color, move.point))
    return out


def selfplay_generate(engine, n_games: int, max_move: int = 60,
                      seed: int = 0, top_k: int = 4, temperature: float = 0.05,
                      visits: int = DEFAULT_VISITS,
                      cache: EvalCache | None = None) -> list[GameRecord]:
    """Engine-vs-engine games sampled from the engine's top candidates.

    Deterministic given (engine id, seed): each game draws from its own
    seeded stream, sampling among the ``top_k`` non-pass candidates with
    weights exp(winrate / temperature). Failed games are dropped and logged
    by the caller; partial games are never returned.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    records = []
    for i in range(n_games):
        rng = random.Random(f"{engine.engine_id}:{seed}:{i}")
        moves: list[Move] = []
        prefix: list[tuple[str, tuple[int, int] | None]] = []
        color = "black"
        ok = True
        for number in range(1, max_move + 1):
            query = PositionQuery(moves=tuple(prefix), to_move=color,
                                  visits=visits)
            try:
                evaluation = evaluate_position(engine, query, cache)
            except Exception:
                ok = False
                break
            candidates = sorted(
                ((c, w) for c, w in evaluation.winrates.items() if c != "pass"),
                key=lambda cw: (-cw[1], coord_order(cw[0])))[:top_k]
            if not candidates:
                ok = False
                break
            base = candidates[0][1]
            weights = [math.exp((w - base) / temperature) for _, w in candidates]
            coord = rng.choices([c for c, _ in candidates], weights=weights)[0]
            point = None if coord == "pass" else point_from_letters(coord)
            moves.append(Move(number=number, color=color, point=point))
            prefix.append((color, point))
            color = "white" if color == "black" else "black"
        if not ok:
            continue
        date = GameDate(2016, 1, 1)
        rec = GameRecord(
            game_id="", date=date,
            black_id=f"{engine.engine_id}-black", white_id=f"{engine.engine_id}-white",
            result="unknown", komi=6.5, board_size=19, setup_stones=[],
            moves=moves, source_path=f"selfplay:{seed}:{i}", is_synthetic=True)
        rec.game_id = "sp-" + record_content_id(
            date.raw(), rec.black_id, rec.white_id, rec.result, rec.komi,
            [], moves) + f"-{i:04d}"
        records.append(rec)
    return records


EVALS_CSV_HEADER = ["game_id", "move_number", "player_id", "color",
                    "human_move", "human_winrate", "best_winrate", "dqi",
                    "matched_ai"]


def write_evals_csv(path: str | Path, evals: list[DecisionEval]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(EVALS_CSV_HEADER)
        for ev in evals:
            w.writerow([ev.game_id, ev.move_number, ev.player_id, ev.color,
                        ev.human_move, repr(ev.human_winrate),
                        repr(ev.best_winrate), repr(ev.dqi),
                        int(ev.matched_ai)])


def read_evals_csv(path: str | Path) -> list[DecisionEval]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(DecisionEval(
                game_id=row["game_id"],
                move_number=int(row["move_number"]),
                player_id=row["player_id"],
                color=row["color"],
                human_move=row["human_move"],
                human_winrate=float(row["human_winrate"]),
                best_winrate=float(row["best_winrate"]),
                dqi=float(row["dqi"]),
                matched_ai=bool(int(row["matched_ai"])),
            ))
    return out
