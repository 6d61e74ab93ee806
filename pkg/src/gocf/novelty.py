"""Opening-novelty detection over a chronologically ordered corpus.

Each game is scanned against a prefix index of every earlier game's opening
(move sequences up to ``max_move`` tokens, a token being the (color, point)
pair of one move). The first prefix length never seen before is the game's
novel move; its index value is ``max_move - novel_move_number``. Games whose
whole capped prefix was already observed have no novel move.

Two implementations are provided: a sequential reference (`build_prefix_index`)
and a vectorized column scan (`scan_novelty`) used for large corpora. Both
produce identical records; the scan interns prefixes by exact token identity
(group renumbering per move column), so no hashing is involved.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .record import GameRecord, NoveltyRecord

DEFAULT_MAX_MOVE = 60

# token = color * 362 + point slot; slots are row * 19 + col, 361 = pass
N_POINT_SLOTS = 362
N_TOKEN_VALUES = 2 * N_POINT_SLOTS

_SYMMETRIES = tuple(range(8))


def _transform_point(col: int, row: int, sym: int) -> tuple[int, int]:
    if sym & 1:
        col = 18 - col
    if sym & 2:
        row = 18 - row
    if sym & 4:
        col, row = row, col
    return col, row


def move_token(color: str, point: tuple[int, int] | None, sym: int = 0) -> int:
    c = 0 if color == "black" else 1
    if point is None:
        slot = 361
    else:
        col, row = point if sym == 0 else _transform_point(point[0], point[1], sym)
        slot = row * 19 + col
    return c * N_POINT_SLOTS + slot


def game_tokens(record: GameRecord, max_move: int, canonicalize: bool = False) -> tuple[int, ...]:
    """Token sequence for the first ``max_move`` moves.

    With ``canonicalize`` the lexicographically smallest of the 8 board
    symmetries is used, so mirrored/rotated openings compare equal.
    """
    moves = record.moves[:max_move]
    if not canonicalize:
        return tuple(move_token(m.color, m.point) for m in moves)
    variants = [tuple(move_token(m.color, m.point, sym) for m in moves)
                for sym in _SYMMETRIES]
    return min(variants)


def ordered_for_novelty(records: list[GameRecord]) -> list[GameRecord]:
    """Corpus order with synthetic games sorted before real games of the
    same date (they contribute prefixes "just before" that date)."""
    return sorted(records, key=lambda r: (r.date.resolved().toordinal(),
                                          0 if r.is_synthetic else 1,
                                          r.game_id))


def _check_ordered(records: list[GameRecord]) -> None:
    keys = [(r.date.resolved().toordinal(), 0 if r.is_synthetic else 1, r.game_id)
            for r in records]
    for a, b in zip(keys, keys[1:]):
        if a > b:
            raise ValueError("corpus is not sorted in chronological order")


@dataclass
class PrefixIndex:
    """Map from opening prefixes to their earliest occurrence.

    Keys are packed token sequences; values are (date ordinal, game_id) of
    the first game (in corpus order) containing that prefix.
    """

    max_move: int = DEFAULT_MAX_MOVE
    entries: dict[bytes, tuple[int, str]] = field(default_factory=dict)

    @staticmethod
    def pack(tokens: tuple[int, ...]) -> bytes:
        return np.asarray(tokens, dtype="<u2").tobytes()

    def earliest(self, tokens: tuple[int, ...]) -> tuple[int, str] | None:
        return self.entries.get(self.pack(tokens))

    def __len__(self) -> int:
        return len(self.entries)


def build_prefix_index(records: list[GameRecord], max_move: int = DEFAULT_MAX_MOVE,
                       canonicalize: bool = False,
                       ) -> tuple[PrefixIndex, list[NoveltyRecord]]:
    """Sequential reference scan; input must already be in corpus order."""
    _check_ordered(records)
    index = PrefixIndex(max_move=max_move)
    entries = index.entries
    out: list[NoveltyRecord] = []
    for rec in records:
        tokens = game_tokens(rec, max_move, canonicalize)
        packed = np.asarray(tokens, dtype="<u2").tobytes()
        novel_k: int | None = None
        for k in range(1, len(tokens) + 1):
            if packed[: 2 * k] not in entries:
                novel_k = k
                break
        if novel_k is not None:
            occurrence = (rec.date.resolved().toordinal(), rec.game_id)
            for k in range(novel_k, len(tokens) + 1):
                entries[packed[: 2 * k]] = occurrence
        out.append(NoveltyRecord(
            game_id=rec.game_id,
            novel_move_number=novel_k,
            novelty_index=(max_move - novel_k) if novel_k is not None else None,
            is_synthetic=rec.is_synthetic,
            date_raw=rec.date.raw(),
        ))
    return index, out


def scan_novelty(tokens: np.ndarray, lengths: np.ndarray,
                 max_move: int = DEFAULT_MAX_MOVE) -> np.ndarray:
    """Vectorized novel-move scan over corpus-ordered games.

    ``tokens`` is (n_games, >=max_move) int; row i holds game i's tokens
    (padding beyond ``lengths[i]`` is ignored). Returns an int array of
    novel move numbers, 0 where the whole capped prefix was seen before.

    Works column by column: games are grouped by exact prefix identity
    (previous group id + next token), and a game's prefix is novel iff the
    game is the earliest member of its group.
    """
    n = tokens.shape[0]
    lengths = np.minimum(np.asarray(lengths, dtype=np.int64), max_move)
    novel = np.zeros(n, dtype=np.int64)
    undecided = np.ones(n, dtype=bool)
    group = np.zeros(n, dtype=np.int64)
    positions = np.arange(n, dtype=np.int64)
    for k in range(max_move):
        idx = np.flatnonzero(lengths > k)
        if idx.size == 0:
            break
        key = group[idx] * N_TOKEN_VALUES + tokens[idx, k].astype(np.int64)
        uniq, inverse = np.unique(key, return_inverse=True)
        first = np.full(uniq.shape[0], n, dtype=np.int64)
        np.minimum.at(first, inverse, positions[idx])
        is_first = first[inverse] == positions[idx]
        newly = is_first & undecided[idx]
        hit = idx[newly]
        novel[hit] = k + 1
        undecided[hit] = False
        group[idx] = inverse
    return novel


def records_token_matrix(records: list[GameRecord], max_move: int,
                         canonicalize: bool = False) -> tuple[np.ndarray, np.ndarray]:
    n = len(records)
    tokens = np.zeros((n, max_move), dtype=np.int16)
    lengths = np.zeros(n, dtype=np.int64)
    for i, rec in enumerate(records):
        seq = game_tokens(rec, max_move, canonicalize)
        lengths[i] = len(seq)
        if seq:
            tokens[i, : len(seq)] = seq
    return tokens, lengths


def scan_records(records: list[GameRecord], max_move: int = DEFAULT_MAX_MOVE,
                 canonicalize: bool = False) -> list[NoveltyRecord]:
    """Fast-path equivalent of build_prefix_index (records only, no index)."""
    _check_ordered(records)
    tokens, lengths = records_token_matrix(records, max_move, canonicalize)
    novel = scan_novelty(tokens, lengths, max_move)
    return [NoveltyRecord(
        game_id=rec.game_id,
        novel_move_number=int(k) if k else None,
        novelty_index=(max_move - int(k)) if k else None,
        is_synthetic=rec.is_synthetic,
        date_raw=rec.date.raw(),
    ) for rec, k in zip(records, novel)]


def inject_synthetic_games(records: list[GameRecord], synthetic: list[GameRecord],
                           position_date: _dt.date, after_ai_cutoff: _dt.date,
                           max_move: int = DEFAULT_MAX_MOVE,
                           canonicalize: bool = False) -> list[NoveltyRecord]:
    """Re-run novelty with synthetic games dated just before ``position_date``.

    Synthetic games contribute prefixes but records are reported for real
    games only. ``position_date`` must precede the after-AI cutoff.
    """
    if position_date >= after_ai_cutoff:
        raise ValueError(f"injection date {position_date} is not before the "
                         f"after-AI cutoff {after_ai_cutoff}")
    from .record import GameDate
    dated = []
    for rec in synthetic:
        clone = GameRecord(
            game_id=rec.game_id, date=GameDate(position_date.year,
                                               position_date.month,
                                               position_date.day),
            black_id=rec.black_id, white_id=rec.white_id, result=rec.result,
            komi=rec.komi, board_size=rec.board_size,
            setup_stones=rec.setup_stones, moves=rec.moves,
            source_path=rec.source_path, is_synthetic=True)
        dated.append(clone)
    merged = ordered_for_novelty(list(records) + dated)
    all_records = scan_records(merged, max_move, canonicalize)
    return [nr for nr in all_records if not nr.is_synthetic]


@dataclass
class NoveltyDistribution:
    counts: dict[int, int]
    cumulative_fraction: dict[int, float]
    n_defined: int
    n_absent: int

    @property
    def absent_share(self) -> float:
        total = self.n_defined + self.n_absent
        return self.n_absent / total if total else 0.0


def novelty_distribution(records: list[NoveltyRecord]) -> NoveltyDistribution:
    """Histogram of novel move numbers and the cumulative fraction by move."""
    if not records:
        raise ValueError("no novelty records")
    counts: dict[int, int] = {}
    absent = 0
    for nr in records:
        if nr.novel_move_number is None:
            absent += 1
        else:
            counts[nr.novel_move_number] = counts.get(nr.novel_move_number, 0) + 1
    defined = sum(counts.values())
    cumulative = {}
    running = 0
    for k in sorted(counts):
        running += counts[k]
        cumulative[k] = running / defined if defined else 0.0
    return NoveltyDistribution(counts=counts, cumulative_fraction=cumulative,
                               n_defined=defined, n_absent=absent)


NOVELTY_CSV_HEADER = ["game_id", "date", "novel_move_number", "novelty_index",
                      "is_synthetic"]


def write_novelty_csv(path: str | Path, records: list[NoveltyRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(NOVELTY_CSV_HEADER)
        for nr in records:
            w.writerow([
                nr.game_id,
                nr.date_raw,
                nr.novel_move_number if nr.novel_move_number is not None else "",
                nr.novelty_index if nr.novelty_index is not None else "",
                int(nr.is_synthetic),
            ])


def read_novelty_csv(path: str | Path) -> list[NoveltyRecord]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            nmn = row["novel_move_number"]
            ni = row["novelty_index"]
            out.append(NoveltyRecord(
                game_id=row["game_id"],
                novel_move_number=int(nmn) if nmn else None,
                novelty_index=int(ni) if ni else None,
                is_synthetic=bool(int(row["is_synthetic"])),
                date_raw=row["date"],
            ))
    return out
