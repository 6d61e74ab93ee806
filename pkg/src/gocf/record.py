"""Core game-record types and their JSON round-trip."""

from __future__ import annotations

import datetime as _dt
import json
import re
from dataclasses import dataclass


_DATE_RE = re.compile(r"(\d{4})(?:[-/.](\d{1,2}))?(?:[-/.](\d{1,2}))?")


@dataclass(frozen=True)
class GameDate:
    """Calendar date with year/month/day precision preserved.

    Ordering uses a resolved date: month-only dates fall on the 15th and
    year-only dates on July 1, so partially dated games sort at a stable
    midpoint and can be identified (and excluded) by their precision.
    """

    year: int | None
    month: int | None = None
    day: int | None = None

    @classmethod
    def parse(cls, text: str | None) -> "GameDate":
        """Lenient DT parsing: first YYYY[-MM[-DD]] found in the value."""
        if not text:
            return cls(None)
        m = _DATE_RE.search(text)
        if not m:
            return cls(None)
        year = int(m.group(1))
        month = int(m.group(2)) if m.group(2) else None
        day = int(m.group(3)) if m.group(3) else None
        if month is not None and not 1 <= month <= 12:
            month, day = None, None
        if day is not None:
            try:
                _dt.date(year, month, day)
            except ValueError:
                day = None
        return cls(year, month, day)

    def raw(self) -> str:
        if self.year is None:
            return ""
        if self.month is None:
            return f"{self.year:04d}"
        if self.day is None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"

    @property
    def precision(self) -> str:
        if self.year is None:
            return "none"
        if self.month is None:
            return "year"
        if self.day is None:
            return "month"
        return "day"

    def resolved(self) -> _dt.date:
        if self.year is None:
            raise ValueError("undated record has no resolvable date")
        if self.month is None:
            return _dt.date(self.year, 7, 1)
        if self.day is None:
            return _dt.date(self.year, self.month, 15)
        return _dt.date(self.year, self.month, self.day)

    def month_id(self) -> str:
        d = self.resolved()
        return f"{d.year:04d}-{d.month:02d}"


@dataclass(frozen=True)
class Move:
    """One decision: 1-based ordinal, color, and board point (None = pass)."""

    number: int
    color: str  # "black" | "white"
    point: tuple[int, int] | None  # (col, row), 0..18


RESULTS = ("black-win", "white-win", "draw", "unknown")


@dataclass
class GameRecord:
    game_id: str
    date: GameDate
    black_id: str
    white_id: str
    result: str
    komi: float
    board_size: int
    setup_stones: list[tuple[str, tuple[int, int]]]
    moves: list[Move]
    source_path: str
    is_synthetic: bool = False

    def sort_key(self) -> tuple:
        return (self.date.resolved().toordinal(), self.game_id)

    def player_of(self, color: str) -> str:
        return self.black_id if color == "black" else self.white_id

    def move_tokens(self, max_move: int | None = None) -> list[tuple[str, tuple[int, int] | None]]:
        moves = self.moves if max_move is None else self.moves[:max_move]
        return [(m.color, m.point) for m in moves]

    def dedup_key(self) -> tuple:
        return (self.date.raw(), self.black_id, self.white_id,
                tuple(self.move_tokens()))

    def to_json(self) -> str:
        obj = {
            "game_id": self.game_id,
            "date": self.date.raw(),
            "black_id": self.black_id,
            "white_id": self.white_id,
            "result": self.result,
            "komi": self.komi,
            "board_size": self.board_size,
            "setup_stones": [[c, list(p)] for c, p in self.setup_stones],
            "moves": [[m.color, list(m.point) if m.point else None] for m in self.moves],
            "source_path": self.source_path,
            "is_synthetic": self.is_synthetic,
        }
        return json.dumps(obj, separators=(",", ":"), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "GameRecord":
        obj = json.loads(line)
        return cls(
            game_id=obj["game_id"],
            date=GameDate.parse(obj["date"]),
            black_id=obj["black_id"],
            white_id=obj["white_id"],
            result=obj["result"],
            komi=float(obj["komi"]),
            board_size=int(obj["board_size"]),
            setup_stones=[(c, tuple(p)) for c, p in obj["setup_stones"]],
            moves=[Move(number=i + 1, color=c, point=tuple(p) if p else None)
                   for i, (c, p) in enumerate(obj["moves"])],
            source_path=obj["source_path"],
            is_synthetic=bool(obj.get("is_synthetic", False)),
        )


@dataclass
class ValidationReport:
    game_id: str
    status: str  # ok | illegal-move | malformed | out-of-scope
    first_bad_move: int | None = None
    detail: str = ""


@dataclass
class NoveltyRecord:
    """Per-game first historically novel move and the derived index."""

    game_id: str
    novel_move_number: int | None
    novelty_index: int | None
    is_synthetic: bool = False
    date_raw: str = ""

    def __post_init__(self):
        present = self.novel_move_number is not None
        if present != (self.novelty_index is not None):
            raise ValueError("novel_move_number and novelty_index must be "
                             "both present or both absent")
