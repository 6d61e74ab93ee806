"""Corpus ingestion: walk SGF files (and zips), validate, dedup, persist.

The persisted corpus is a directory holding ``games.ndjson`` (one JSON object
per game, sorted by (date, game_id)) and ``manifest.json`` with counts, the
ingest-config hash, and a timestamp.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import io
import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

from . import board as go
from .record import GameRecord, ValidationReport
from .sgf import SgfParseError, parse_sgf

log = logging.getLogger(__name__)

GAMES_FILE = "games.ndjson"
MANIFEST_FILE = "manifest.json"

DATE_FLOOR = _dt.date(1900, 1, 1)


@dataclass
class IngestConfig:
    date_min: _dt.date | None = None
    date_max: _dt.date | None = None
    dedup: bool = True
    include_handicap: bool = False

    def to_dict(self) -> dict:
        return {
            "date_min": self.date_min.isoformat() if self.date_min else None,
            "date_max": self.date_max.isoformat() if self.date_max else None,
            "dedup": self.dedup,
            "include_handicap": self.include_handicap,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class IngestStats:
    files_seen: int = 0
    files_unreadable: int = 0
    games_parsed: int = 0
    rejected_date: int = 0
    rejected_out_of_scope: int = 0
    rejected_handicap: int = 0
    duplicates_removed: int = 0
    reports: list[ValidationReport] = field(default_factory=list)


def validate_record(record: GameRecord) -> ValidationReport:
    """Replay the game through the rules engine and classify the outcome."""
    if record.board_size != 19:
        return ValidationReport(record.game_id, "out-of-scope",
                                detail=f"board size {record.board_size}")
    expected = "black"
    if not record.setup_stones:
        for move in record.moves:
            if move.color != expected:
                return ValidationReport(
                    record.game_id, "malformed", first_bad_move=move.number,
                    detail=f"expected {expected} at move {move.number}")
            expected = "white" if expected == "black" else "black"
    else:
        for prev, cur in zip(record.moves, record.moves[1:]):
            if cur.color == prev.color:
                return ValidationReport(
                    record.game_id, "malformed", first_bad_move=cur.number,
                    detail=f"repeated {cur.color} at move {cur.number}")
    try:
        b = (go.Board.with_setup(record.setup_stones,
                                 to_move=go.color_code(record.moves[0].color)
                                 if record.moves else go.BLACK)
             if record.setup_stones else go.Board.empty())
    except ValueError as exc:
        return ValidationReport(record.game_id, "malformed", detail=str(exc))
    for move in record.moves:
        try:
            b = b.apply_move(go.color_code(move.color), move.point)
        except go.IllegalMoveError as exc:
            return ValidationReport(record.game_id, "illegal-move",
                                    first_bad_move=move.number,
                                    detail=f"{exc.code}: {exc}")
    return ValidationReport(record.game_id, "ok")


def _iter_sgf_sources(root: Path):
    """Yield (virtual_path, bytes) for every .sgf under root, expanding zips."""
    paths = sorted(p for p in root.rglob("*") if p.is_file())
    for path in paths:
        rel = path.relative_to(root).as_posix()
        suffix = path.suffix.lower()
        if suffix == ".sgf":
            yield rel, path.read_bytes()
        elif suffix == ".zip":
            with zipfile.ZipFile(path) as zf:
                for name in sorted(zf.namelist()):
                    if name.lower().endswith(".sgf"):
                        yield f"{rel}!{name}", zf.read(name)


def ingest_corpus(root: str | Path, out_dir: str | Path,
                  config: IngestConfig | None = None) -> "CorpusDB":
    """Parse every SGF under ``root`` into a persisted, ordered corpus.

    Unreadable or unparseable files are logged and skipped (counted). Raises
    ValueError when no valid game survives filtering.
    """
    root = Path(root)
    config = config or IngestConfig()
    stats = IngestStats()
    records: list[GameRecord] = []
    today = _dt.date.today()

    for rel, data in _iter_sgf_sources(root):
        stats.files_seen += 1
        try:
            parsed = parse_sgf(data, source_path=rel)
        except (SgfParseError, OSError, zipfile.BadZipFile) as exc:
            stats.files_unreadable += 1
            log.warning("skipping %s: %s", rel, exc)
            continue
        for rec in parsed:
            stats.games_parsed += 1
            if rec.board_size != 19:
                stats.rejected_out_of_scope += 1
                stats.reports.append(ValidationReport(
                    rec.game_id, "out-of-scope",
                    detail=f"board size {rec.board_size}"))
                continue
            if rec.date.year is None:
                stats.rejected_date += 1
                continue
            resolved = rec.date.resolved()
            if not (DATE_FLOOR <= resolved <= today):
                stats.rejected_date += 1
                continue
            if config.date_min and resolved < config.date_min:
                stats.rejected_date += 1
                continue
            if config.date_max and resolved > config.date_max:
                stats.rejected_date += 1
                continue
            if rec.setup_stones and not config.include_handicap:
                stats.rejected_handicap += 1
                continue
            records.append(rec)

    if config.dedup:
        seen: dict[tuple, str] = {}
        kept = []
        for rec in sorted(records, key=lambda r: (r.game_id, r.source_path)):
            key = rec.dedup_key()
            if key in seen:
                stats.duplicates_removed += 1
            else:
                seen[key] = rec.game_id
                kept.append(rec)
        records = kept
    else:
        # distinct ids for content-identical games, assigned in stable order
        by_id: dict[str, int] = {}
        for rec in sorted(records, key=lambda r: (r.game_id, r.source_path)):
            n = by_id.get(rec.game_id, 0)
            by_id[rec.game_id] = n + 1
            if n:
                rec.game_id = f"{rec.game_id}-{n + 1}"

    if not records:
        raise ValueError(f"no valid games found under {root}")

    records.sort(key=GameRecord.sort_key)
    db = CorpusDB(records=records, path=Path(out_dir))
    db.write(config=config, stats=stats)
    return db


@dataclass
class CorpusDB:
    """Ordered game records plus their on-disk location."""

    records: list[GameRecord]
    path: Path | None = None

    def write(self, config: IngestConfig | None = None,
              stats: IngestStats | None = None) -> None:
        assert self.path is not None
        self.path.mkdir(parents=True, exist_ok=True)
        lines = [rec.to_json() for rec in self.records]
        (self.path / GAMES_FILE).write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
        manifest = {
            "n_games": len(self.records),
            "config": config.to_dict() if config else None,
            "config_hash": config.hash() if config else None,
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        if stats is not None:
            manifest.update({
                "files_seen": stats.files_seen,
                "files_unreadable": stats.files_unreadable,
                "games_parsed": stats.games_parsed,
                "rejected_date": stats.rejected_date,
                "rejected_out_of_scope": stats.rejected_out_of_scope,
                "rejected_handicap": stats.rejected_handicap,
                "duplicates_removed": stats.duplicates_removed,
            })
        (self.path / MANIFEST_FILE).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CorpusDB":
        path = Path(path)
        records = []
        with io.open(path / GAMES_FILE, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    records.append(GameRecord.from_json(line))
        return cls(records=records, path=path)

    def by_id(self) -> dict[str, GameRecord]:
        return {rec.game_id: rec for rec in self.records}

    def __len__(self) -> int:
        return len(self.records)
