import datetime as dt
import random
import zipfile

import pytest

from gocf import board as go
from gocf.corpus import CorpusDB, IngestConfig, ingest_corpus, validate_record
from gocf.oracles import SlowBoard, SlowBoardError
from gocf.record import GameDate, GameRecord, Move
from gocf.sgf import serialize_record
from gocf.synth import make_corpus, write_corpus_sgf


def _write(tmp_path, name, content: bytes):
    path = tmp_path / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(content)
    return path


SGF_A = b"(;FF[4]SZ[19]DT[2001-05-05]PB[alice]PW[bob]RE[B+2.5];B[dd];W[pp])"
SGF_B = b"(;FF[4]SZ[19]DT[2001-05-05]PB[carol]PW[dave]RE[W+R];B[pd];W[dp])"


def test_ingest_dedup_collapses_exact_duplicates(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "b.sgf", SGF_B)
    _write(tmp_path / "in", "dup.sgf", SGF_A)
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    assert len(db) == 2


def test_ingest_without_dedup_keeps_duplicates_with_distinct_ids(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "dup.sgf", SGF_A)
    db = ingest_corpus(tmp_path / "in", tmp_path / "db",
                       IngestConfig(dedup=False))
    assert len(db) == 2
    ids = [r.game_id for r in db.records]
    assert len(set(ids)) == 2


def test_equal_dates_tie_break_on_game_id(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "b.sgf", SGF_B)
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    ids = [r.game_id for r in db.records]
    assert ids == sorted(ids)


def test_date_rejections(tmp_path):
    bad_old = b"(;FF[4]SZ[19]DT[1830-01-01];B[dd])"
    undated = b"(;FF[4]SZ[19];B[dd])"
    _write(tmp_path / "in", "ok.sgf", SGF_A)
    _write(tmp_path / "in", "old.sgf", bad_old)
    _write(tmp_path / "in", "undated.sgf", undated)
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    assert len(db) == 1


def test_date_range_filter(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)  # 2001
    _write(tmp_path / "in", "b.sgf",
           SGF_B.replace(b"2001-05-05", b"2018-01-01"))
    cfg = IngestConfig(date_min=dt.date(2010, 1, 1))
    db = ingest_corpus(tmp_path / "in", tmp_path / "db", cfg)
    assert len(db) == 1
    assert db.records[0].date.year == 2018


def test_handicap_excluded_by_default(tmp_path):
    handicap = b"(;FF[4]SZ[19]DT[2001-02-03]AB[dd][pp];W[pd])"
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "h.sgf", handicap)
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    assert len(db) == 1
    db2 = ingest_corpus(tmp_path / "in", tmp_path / "db2",
                        IngestConfig(include_handicap=True))
    assert len(db2) == 2


def test_out_of_scope_board_size_excluded(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "s13.sgf", b"(;FF[4]SZ[13]DT[2001-01-01];B[dd])")
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    assert len(db) == 1


def test_unreadable_file_skipped_and_counted(tmp_path):
    _write(tmp_path / "in", "a.sgf", SGF_A)
    _write(tmp_path / "in", "junk.sgf", b"\x00\x01 garbage")
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    assert len(db) == 1


def test_zero_valid_games_is_hard_error(tmp_path):
    _write(tmp_path / "in", "junk.sgf", b"not sgf at all")
    with pytest.raises(ValueError):
        ingest_corpus(tmp_path / "in", tmp_path / "db")


def test_zip_archives_expand_transparently(tmp_path):
    indir = tmp_path / "in"
    indir.mkdir()
    with zipfile.ZipFile(indir / "bundle.zip", "w") as zf:
        zf.writestr("x/a.sgf", SGF_A)
        zf.writestr("y/b.sgf", SGF_B)
    db = ingest_corpus(indir, tmp_path / "db")
    assert len(db) == 2


def test_ingest_order_independent_of_directory_layout(tmp_path):
    records = make_corpus(40, seed=5)
    flat = tmp_path / "flat"
    write_corpus_sgf(records, flat)
    nested = tmp_path / "nested"
    for i, rec in enumerate(records):
        _write(nested / f"sub{i % 7}", f"zz_{39 - i:03d}.sgf",
               serialize_record(rec))
    db1 = ingest_corpus(flat, tmp_path / "db1")
    db2 = ingest_corpus(nested, tmp_path / "db2")
    key = lambda r: (r.game_id, r.date.raw(),
                     tuple((m.color, m.point) for m in r.moves))
    assert [key(r) for r in db1.records] == [key(r) for r in db2.records]


def test_corpus_db_round_trip(tmp_path):
    records = make_corpus(25, seed=9)
    write_corpus_sgf(records, tmp_path / "in")
    db = ingest_corpus(tmp_path / "in", tmp_path / "db")
    loaded = CorpusDB.load(tmp_path / "db")
    assert len(loaded) == len(db)
    for a, b in zip(db.records, loaded.records):
        assert a.game_id == b.game_id
        assert a.date.raw() == b.date.raw()
        assert [(m.color, m.point) for m in a.moves] == \
               [(m.color, m.point) for m in b.moves]


def test_total_order_on_records(tmp_path):
    records = make_corpus(60, seed=2)
    keys = [r.sort_key() for r in records]
    assert len(set(keys)) == len(keys)
    assert keys == sorted(keys)


def test_row_count_matches_directory_walk_oracle(tmp_path):
    records = make_corpus(200, seed=77)
    write_corpus_sgf(records, tmp_path / "in")
    file_count = sum(1 for p in (tmp_path / "in").rglob("*.sgf"))
    db = ingest_corpus(tmp_path / "in", tmp_path / "db",
                       IngestConfig(dedup=False))
    assert len(db) == file_count
    ndjson_lines = sum(1 for line in
                       (tmp_path / "db" / "games.ndjson").open()
                       if line.strip())
    assert ndjson_lines == file_count


# validate_record ------------------------------------------------------------

def _game(moves, setup=()):
    return GameRecord(
        game_id="g", date=GameDate(2000, 1, 1), black_id="a", white_id="b",
        result="unknown", komi=6.5, board_size=19,
        setup_stones=list(setup),
        moves=[Move(number=i + 1, color=c, point=p)
               for i, (c, p) in enumerate(moves)],
        source_path="t")


def test_validate_legal_game_ok():
    records = make_corpus(5, seed=3)
    for rec in records:
        assert validate_record(rec).status == "ok"


def test_validate_occupied_point():
    moves = [("black", (3, 3)), ("white", (15, 15)), ("black", (4, 4)),
             ("white", (2, 2)), ("black", (5, 5)), ("white", (10, 10)),
             ("black", (3, 3))]
    report = validate_record(_game(moves))
    assert report.status == "illegal-move"
    assert report.first_bad_move == 7


def test_validate_alternation():
    report = validate_record(_game([("white", (3, 3))]))
    assert report.status == "malformed"
    report = validate_record(_game([("black", (3, 3)), ("black", (4, 4))]))
    assert report.status == "malformed"
    assert report.first_bad_move == 2


def test_validate_setup_game_white_first():
    report = validate_record(_game([("white", (5, 5)), ("black", (6, 6))],
                                   setup=[("black", (3, 3)),
                                          ("black", (15, 15))]))
    assert report.status == "ok"


def test_validate_out_of_scope():
    rec = _game([("black", (3, 3))])
    rec.board_size = 13
    assert validate_record(rec).status == "out-of-scope"


def test_validation_matches_slow_replayer_on_perturbed_games(rng):
    records = make_corpus(30, seed=44, game_length=40)
    statuses = []
    for rec in records:
        # perturb: occasionally duplicate an earlier move's point
        moves = [(m.color, m.point) for m in rec.moves]
        if rng.random() < 0.6:
            i = rng.randrange(5, len(moves))
            j = rng.randrange(0, i)
            moves[i] = (moves[i][0], moves[j][1])
        perturbed = _game(moves)
        report = validate_record(perturbed)

        slow = SlowBoard()
        slow_status = "ok"
        slow_bad = None
        for n, (color, point) in enumerate(moves, start=1):
            try:
                slow.play(color, point)
            except SlowBoardError:
                slow_status = "illegal-move"
                slow_bad = n
                break
        assert report.status == slow_status
        if slow_status == "illegal-move":
            assert report.first_bad_move == slow_bad
        statuses.append(report.status)
    assert "illegal-move" in statuses
    assert "ok" in statuses
