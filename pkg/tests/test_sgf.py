import pytest

from gocf.record import GameDate
from gocf.sgf import (SgfParseError, parse_sgf, point_from_letters,
                      point_to_letters, serialize_record)
from gocf.synth import make_corpus


def test_basic_two_move_game():
    records = parse_sgf(b"(;FF[4]SZ[19]DT[2016-03-15];B[dd];W[pp])")
    assert len(records) == 1
    rec = records[0]
    assert len(rec.moves) == 2
    assert (rec.moves[0].color, rec.moves[0].point) == ("black", (3, 3))
    assert (rec.moves[1].color, rec.moves[1].point) == ("white", (15, 15))
    assert rec.date.raw() == "2016-03-15"


def test_tt_is_pass_on_19x19():
    rec = parse_sgf(b"(;FF[4]SZ[19];B[tt])")[0]
    assert rec.moves[0].color == "black"
    assert rec.moves[0].point is None


def test_empty_value_is_pass():
    rec = parse_sgf(b"(;FF[4]SZ[19];B[])")[0]
    assert rec.moves[0].point is None


def test_coordinate_round_trip_all_points():
    for col in range(19):
        for row in range(19):
            letters = point_to_letters((col, row))
            assert point_from_letters(letters) == (col, row)
    assert point_from_letters("tt") is None
    assert point_to_letters(None) == "tt"


def test_multiple_game_trees():
    data = b"(;FF[4]SZ[19];B[dd])(;FF[4]SZ[19];B[pp])"
    records = parse_sgf(data)
    assert len(records) == 2
    assert records[0].moves[0].point == (3, 3)
    assert records[1].moves[0].point == (15, 15)
    assert records[0].game_id != records[1].game_id


def test_variations_are_discarded():
    data = b"(;FF[4]SZ[19];B[dd](;W[pp];B[dp])(;W[pd]))"
    rec = parse_sgf(data)[0]
    points = [m.point for m in rec.moves]
    assert points == [(3, 3), (15, 15), (3, 15)]


def test_escaped_values():
    data = rb"(;FF[4]SZ[19]PB[A \] B]PW[C \\ D];B[dd])"
    rec = parse_sgf(data)[0]
    assert rec.black_id == "A ] B"
    assert rec.white_id == "C \\ D"


def test_setup_stones():
    rec = parse_sgf(b"(;FF[4]SZ[19]AB[dd][pp]AW[pd];W[dp])")[0]
    assert ("black", (3, 3)) in rec.setup_stones
    assert ("black", (15, 15)) in rec.setup_stones
    assert ("white", (15, 3)) in rec.setup_stones
    assert rec.moves[0].color == "white"


def test_malformed_structures_report_offsets():
    cases = [b"", b"no tree here", b"(;FF[4]SZ[19];B[dd]", b"(;B[dd)",
             b"(;FF[4]B)"]
    for data in cases:
        with pytest.raises(SgfParseError) as exc_info:
            parse_sgf(data)
        assert exc_info.value.offset >= 0


def test_unsupported_board_size_is_kept_but_unparsed():
    rec = parse_sgf(b"(;FF[4]SZ[13]DT[2000-01-01];B[dd])")[0]
    assert rec.board_size == 13
    assert rec.moves == []


def test_date_parsing_precision():
    assert GameDate.parse("2016-03-15").precision == "day"
    assert GameDate.parse("2016-03").precision == "month"
    assert GameDate.parse("2016").precision == "year"
    assert GameDate.parse(None).precision == "none"
    assert GameDate.parse("2016-03").resolved().day == 15
    assert GameDate.parse("2016").resolved().month == 7
    assert GameDate.parse("2016").resolved().day == 1
    # first date wins in multi-date values
    assert GameDate.parse("2016-03-15,16").raw() == "2016-03-15"


def test_result_parsing():
    assert parse_sgf(b"(;SZ[19]RE[B+3.5];B[dd])")[0].result == "black-win"
    assert parse_sgf(b"(;SZ[19]RE[W+R];B[dd])")[0].result == "white-win"
    assert parse_sgf(b"(;SZ[19]RE[0];B[dd])")[0].result == "draw"
    assert parse_sgf(b"(;SZ[19]RE[?];B[dd])")[0].result == "unknown"


def _record_key(rec):
    return (rec.date.raw(), rec.black_id, rec.white_id, rec.result, rec.komi,
            tuple(rec.setup_stones), tuple((m.color, m.point) for m in rec.moves))


def test_round_trip_200_game_corpus():
    records = make_corpus(200, seed=1234)
    for rec in records:
        data = serialize_record(rec)
        parsed = parse_sgf(data)
        assert len(parsed) == 1
        again = parse_sgf(serialize_record(parsed[0]))[0]
        assert _record_key(parsed[0]) == _record_key(rec)
        assert _record_key(again) == _record_key(rec)


def test_parse_determinism():
    data = b"(;FF[4]SZ[19]DT[1999-01-02];B[dd];W[pp];B[dp])"
    a = parse_sgf(data)
    b = parse_sgf(data)
    assert [_record_key(r) for r in a] == [_record_key(r) for r in b]
    assert [r.game_id for r in a] == [r.game_id for r in b]
