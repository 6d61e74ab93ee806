import datetime as dt
import random

import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gocf.evaluate import DecisionEval
from gocf.filters import (FilterSpec, JoinError, apply_filter,
                          attach_after_ai, build_observations,
                          read_observations_csv, write_observations_csv)
from gocf.oracles import filter_scan_oracle
from gocf.record import GameDate, GameRecord, Move, NoveltyRecord


def _mk_obs(games: dict[str, list[bool]], novel: dict[str, int | None] = None):
    """Observation frame from per-game matched flags."""
    novel = novel or {}
    rows = []
    for gid, flags in games.items():
        for i, matched in enumerate(flags, start=1):
            rows.append({
                "game_id": gid, "move_number": i,
                "player_id": "pb" if i % 2 else "pw",
                "color": "black" if i % 2 else "white",
                "date": "2016-05-01", "month_id": "2016-05",
                "dqi": 90.0 + i, "matched_ai": int(matched),
                "novelty_dummy": int(novel.get(gid) == i),
                "novelty_index": 60 - i if novel.get(gid) == i else None,
                "weight": 1,
            })
    return pd.DataFrame(rows)


def test_worked_example_opponent_deviation():
    # dd(B) matched, pp(W) matched, dp(B) deviated, pd(W) is the response
    obs = _mk_obs({"g": [True, True, False, True]})
    picked = apply_filter(obs, FilterSpec("opponent-deviation-response"))
    assert list(picked["move_number"]) == [4]


def test_opponent_deviation_excludes_the_deviation_itself():
    obs = _mk_obs({"g": [True, True, False, True]})
    picked = apply_filter(obs, FilterSpec("opponent-deviation-response"))
    assert 3 not in set(picked["move_number"])


def test_opponent_deviation_second_move_case():
    # move 1 deviated; the vacuous all-matched prefix admits move 2
    obs = _mk_obs({"g": [False, True, True]})
    picked = apply_filter(obs, FilterSpec("opponent-deviation-response"))
    assert list(picked["move_number"]) == [2]


def test_opponent_deviation_stops_after_later_mismatch():
    obs = _mk_obs({"g": [True, True, False, False, True, True]})
    picked = apply_filter(obs, FilterSpec("opponent-deviation-response"))
    assert list(picked["move_number"]) == [4]


def test_relaxed_opponent_deviation():
    flags = [True, True, True, False, True, False, True]
    obs = _mk_obs({"g": flags})
    strict = apply_filter(obs, FilterSpec("opponent-deviation-response"))
    assert list(strict["move_number"]) == [5]
    relaxed = apply_filter(obs, FilterSpec("opponent-deviation-response",
                                           min_matched_prefix=3))
    assert list(relaxed["move_number"]) == [5, 7]


def test_partition_matches_plus_differs_is_all():
    obs = _mk_obs({"g1": [True, False, True], "g2": [False, False, True]})
    matches = apply_filter(obs, FilterSpec("matches-ai"))
    differs = apply_filter(obs, FilterSpec("differs-from-ai"))
    assert len(matches) + len(differs) == len(obs)
    merged = pd.concat([matches, differs]).sort_values(
        ["game_id", "move_number"], ignore_index=True)
    pd.testing.assert_frame_equal(
        merged, obs.sort_values(["game_id", "move_number"],
                                ignore_index=True))


def test_stage_buckets_partition_moves_1_to_60():
    obs = _mk_obs({"g": [bool(i % 2) for i in range(60)]})
    seen = []
    for k in range(1, 7):
        bucket = apply_filter(obs, FilterSpec("stage-bucket", stage=k))
        numbers = list(bucket["move_number"])
        assert numbers == list(range(10 * (k - 1) + 1, 10 * k + 1))
        seen.extend(numbers)
    assert sorted(seen) == list(range(1, 61))


def test_all_matched_means_empty_differs():
    obs = _mk_obs({"g": [True, True, True]})
    assert len(apply_filter(obs, FilterSpec("differs-from-ai"))) == 0


def test_novel_filters():
    obs = _mk_obs({"g1": [True, False], "g2": [False, True]},
                  novel={"g1": 2, "g2": 2})
    only = apply_filter(obs, FilterSpec("novel-moves-only"))
    assert set(zip(only["game_id"], only["move_number"])) == {("g1", 2),
                                                              ("g2", 2)}
    nd = apply_filter(obs, FilterSpec("novel-differs-from-ai"))
    assert set(nd["game_id"]) == {"g1"}
    nm = apply_filter(obs, FilterSpec("novel-matches-ai"))
    assert set(nm["game_id"]) == {"g2"}


def test_filter_spec_parsing():
    assert FilterSpec.parse("stage-bucket:4").stage == 4
    assert FilterSpec.parse("opponent-deviation-response:min5") \
        .min_matched_prefix == 5
    assert FilterSpec.parse("all").kind == "all"
    with pytest.raises(ValueError):
        FilterSpec.parse("bogus")
    with pytest.raises(ValueError):
        FilterSpec.parse("stage-bucket:9")


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.sampled_from(["g1", "g2", "g3"]),
                       st.lists(st.booleans(), min_size=1, max_size=25),
                       min_size=1, max_size=3),
       st.sampled_from(["all", "matches-ai", "differs-from-ai",
                        "novel-moves-only", "stage-bucket",
                        "opponent-deviation-response"]),
       st.integers(1, 6), st.integers(0, 30))
def test_filters_match_row_scan_oracle(games, kind, stage, novel_at):
    novel = {gid: (novel_at if 1 <= novel_at <= len(flags) else None)
             for gid, flags in games.items()}
    obs = _mk_obs(games, novel={g: n for g, n in novel.items() if n})
    spec = FilterSpec(kind, stage=stage if kind == "stage-bucket" else None)
    got = apply_filter(obs, spec)
    oracle = filter_scan_oracle(obs.to_dict("records"), kind,
                                stage if kind == "stage-bucket" else None)
    key = lambda r: (r["game_id"], r["move_number"])
    assert [key(r) for r in got.to_dict("records")] == [key(r) for r in oracle]


# observation building ---------------------------------------------------------

def _record(gid, moves, year=2016):
    return GameRecord(
        game_id=gid, date=GameDate(year, 5, 1), black_id="pb", white_id="pw",
        result="unknown", komi=6.5, board_size=19, setup_stones=[],
        moves=[Move(number=i + 1, color=c, point=p)
               for i, (c, p) in enumerate(moves)], source_path="t")


def _eval(gid, n, matched=False):
    color = "black" if n % 2 else "white"
    return DecisionEval(game_id=gid, move_number=n,
                        player_id="pb" if n % 2 else "pw", color=color,
                        human_move="dd", human_winrate=0.5,
                        best_winrate=0.5 if matched else 0.55,
                        dqi=100.0 if matched else 95.0, matched_ai=matched)


def test_build_observations_joins_and_flags():
    records = [_record("g1", [("black", (3, 3)), ("white", (15, 15))])]
    evals = [_eval("g1", 1, matched=True), _eval("g1", 2)]
    novelty = [NoveltyRecord("g1", 2, 58, date_raw="2016-05-01")]
    obs = build_observations(records, evals, novelty)
    assert list(obs["novelty_dummy"]) == [0, 1]
    assert pd.isna(obs["novelty_index"][0])
    assert obs["novelty_index"][1] == 58
    assert list(obs["month_id"]) == ["2016-05", "2016-05"]
    with_dummy = attach_after_ai(obs, dt.date(2016, 3, 15))
    assert list(with_dummy["after_ai"]) == [1, 1]
    earlier = attach_after_ai(obs, dt.date(2017, 1, 1))
    assert list(earlier["after_ai"]) == [0, 0]


def test_build_observations_dangling_keys_listed():
    records = [_record("g1", [("black", (3, 3))])]
    evals = [_eval("g1", 1), _eval("ghost", 1)]
    novelty = [NoveltyRecord("g1", 1, 59, date_raw="2016-05-01")]
    with pytest.raises(JoinError) as exc_info:
        build_observations(records, evals, novelty)
    assert "ghost" in str(exc_info.value)


def test_observations_csv_round_trip(tmp_path):
    records = [_record("g1", [("black", (3, 3)), ("white", (15, 15))])]
    evals = [_eval("g1", 1, matched=True), _eval("g1", 2)]
    novelty = [NoveltyRecord("g1", 2, 58, date_raw="2016-05-01")]
    obs = build_observations(records, evals, novelty)
    path = tmp_path / "obs.csv"
    write_observations_csv(path, obs)
    again = read_observations_csv(path)
    assert pd.isna(again["novelty_index"][0])
    assert again["novelty_index"][1] == 58
    assert list(again["dqi"]) == list(obs["dqi"])
    assert list(again["matched_ai"]) == list(obs["matched_ai"])
