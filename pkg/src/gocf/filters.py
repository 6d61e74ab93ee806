"""Move-observation assembly and the analysis filter suite.

Observations join per-move evaluations with per-game novelty records and
game metadata. Filters select the subsets used by the falsification
analyses: decisions that differ from (or match) the engine, ten-move stage
buckets, responses to an opponent's first deviation, and novel-move slices.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .evaluate import DecisionEval
from .record import GameRecord, NoveltyRecord

DEFAULT_CUTOFF = _dt.date(2016, 3, 15)  # AlphaGo's match win over Lee Sedol

FILTER_KINDS = (
    "all",
    "differs-from-ai",
    "matches-ai",
    "stage-bucket",
    "opponent-deviation-response",
    "novel-moves-only",
    "novel-differs-from-ai",
    "novel-matches-ai",
)


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    stage: int | None = None  # stage-bucket index 1..6
    min_matched_prefix: int | None = None  # relaxed opponent-deviation variant

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}")
        if self.kind == "stage-bucket":
            if self.stage is None or not 1 <= self.stage <= 6:
                raise ValueError("stage-bucket requires stage in 1..6")

    @classmethod
    def parse(cls, text: str) -> "FilterSpec":
        """Parse e.g. "stage-bucket:3" or "opponent-deviation-response:min4"."""
        if ":" in text:
            kind, arg = text.split(":", 1)
            if kind == "stage-bucket":
                return cls(kind=kind, stage=int(arg))
            if kind == "opponent-deviation-response" and arg.startswith("min"):
                return cls(kind=kind, min_matched_prefix=int(arg[3:]))
            raise ValueError(f"bad filter argument in {text!r}")
        return cls(kind=text)

    def label(self) -> str:
        if self.kind == "stage-bucket":
            return f"stage-bucket-{self.stage}"
        if self.kind == "opponent-deviation-response" and self.min_matched_prefix:
            return f"opponent-deviation-response-min{self.min_matched_prefix}"
        return self.kind


class JoinError(Exception):
    pass


OBS_COLUMNS = ["game_id", "move_number", "player_id", "color", "date",
               "month_id", "dqi", "matched_ai", "novelty_dummy",
               "novelty_index", "weight"]


def build_observations(records: list[GameRecord], evals: list[DecisionEval],
                       novelty: list[NoveltyRecord]) -> pd.DataFrame:
    """One row per evaluated move with analysis dummies attached.

    The after-AI dummy is intentionally not materialized here; it is derived
    from the date column against the cutoff at regression time, so a cutoff
    change invalidates only the regression outputs. Every evaluated game
    must appear in both the corpus and the novelty records; unresolved ids
    raise JoinError listing the first ten.
    """
    by_game = {rec.game_id: rec for rec in records}
    nov_by_game = {nr.game_id: nr for nr in novelty if not nr.is_synthetic}
    dangling = sorted({ev.game_id for ev in evals}
                      - (set(by_game) & set(nov_by_game)))
    if dangling:
        shown = ", ".join(dangling[:10])
        raise JoinError(f"{len(dangling)} evaluated game(s) missing from "
                        f"corpus or novelty records: {shown}")

    rows = []
    for ev in evals:
        rec = by_game[ev.game_id]
        nr = nov_by_game[ev.game_id]
        date = rec.date.resolved()
        novel = (nr.novel_move_number == ev.move_number)
        rows.append((
            ev.game_id, ev.move_number, ev.player_id, ev.color,
            date.isoformat(), rec.date.month_id(),
            ev.dqi, int(ev.matched_ai),
            int(novel), float(nr.novelty_index) if novel else np.nan, 1,
        ))
    df = pd.DataFrame(rows, columns=OBS_COLUMNS)
    return df.sort_values(["game_id", "move_number"], kind="stable",
                          ignore_index=True)


def attach_after_ai(obs: pd.DataFrame, cutoff: _dt.date = DEFAULT_CUTOFF) -> pd.DataFrame:
    """Materialize the after-AI dummy; reuses an existing column when the
    table carries no date (externally prepared data)."""
    out = obs.copy()
    if "date" in out.columns:
        out["after_ai"] = (pd.to_datetime(out["date"]).dt.date
                           >= cutoff).astype(int)
    elif "after_ai" not in out.columns:
        raise ValueError("observations need a date or after_ai column")
    return out


def apply_filter(obs: pd.DataFrame, spec: FilterSpec) -> pd.DataFrame:
    """Select the observation subset for one analysis."""
    if spec.kind == "all":
        return obs.copy()
    if spec.kind == "differs-from-ai":
        return obs[obs["matched_ai"] == 0].copy()
    if spec.kind == "matches-ai":
        return obs[obs["matched_ai"] == 1].copy()
    if spec.kind == "stage-bucket":
        lo = 10 * (spec.stage - 1) + 1
        hi = 10 * spec.stage
        return obs[(obs["move_number"] >= lo) & (obs["move_number"] <= hi)].copy()
    if spec.kind == "novel-moves-only":
        return obs[obs["novelty_dummy"] == 1].copy()
    if spec.kind == "novel-differs-from-ai":
        return obs[(obs["novelty_dummy"] == 1) & (obs["matched_ai"] == 0)].copy()
    if spec.kind == "novel-matches-ai":
        return obs[(obs["novelty_dummy"] == 1) & (obs["matched_ai"] == 1)].copy()
    if spec.kind == "opponent-deviation-response":
        return _opponent_deviation(obs, spec.min_matched_prefix).copy()
    raise ValueError(f"unhandled filter kind {spec.kind!r}")


def _opponent_deviation(obs: pd.DataFrame, min_prefix: int | None) -> pd.DataFrame:
    """Moves played right after the opponent first leaves the engine line.

    Strict rule: select move m when moves 1..m-2 all matched and move m-1
    did not. The relaxed rule only requires the game's leading matched run
    to reach ``min_prefix`` moves (and move m-1 to deviate).
    """
    df = obs.sort_values(["game_id", "move_number"], kind="stable")
    games = df["game_id"]
    grouped = df.groupby("game_id", sort=False)["matched_ai"]
    prev_matched = grouped.shift(1)
    cumprod = grouped.cumprod()
    if min_prefix is None:
        prefix_ok = cumprod.groupby(games, sort=False).shift(2)
        prefix_ok = prefix_ok.fillna(1).astype(bool)
    else:
        leading_run = cumprod.groupby(games, sort=False).transform("sum")
        prefix_ok = leading_run >= min_prefix
    selected = prefix_ok & (prev_matched == 0)
    keep = df.index[selected.to_numpy(dtype=bool)]
    mask = obs.index.isin(keep)
    return obs[mask]  # original row order


def write_observations_csv(path: str | Path, obs: pd.DataFrame) -> None:
    out = obs.copy()
    out["dqi"] = out["dqi"].map(repr)
    out["novelty_index"] = out["novelty_index"].map(
        lambda v: "" if pd.isna(v) else str(int(v)))
    out.to_csv(path, index=False, lineterminator="\n")


def read_observations_csv(path: str | Path) -> pd.DataFrame:
    df = pd.read_csv(path, dtype={
        "game_id": str, "move_number": np.int64, "player_id": str,
        "color": str, "date": str, "month_id": str, "after_ai": np.int64,
        "dqi": np.float64, "matched_ai": np.int64, "novelty_dummy": np.int64,
        "novelty_index": str, "weight": np.int64,
    }, keep_default_na=False, na_values=[])
    df["novelty_index"] = df["novelty_index"].map(
        lambda v: np.nan if v == "" else float(v))
    return df
