"""Slow, independent reference implementations used only for verification.

Everything here deliberately avoids the production code paths: the novelty
oracle is a pairwise prefix scan (no index), the board oracle replays with a
dict grid and from-scratch flood fills, the regression oracle materializes
dummy columns, and the filter oracle walks rows one by one. Agreement with
these is what the test suite and `gocf verify` check.
"""

from __future__ import annotations

import numpy as np


# novelty: O(n^2) pairwise scan -------------------------------------------

def novelty_pairwise(records, max_move: int) -> list[tuple[str, int | None]]:
    """Novel move number per game by comparing against all earlier games."""
    seqs = []
    for rec in records:
        seqs.append([(m.color, m.point) for m in rec.moves[:max_move]])
    out = []
    for i, rec in enumerate(records):
        mine = seqs[i]
        longest_match = 0
        for j in range(i):
            other = seqs[j]
            k = 0
            limit = min(len(mine), len(other))
            while k < limit and mine[k] == other[k]:
                k += 1
            if k > longest_match:
                longest_match = k
        novel = longest_match + 1 if longest_match < len(mine) else None
        out.append((rec.game_id, novel))
    return out


# rules engine: dict-grid replayer -----------------------------------------

class SlowBoardError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason  # occupied | suicide | ko


class SlowBoard:
    """Minimal independent Go replayer (simple ko, suicide illegal)."""

    def __init__(self, setup=()):
        self.stones: dict[tuple[int, int], str] = {}
        for color, point in setup:
            self.stones[point] = color
        self.ko: tuple[int, int] | None = None

    def _neighbors(self, point):
        c, r = point
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nc, nr = c + dc, r + dr
            if 0 <= nc < 19 and 0 <= nr < 19:
                yield (nc, nr)

    def _group(self, point):
        color = self.stones[point]
        group = {point}
        frontier = [point]
        while frontier:
            p = frontier.pop()
            for n in self._neighbors(p):
                if self.stones.get(n) == color and n not in group:
                    group.add(n)
                    frontier.append(n)
        return group

    def _liberties(self, group):
        libs = set()
        for p in group:
            for n in self._neighbors(p):
                if n not in self.stones:
                    libs.add(n)
        return libs

    def play(self, color: str, point):
        if point is None:
            self.ko = None
            return
        if point in self.stones:
            raise SlowBoardError("occupied")
        if point == self.ko:
            raise SlowBoardError("ko")
        other = "white" if color == "black" else "black"
        self.stones[point] = color
        removed = []
        checked = set()
        for n in self._neighbors(point):
            if self.stones.get(n) == other and n not in checked:
                group = self._group(n)
                checked |= group
                if not self._liberties(group):
                    for p in group:
                        del self.stones[p]
                        removed.append(p)
        if not removed and not self._liberties(self._group(point)):
            del self.stones[point]
            raise SlowBoardError("suicide")
        self.ko = None
        if len(removed) == 1:
            own = self._group(point)
            if len(own) == 1 and self._liberties(own) == {removed[0]}:
                self.ko = removed[0]

    def counts(self):
        blacks = sum(1 for c in self.stones.values() if c == "black")
        whites = len(self.stones) - blacks
        return blacks, whites


# regression: explicit-dummy OLS with CR1 sandwich --------------------------

def ols_dummy_oracle(y, X, absorb_arrays, cluster):
    """Slope estimates and clustered SEs from a materialized dummy design.

    The first absorbed dimension contributes a full set of dummies (standing
    in for the intercept); later dimensions drop their first level. Returns
    (beta, se, K) for the slope block.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    blocks = [X]
    for d, dim in enumerate(absorb_arrays):
        values, codes = np.unique(np.asarray(dim), return_inverse=True)
        dummies = np.eye(len(values))[codes]
        blocks.append(dummies if d == 0 else dummies[:, 1:])
    full = np.column_stack(blocks)
    beta_full, _, rank, _ = np.linalg.lstsq(full, y, rcond=None)
    if rank < full.shape[1]:
        raise np.linalg.LinAlgError("dummy design is rank deficient")
    resid = y - full @ beta_full
    _, ccodes = np.unique(np.asarray(cluster), return_inverse=True)
    G = int(ccodes.max()) + 1
    N, K = full.shape
    scores = np.zeros((G, K))
    np.add.at(scores, ccodes, full * resid[:, None])
    bread = np.linalg.inv(full.T @ full)
    V = (G / (G - 1)) * ((N - 1) / (N - K)) * bread @ (scores.T @ scores) @ bread
    k = X.shape[1]
    return beta_full[:k], np.sqrt(np.diag(V)[:k]), K


# filters: row-by-row predicate scan ----------------------------------------

def filter_scan_oracle(rows: list[dict], kind: str, stage: int | None = None) -> list[dict]:
    """Select observation rows with explicit python predicates.

    ``rows`` are dicts with game_id, move_number, matched_ai, novelty_dummy.
    """
    if kind == "all":
        return list(rows)
    if kind == "matches-ai":
        return [r for r in rows if r["matched_ai"]]
    if kind == "differs-from-ai":
        return [r for r in rows if not r["matched_ai"]]
    if kind == "novel-moves-only":
        return [r for r in rows if r["novelty_dummy"]]
    if kind == "novel-differs-from-ai":
        return [r for r in rows if r["novelty_dummy"] and not r["matched_ai"]]
    if kind == "novel-matches-ai":
        return [r for r in rows if r["novelty_dummy"] and r["matched_ai"]]
    if kind == "stage-bucket":
        lo, hi = 10 * (stage - 1) + 1, 10 * stage
        return [r for r in rows if lo <= r["move_number"] <= hi]
    if kind == "opponent-deviation-response":
        by_game: dict[str, list[dict]] = {}
        for r in rows:
            by_game.setdefault(r["game_id"], []).append(r)
        keep = []
        for game_rows in by_game.values():
            game_rows = sorted(game_rows, key=lambda r: r["move_number"])
            for j, r in enumerate(game_rows):
                if j < 1:
                    continue
                prior_all_matched = all(bool(p["matched_ai"])
                                        for p in game_rows[: j - 1])
                if prior_all_matched and not game_rows[j - 1]["matched_ai"]:
                    keep.append(r)
        order = {(r["game_id"], r["move_number"]): i for i, r in enumerate(rows)}
        keep.sort(key=lambda r: order[(r["game_id"], r["move_number"])])
        return keep
    raise ValueError(f"unknown kind {kind!r}")
