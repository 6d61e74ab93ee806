"""Quick oracle suite over a bundled synthetic corpus (`gocf verify`).

Each check prints one pass/fail line; the command exits nonzero on any
failure. The pytest suite runs the same comparisons at larger scale.
"""

from __future__ import annotations

import numpy as np

from . import board as go
from . import oracles
from .engine import MockEngine
from .evaluate import dqi
from .novelty import build_prefix_index, ordered_for_novelty, scan_records
from .panel import fe_regression
from .synth import make_corpus


def _check(name: str, ok: bool, detail: str = "") -> bool:
    mark = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail and not ok else ""
    print(f"[{mark}] {name}{suffix}")
    return ok


def run_verify(n_games: int = 300, seed: int = 20160315) -> bool:
    ok = True
    records = ordered_for_novelty(make_corpus(n_games, seed=seed))

    _, sequential = build_prefix_index(records)
    fast = scan_records(records)
    ok &= _check("novelty fast path identical to sequential reference",
                 [(r.game_id, r.novel_move_number) for r in sequential]
                 == [(r.game_id, r.novel_move_number) for r in fast])

    oracle = oracles.novelty_pairwise(records, 60)
    ok &= _check("novelty matches pairwise brute-force oracle",
                 [(r.game_id, r.novel_move_number) for r in sequential] == oracle)

    ok &= _check("novelty arithmetic: index = 60 - move number",
                 all(r.novelty_index == 60 - r.novel_move_number
                     for r in sequential if r.novel_move_number is not None)
                 and sequential[0].novel_move_number == 1)

    ok &= _check("decision quality identities",
                 dqi(0.5, 0.5) == 100.0 and dqi(0.5, 0.55) == 95.0
                 and dqi(0.0, 1.0) == 0.0)

    rng = np.random.default_rng(seed)
    boards_ok = True
    for _ in range(30):
        fast_b = go.Board.empty()
        slow_b = oracles.SlowBoard()
        for _mv in range(50):
            legal = sorted(fast_b.legal_moves() - {None})
            if not legal:
                break
            point = legal[rng.integers(0, len(legal))]
            fast_b = fast_b.apply_move(fast_b.to_move, point)
            slow_b.play("black" if fast_b.to_move == go.WHITE else "white",
                        point)
            if fast_b.stone_counts() != slow_b.counts():
                boards_ok = False
                break
        if fast_b.zobrist != go.zobrist_recompute(fast_b):
            boards_ok = False
        if not boards_ok:
            break
    ok &= _check("rules engine agrees with slow replayer", boards_ok)

    hdfe_ok = True
    for trial in range(3):
        r = np.random.default_rng(1000 + trial)
        n, P, T = 500, 20, 8
        players = r.integers(0, P, n)
        periods = r.integers(0, T, n)
        x = np.column_stack([r.normal(size=n), r.binomial(1, 0.5, n)])
        y = x @ np.array([1.5, -0.7]) + r.normal(size=P)[players] \
            + r.normal(size=T)[periods] + r.normal(size=n)
        res = fe_regression(y, x, ["a", "b"], [players, periods],
                            ["player", "period"], players)
        beta_o, se_o, _ = oracles.ols_dummy_oracle(y, x, [players, periods],
                                                   players)
        if not (np.allclose([res.coefficients["a"], res.coefficients["b"]],
                            beta_o, rtol=1e-8)
                and np.allclose([res.se["a"], res.se["b"]], se_o, rtol=1e-8)):
            hdfe_ok = False
    ok &= _check("absorbed regression matches explicit-dummy oracle", hdfe_ok)

    engine = MockEngine()
    ev = engine.analyze([], 50)
    ok &= _check("mock engine argmax is the center on an empty board",
                 ev.best_move == "jj"
                 and abs(ev.winrates["jj"] - 0.5394750640449808) < 1e-15)

    print("verify:", "all checks passed" if ok else "FAILURES above")
    return bool(ok)
