"""Command-line interface.

Subcommands: ingest, novelty, evaluate, selfplay, regress, filter, report,
run, synth, verify. `GO_CF_ENGINE` overrides the engine command and
`GO_CF_CACHE` the evaluation-cache path.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import os
import sys
from pathlib import Path


def _date(text: str) -> _dt.date:
    return _dt.date.fromisoformat(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gocf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse an SGF tree into a corpus db")
    p.add_argument("--corpus", required=True, help="directory of SGF files")
    p.add_argument("--out", required=True, help="corpus db directory")
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--include-handicap", action="store_true")
    p.add_argument("--date-min", type=_date)
    p.add_argument("--date-max", type=_date)

    p = sub.add_parser("novelty", help="first novel move per game")
    p.add_argument("--db", required=True, help="corpus db directory")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--max-move", type=int, default=60)
    p.add_argument("--canonicalize", action="store_true",
                   help="fold the 8 board symmetries before matching")
    p.add_argument("--include-handicap", action="store_true")
    p.add_argument("--inject", help="SGF directory to inject as synthetic")
    p.add_argument("--inject-date", type=_date)
    p.add_argument("--cutoff", type=_date, default=_dt.date(2016, 3, 15))
    p.add_argument("--summary", action="store_true",
                   help="print distribution stats")

    p = sub.add_parser("evaluate", help="engine evaluation of every move")
    p.add_argument("--db", required=True)
    p.add_argument("--engine", default="mock",
                   help='engine command, or "mock"')
    p.add_argument("--visits", type=int, default=50)
    p.add_argument("--komi", type=float, default=6.5)
    p.add_argument("--rules", choices=["japanese", "chinese"],
                   default="japanese")
    p.add_argument("--max-move", type=int, default=60)
    p.add_argument("--out", required=True)
    p.add_argument("--cache", help="evaluation cache path")

    p = sub.add_parser("selfplay", help="engine-vs-engine synthetic games")
    p.add_argument("--engine", default="mock")
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-move", type=int, default=60)
    p.add_argument("--visits", type=int, default=50)
    p.add_argument("--out", required=True, help="output SGF directory")
    p.add_argument("--cache")

    p = sub.add_parser("filter", help="apply an analysis filter")
    p.add_argument("--db", required=True)
    p.add_argument("--evals", required=True)
    p.add_argument("--novelty", required=True)
    p.add_argument("--kind", required=True,
                   help="all|matches-ai|differs-from-ai|stage-bucket:K|"
                        "opponent-deviation-response[:minL]|novel-moves-only|"
                        "novel-differs-from-ai|novel-matches-ai")
    p.add_argument("--out", required=True)

    p = sub.add_parser("regress", help="fixed-effects models")
    p.add_argument("--model", required=True,
                   choices=["table1-m1", "table1-m2", "trend"])
    p.add_argument("--metric", choices=["dqi", "novelty"], default="dqi")
    p.add_argument("--period", choices=["year", "month"], default="year")
    p.add_argument("--cutoff", type=_date, default=_dt.date(2016, 3, 15))
    p.add_argument("--baseline", help="baseline period id (default earliest)")
    p.add_argument("--novelty-both-players", action="store_true",
                   help="attribute a game's novelty to both players")
    p.add_argument("--in", dest="infile", required=True,
                   help="observations CSV (or a player/period/value panel)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="render trend CSVs to SVG")
    p.add_argument("--trend", action="append", required=True,
                   help="trend CSV path (repeatable)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--cutoff-period", help="vertical rule period label")

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("synth", help="generate a synthetic SGF corpus")
    p.add_argument("--games", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--year-min", type=int, default=1950)
    p.add_argument("--year-max", type=int, default=2021)
    p.add_argument("--game-length", type=int, default=60)
    p.add_argument("--out", required=True)

    sub.add_parser("verify", help="oracle checks on a synthetic corpus")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except BrokenPipeError:
        return 1


def _dispatch(args) -> int:
    if args.command == "ingest":
        from .corpus import IngestConfig, ingest_corpus
        cfg = IngestConfig(date_min=args.date_min, date_max=args.date_max,
                           dedup=not args.no_dedup,
                           include_handicap=args.include_handicap)
        db = ingest_corpus(args.corpus, args.out, cfg)
        print(f"ingested {len(db)} games into {args.out}")
        return 0

    if args.command == "novelty":
        return _cmd_novelty(args)

    if args.command == "evaluate":
        return _cmd_evaluate(args)

    if args.command == "selfplay":
        return _cmd_selfplay(args)

    if args.command == "filter":
        return _cmd_filter(args)

    if args.command == "regress":
        return _cmd_regress(args)

    if args.command == "report":
        from .report import render_trend_file
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for trend in args.trend:
            path = Path(trend)
            svg = out_dir / (path.stem + ".svg")
            render_trend_file(path, svg, title=path.stem.replace("_", " "),
                              cutoff_period=args.cutoff_period)
            print(f"wrote {svg}")
        return 0

    if args.command == "run":
        from .pipeline import PipelineConfig, run_pipeline
        config = PipelineConfig.from_file(args.config)
        manifest = run_pipeline(config)
        for name, stage in manifest["stages"].items():
            print(f"{name}: {stage['status']}"
                  f" ({sum(stage['row_counts'].values())} rows)")
        return 0

    if args.command == "synth":
        from .synth import make_corpus, write_corpus_sgf
        records = make_corpus(args.games, args.seed, year_min=args.year_min,
                              year_max=args.year_max,
                              game_length=args.game_length)
        paths = write_corpus_sgf(records, args.out)
        print(f"wrote {len(paths)} games to {args.out}")
        return 0

    if args.command == "verify":
        from .verify import run_verify
        return 0 if run_verify() else 1

    raise AssertionError(f"unhandled command {args.command}")


def _cmd_novelty(args) -> int:
    from .corpus import CorpusDB
    from .novelty import (inject_synthetic_games, novelty_distribution,
                          ordered_for_novelty, scan_records,
                          write_novelty_csv)
    from .sgf import parse_sgf

    db = CorpusDB.load(args.db)
    records = db.records
    if not args.include_handicap:
        records = [r for r in records if not r.setup_stones]
    ordered = ordered_for_novelty(records)
    if args.inject:
        if not args.inject_date:
            print("--inject requires --inject-date", file=sys.stderr)
            return 2
        synthetic = []
        for path in sorted(Path(args.inject).rglob("*.sgf")):
            for rec in parse_sgf(path.read_bytes(), str(path)):
                rec.is_synthetic = True
                synthetic.append(rec)
        nov = inject_synthetic_games(ordered, synthetic, args.inject_date,
                                     args.cutoff, args.max_move,
                                     args.canonicalize)
    else:
        nov = scan_records(ordered, args.max_move, args.canonicalize)
    write_novelty_csv(args.out, nov)
    print(f"wrote {len(nov)} novelty records to {args.out}")
    if args.summary:
        dist = novelty_distribution(nov)
        for k in sorted(dist.cumulative_fraction):
            print(f"move {k:3d}: {dist.counts[k]:6d} games "
                  f"(cumulative {dist.cumulative_fraction[k]:.4f})")
        print(f"absent: {dist.n_absent} ({dist.absent_share:.4f})")
    return 0


def _cmd_evaluate(args) -> int:
    from .corpus import CorpusDB, validate_record
    from .engine import make_engine
    from .evalcache import EvalCache
    from .evaluate import EvalConfig, evaluate_game, write_evals_csv

    db = CorpusDB.load(args.db)
    engine = make_engine(os.environ.get("GO_CF_ENGINE") or args.engine)
    cache_path = os.environ.get("GO_CF_CACHE") or args.cache
    cache = EvalCache(cache_path) if cache_path else None
    cfg = EvalConfig(visits=args.visits, komi=args.komi, ruleset=args.rules,
                     max_move=args.max_move)
    evals = []
    skipped = 0
    try:
        for rec in db.records:
            if rec.setup_stones or validate_record(rec).status != "ok":
                skipped += 1
                continue
            evals.extend(evaluate_game(engine, rec, cfg, cache))
    finally:
        engine.close()
        if cache:
            cache.close()
    write_evals_csv(args.out, evals)
    matched = sum(1 for e in evals if e.matched_ai)
    share = matched / len(evals) if evals else 0.0
    print(f"wrote {len(evals)} decision evaluations to {args.out} "
          f"(matched engine: {share:.1%}; {skipped} games skipped)")
    return 0


def _cmd_selfplay(args) -> int:
    from .engine import make_engine
    from .evalcache import EvalCache
    from .evaluate import selfplay_generate
    from .synth import write_corpus_sgf

    engine = make_engine(os.environ.get("GO_CF_ENGINE") or args.engine)
    cache_path = os.environ.get("GO_CF_CACHE") or args.cache
    cache = EvalCache(cache_path) if cache_path else None
    try:
        records = selfplay_generate(engine, args.games, max_move=args.max_move,
                                    seed=args.seed, visits=args.visits,
                                    cache=cache)
    finally:
        engine.close()
        if cache:
            cache.close()
    write_corpus_sgf(records, args.out)
    print(f"wrote {len(records)} self-play games to {args.out}")
    return 0


def _cmd_filter(args) -> int:
    from .corpus import CorpusDB
    from .evaluate import read_evals_csv
    from .filters import (FilterSpec, apply_filter, build_observations,
                          write_observations_csv)
    from .novelty import read_novelty_csv

    db = CorpusDB.load(args.db)
    evals = read_evals_csv(args.evals)
    novelty = read_novelty_csv(args.novelty)
    obs = build_observations(db.records, evals, novelty)
    spec = FilterSpec.parse(args.kind)
    subset = apply_filter(obs, spec)
    write_observations_csv(args.out, subset)
    print(f"{spec.label()}: kept {len(subset)} of {len(obs)} observations")
    return 0


def _cmd_regress(args) -> int:
    import pandas as pd

    from .filters import read_observations_csv
    from .pipeline import run_table1, run_trend

    header = pd.read_csv(args.infile, nrows=0).columns
    if {"player_id", "period_id", "value"} <= set(header):
        obs = pd.read_csv(args.infile)
    else:
        obs = read_observations_csv(args.infile)
    if args.model in ("table1-m1", "table1-m2"):
        model = 1 if args.model.endswith("m1") else 2
        run_table1(obs, model, args.cutoff, args.out)
        print(f"wrote {args.out}")
        return 0
    n = run_trend(obs, args.metric, args.period, args.baseline, args.out,
                  attribute_both=args.novelty_both_players)
    print(f"wrote {n} trend points to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
