"""End-to-end run orchestration with content-addressed stage skipping.

A run executes ingest -> novelty -> evaluate -> filter -> regress -> report
into one artifact directory. Each stage records a signature (hash of its
config slice plus input digests) and its output digests in the run manifest;
a rerun skips any stage whose signature and outputs are unchanged. Stage
failures keep partial outputs on disk but mark them stale in the manifest.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from . import __version__
from .corpus import CorpusDB, IngestConfig, ingest_corpus, validate_record
from .engine import make_engine
from .evalcache import EvalCache
from .evaluate import EvalConfig, evaluate_game, read_evals_csv, selfplay_generate, write_evals_csv
from .filters import (FilterSpec, apply_filter, attach_after_ai,
                      build_observations, read_observations_csv,
                      write_observations_csv)
from .novelty import (inject_synthetic_games, ordered_for_novelty,
                      read_novelty_csv, scan_records, write_novelty_csv)
from .panel import (PanelObservation, aggregate_player_period,
                    significance_stars, table1_model, trend_series)
from .record import GameRecord
from .report import render_trend_file
from .sgf import parse_sgf

log = logging.getLogger(__name__)

ENGINE_ENV = "GO_CF_ENGINE"
CACHE_ENV = "GO_CF_CACHE"


@dataclass
class TrendSpec:
    metric: str  # dqi | novelty
    period: str  # year | month
    filter: str = "all"

    def label(self) -> str:
        return f"{self.metric}_{self.period}_{self.filter}"


@dataclass
class InjectSpec:
    date: str
    source: str = "selfplay"  # "selfplay" or a directory of SGF files
    games: int = 100


@dataclass
class PipelineConfig:
    corpus: str
    out: str
    engine: str = "mock"
    visits: int = 50
    komi: float = 6.5
    rules: str = "japanese"
    max_move: int = 60
    cutoff: str = "2016-03-15"
    baseline: str | None = None
    seed: int = 0
    dedup: bool = True
    include_handicap: bool = False
    date_min: str | None = None
    date_max: str | None = None
    canonicalize: bool = False
    filters: list[str] = field(default_factory=lambda: ["all"])
    models: list[str] = field(default_factory=list)
    trends: list[TrendSpec] = field(default_factory=list)
    inject: InjectSpec | None = None
    report: bool = True
    cache: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(obj)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "corpus" not in obj or "out" not in obj:
            raise ValueError("config requires 'corpus' and 'out'")
        obj = dict(obj)
        obj["trends"] = [TrendSpec(**t) for t in obj.get("trends", [])]
        if obj.get("inject"):
            obj["inject"] = InjectSpec(**obj["inject"])
        cfg = cls(**obj)
        for model in cfg.models:
            if model not in ("table1-m1", "table1-m2"):
                raise ValueError(f"unknown model {model!r}")
        for t in cfg.trends:
            if t.metric not in ("dqi", "novelty") or t.period not in ("year", "month"):
                raise ValueError(f"bad trend spec {t}")
        for f in cfg.filters:
            FilterSpec.parse(f)
        _parse_date(cfg.cutoff)
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_date(text: str) -> _dt.date:
    return _dt.date.fromisoformat(text)


def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_tree(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(_digest_file(path).encode())
    return h.hexdigest()


def _signature(parts: dict) -> str:
    return hashlib.sha256(json.dumps(parts, sort_keys=True).encode()).hexdigest()


class Runner:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out / "run_manifest.json"
        self.previous = self._load_previous()
        self.manifest = {
            "tool_version": __version__,
            "config_hash": config.hash(),
            "created_utc": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "stages": {},
        }
        self.cutoff = _parse_date(config.cutoff)

    def _load_previous(self) -> dict:
        if self.manifest_path.exists():
            try:
                return json.loads(self.manifest_path.read_text())
            except json.JSONDecodeError:
                return {}
        return {}

    def _outputs_fresh(self, name: str, signature: str) -> bool:
        prev = self.previous.get("stages", {}).get(name)
        if not prev or prev.get("signature") != signature:
            return False
        if prev.get("status") not in ("ran", "skipped"):
            return False
        for rel, digest in prev.get("outputs", {}).items():
            path = self.out / rel
            if not path.exists() or _digest_file(path) != digest:
                return False
        return True

    def _record_stage(self, name: str, signature: str, status: str,
                      outputs: list[Path], row_counts: dict):
        self.manifest["stages"][name] = {
            "signature": signature,
            "status": status,
            "row_counts": row_counts,
            "outputs": {p.relative_to(self.out).as_posix(): _digest_file(p)
                        for p in outputs if p.exists()},
        }

    def _keep_previous(self, name: str):
        prev = self.previous["stages"][name]
        self.manifest["stages"][name] = {**prev, "status": "skipped"}

    def _write_manifest(self):
        self.manifest_path.write_text(
            json.dumps(self.manifest, indent=2, sort_keys=True) + "\n",
            encoding="utf-8")

    def run(self) -> dict:
        stages = [
            ("ingest", self._stage_ingest),
            ("novelty", self._stage_novelty),
            ("evaluate", self._stage_evaluate),
            ("filter", self._stage_filter),
            ("regress", self._stage_regress),
        ]
        if self.config.report:
            stages.append(("report", self._stage_report))
        try:
            for name, fn in stages:
                log.info("stage %s", name)
                fn(name)
        except Exception:
            self._mark_downstream_stale()
            self._write_manifest()
            raise
        self._write_manifest()
        return self.manifest

    def _mark_downstream_stale(self):
        for name, prev in self.previous.get("stages", {}).items():
            if name not in self.manifest["stages"]:
                self.manifest["stages"][name] = {**prev, "status": "stale"}

    # stage implementations ------------------------------------------------

    def _stage_ingest(self, name: str):
        cfg = self.config
        ingest_cfg = IngestConfig(
            date_min=_parse_date(cfg.date_min) if cfg.date_min else None,
            date_max=_parse_date(cfg.date_max) if cfg.date_max else None,
            dedup=cfg.dedup,
            include_handicap=cfg.include_handicap,
        )
        signature = _signature({
            "corpus": _digest_tree(Path(cfg.corpus)),
            "ingest": ingest_cfg.to_dict(),
        })
        out_db = self.out / "corpus"
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        db = ingest_corpus(cfg.corpus, out_db, ingest_cfg)
        # the corpus manifest carries an ingest timestamp, so only the data
        # file participates in digests
        self._record_stage(name, signature, "ran", [out_db / "games.ndjson"],
                           {"games": len(db)})

    def _load_corpus(self) -> list[GameRecord]:
        return CorpusDB.load(self.out / "corpus").records

    def _analysis_records(self, records: list[GameRecord]) -> list[GameRecord]:
        if self.config.include_handicap:
            return records
        return [r for r in records if not r.setup_stones]

    def _stage_novelty(self, name: str):
        cfg = self.config
        games_file = self.out / "corpus" / "games.ndjson"
        inject_part = dataclasses.asdict(cfg.inject) if cfg.inject else None
        if cfg.inject and cfg.inject.source != "selfplay":
            inject_part["source_digest"] = _digest_tree(Path(cfg.inject.source))
        signature = _signature({
            "games": _digest_file(games_file),
            "max_move": cfg.max_move,
            "canonicalize": cfg.canonicalize,
            "include_handicap": cfg.include_handicap,
            "inject": inject_part,
            "seed": cfg.seed if cfg.inject else None,
            "engine": (os.environ.get(ENGINE_ENV) or cfg.engine)
                      if cfg.inject else None,
        })
        out_csv = self.out / "novelty.csv"
        out_injected = self.out / "novelty_injected.csv"
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        records = ordered_for_novelty(self._analysis_records(self._load_corpus()))
        nov = scan_records(records, cfg.max_move, cfg.canonicalize)
        write_novelty_csv(out_csv, nov)
        outputs = [out_csv]
        counts = {"games": len(nov),
                  "absent": sum(1 for r in nov if r.novel_move_number is None)}
        if cfg.inject:
            synthetic = self._injection_games()
            injected = inject_synthetic_games(
                records, synthetic, _parse_date(cfg.inject.date), self.cutoff,
                cfg.max_move, cfg.canonicalize)
            write_novelty_csv(out_injected, injected)
            outputs.append(out_injected)
            counts["injected_games"] = len(synthetic)
        self._record_stage(name, signature, "ran", outputs, counts)

    def _injection_games(self) -> list[GameRecord]:
        cfg = self.config
        if cfg.inject.source == "selfplay":
            engine = self._make_engine()
            try:
                with self._open_cache() as cache:
                    return selfplay_generate(engine, cfg.inject.games,
                                             max_move=cfg.max_move,
                                             seed=cfg.seed,
                                             visits=cfg.visits, cache=cache)
            finally:
                engine.close()
        games = []
        root = Path(cfg.inject.source)
        for path in sorted(root.rglob("*.sgf")):
            for rec in parse_sgf(path.read_bytes(), str(path)):
                rec.is_synthetic = True
                games.append(rec)
        return games

    def _make_engine(self):
        spec = os.environ.get(ENGINE_ENV) or self.config.engine
        return make_engine(spec)

    def _open_cache(self) -> EvalCache:
        path = (os.environ.get(CACHE_ENV) or self.config.cache
                or str(self.out / "evals.cache"))
        return EvalCache(path)

    def _stage_evaluate(self, name: str):
        cfg = self.config
        games_file = self.out / "corpus" / "games.ndjson"
        signature = _signature({
            "games": _digest_file(games_file),
            "engine": os.environ.get(ENGINE_ENV) or cfg.engine,
            "visits": cfg.visits, "komi": cfg.komi, "rules": cfg.rules,
            "max_move": cfg.max_move,
            "include_handicap": cfg.include_handicap,
        })
        out_csv = self.out / "evals.csv"
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        records = self._analysis_records(self._load_corpus())
        engine = self._make_engine()
        eval_cfg = EvalConfig(visits=cfg.visits, komi=cfg.komi,
                              ruleset=cfg.rules, max_move=cfg.max_move)
        evals = []
        skipped = 0
        with self._open_cache() as cache:
            try:
                for rec in records:
                    if validate_record(rec).status != "ok":
                        skipped += 1
                        continue
                    evals.extend(evaluate_game(engine, rec, eval_cfg, cache))
            finally:
                engine.close()
        write_evals_csv(out_csv, evals)
        self._record_stage(name, signature, "ran", [out_csv],
                           {"decisions": len(evals),
                            "invalid_games_skipped": skipped})

    def _stage_filter(self, name: str):
        cfg = self.config
        evals_csv = self.out / "evals.csv"
        novelty_csv = self.out / "novelty.csv"
        inputs = {"evals": _digest_file(evals_csv),
                  "novelty": _digest_file(novelty_csv),
                  "filters": sorted(cfg.filters)}
        injected_csv = self.out / "novelty_injected.csv"
        if cfg.inject:
            inputs["novelty_injected"] = _digest_file(injected_csv)
        signature = _signature(inputs)
        obs_csv = self.out / "observations.csv"
        filtered_dir = self.out / "filtered"
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        records = self._analysis_records(self._load_corpus())
        evals = read_evals_csv(evals_csv)
        novelty = read_novelty_csv(novelty_csv)
        obs = build_observations(records, evals, novelty)
        write_observations_csv(obs_csv, obs)
        outputs = [obs_csv]
        counts = {"observations": len(obs)}
        filtered_dir.mkdir(exist_ok=True)
        for text in cfg.filters:
            spec = FilterSpec.parse(text)
            subset = apply_filter(obs, spec)
            path = filtered_dir / f"{spec.label()}.csv"
            write_observations_csv(path, subset)
            outputs.append(path)
            counts[spec.label()] = len(subset)
        if cfg.inject:
            injected = read_novelty_csv(injected_csv)
            obs_inj = build_observations(records, evals, injected)
            path = self.out / "observations_injected.csv"
            write_observations_csv(path, obs_inj)
            outputs.append(path)
            counts["observations_injected"] = len(obs_inj)
        self._record_stage(name, signature, "ran", outputs, counts)

    def _stage_regress(self, name: str):
        cfg = self.config
        input_files = {"observations": _digest_file(self.out / "observations.csv")}
        for text in cfg.filters:
            label = FilterSpec.parse(text).label()
            input_files[label] = _digest_file(self.out / "filtered" / f"{label}.csv")
        if cfg.inject:
            input_files["observations_injected"] = _digest_file(
                self.out / "observations_injected.csv")
        signature = _signature({
            "inputs": input_files,
            "models": cfg.models,
            "trends": [dataclasses.asdict(t) for t in cfg.trends],
            "cutoff": cfg.cutoff,
            "baseline": cfg.baseline,
        })
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        outputs = []
        counts = {}
        for model_name in cfg.models:
            model = 1 if model_name.endswith("m1") else 2
            obs = read_observations_csv(self.out / "observations.csv")
            path = self.out / f"table1_m{model}.csv"
            run_table1(obs, model, self.cutoff, path)
            outputs.append(path)
            counts[f"table1_m{model}"] = 1
        for trend in cfg.trends:
            label = FilterSpec.parse(trend.filter).label()
            obs = read_observations_csv(self.out / "filtered" / f"{label}.csv")
            path = self.out / f"trend_{trend.label()}.csv"
            n = run_trend(obs, trend.metric, trend.period, cfg.baseline, path)
            outputs.append(path)
            counts[f"trend_{trend.label()}"] = n
            if cfg.inject and trend.metric == "novelty":
                obs_inj = read_observations_csv(
                    self.out / "observations_injected.csv")
                spec = FilterSpec.parse(trend.filter)
                subset = apply_filter(obs_inj, spec)
                path = self.out / f"trend_{trend.label()}_injected.csv"
                n = run_trend(subset, trend.metric, trend.period,
                              cfg.baseline, path)
                outputs.append(path)
                counts[f"trend_{trend.label()}_injected"] = n
        self._record_stage(name, signature, "ran", outputs, counts)

    def _stage_report(self, name: str):
        cfg = self.config
        trend_files = sorted(self.out.glob("trend_*.csv"))
        signature = _signature({
            "trends": {p.name: _digest_file(p) for p in trend_files},
            "cutoff": cfg.cutoff,
        })
        report_dir = self.out / "report"
        if self._outputs_fresh(name, signature):
            self._keep_previous(name)
            return
        report_dir.mkdir(exist_ok=True)
        outputs = []
        for path in trend_files:
            svg = report_dir / (path.stem + ".svg")
            cutoff_period = cfg.cutoff[:7] if "_month_" in path.name else cfg.cutoff[:4]
            render_trend_file(path, svg, title=path.stem.replace("_", " "),
                              cutoff_period=cutoff_period)
            outputs.append(svg)
        summary = report_dir / "summary.txt"
        lines = [f"{p.name}: rendered" for p in trend_files] or ["no trend data"]
        summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
        outputs.append(summary)
        self._record_stage(name, signature, "ran", outputs,
                           {"charts": len(trend_files)})


def run_pipeline(config: PipelineConfig) -> dict:
    return Runner(config).run()


# regression entry points shared by the pipeline and the CLI ---------------

TABLE1_HEADER = ["row_type", "name", "value", "se", "stars"]


def run_table1(obs: pd.DataFrame, model: int, cutoff: _dt.date,
               out_path: str | Path) -> None:
    obs = attach_after_ai(obs, cutoff)
    cols = {
        "dqi": obs["dqi"].to_numpy(),
        "after_ai": obs["after_ai"].to_numpy(),
        "novelty_dummy": obs["novelty_dummy"].to_numpy(),
        "player_id": obs["player_id"].to_numpy(),
        "month_id": obs["month_id"].to_numpy(),
        "move_number": obs["move_number"].to_numpy(),
    }
    result = table1_model(cols, model)
    import csv as _csv
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(TABLE1_HEADER)
        for term in result.coefficients:
            est = result.coefficients[term]
            se = result.se[term]
            w.writerow(["coef", term, repr(est), repr(se),
                        significance_stars(est, se)])
        w.writerow(["fe", "monthly_fixed_effects",
                    "Yes" if model == 2 else "No", "", ""])
        w.writerow(["fe", "move_number_fixed_effects", "Yes", "", ""])
        w.writerow(["fe", "player_fixed_effects", "Yes", "", ""])
        w.writerow(["stat", "observations", str(result.n_obs), "", ""])
        w.writerow(["stat", "clusters", str(result.n_clusters), "", ""])


def trend_rows(obs: pd.DataFrame, metric: str, period: str,
               baseline: str | None, attribute_both: bool = False):
    """(player, date, value) rows -> per-period effects with 95% bands.

    Accepts either move-level observations or an already aggregated panel
    (player_id, period_id, value columns).
    """
    if {"player_id", "period_id", "value"} <= set(obs.columns):
        panel = [PanelObservation(r.player_id, str(r.period_id),
                                  float(r.value),
                                  int(getattr(r, "n_underlying", 1)))
                 for r in obs.itertuples()]
        return trend_series(panel, baseline)
    if metric == "dqi":
        triples = [(r.player_id, _parse_date(r.date), r.dqi)
                   for r in obs.itertuples()]
    elif metric == "novelty":
        novel = obs[obs["novelty_dummy"] == 1]
        triples = []
        for r in novel.itertuples():
            value = r.novelty_index
            if pd.isna(value):
                continue
            triples.append((r.player_id, _parse_date(r.date), float(value)))
            if attribute_both:
                game = obs[obs["game_id"] == r.game_id]
                others = set(game["player_id"]) - {r.player_id}
                for other in others:
                    triples.append((other, _parse_date(r.date), float(value)))
    else:
        raise ValueError(f"unknown metric {metric!r}")
    if not triples:
        return []
    panel = aggregate_player_period(triples, period)
    return trend_series(panel, baseline)


def run_trend(obs: pd.DataFrame, metric: str, period: str,
              baseline: str | None, out_path: str | Path,
              attribute_both: bool = False) -> int:
    points = trend_rows(obs, metric, period, baseline, attribute_both)
    import csv as _csv
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = _csv.writer(fh)
        w.writerow(["period", "effect", "ci_low", "ci_high"])
        for p in points:
            w.writerow([p.period_id, repr(p.effect), repr(p.ci_low),
                        repr(p.ci_high)])
    return len(points)
