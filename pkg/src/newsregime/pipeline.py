"""Stage orchestration over a run directory.

Each stage writes its artifacts to ``<run_dir>/<stage>/`` together with a
``manifest.json`` holding the hashes of everything it read, the hash of the
config sections it depends on, and library versions. A rerun whose inputs
and config hash match is skipped.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import platform
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
import scipy

from . import __version__
from .changepoint import PeltConfig, evaluate_breakpoints, pelt, read_breakpoints, read_reference_events, write_breakpoints
from .clustering import HdbscanParams, hdbscan, read_cluster_dump, write_cluster_dump
from .config import RunConfig
from .evaluation import (
    ContingencyTable,
    ablate_topics,
    adjusted_rand_index,
    detect_error_fixes,
    purity_fmeasure,
    regression_metrics,
    write_ablation_table,
    write_cluster_quality,
    write_regression_table,
)
from .forecast import ForecastConfig, ForecastSeries, dump_model, fit, forecast_topic_trends, predict, read_forecast, write_forecast
from .ingest import (
    DateRange,
    SplitSpec,
    fetch_stock_history,
    load_corpus,
    make_splits,
    preprocess_corpus,
    read_stock,
    write_corpus,
    write_stock,
)
from .plotting import emit_bar_plot, emit_plot
from .segsel import (
    CoefficientSet,
    Segment,
    dataset_characteristics,
    midpoint_segments,
    rank_segments,
    score_segment,
    solve_coefficients,
    write_breakdown_report,
    write_score_report,
)
from .topics import (
    ChatLabeler,
    TopicSeries,
    align_topic_series,
    build_topic_clusters,
    build_topic_series,
    label_cluster_stub,
    read_topic_series,
    read_topics,
    smooth_series,
    write_topic_series,
    write_topics,
)
from .vectors import load_embeddings, load_reduced, pca_reduce, write_vectors

logger = logging.getLogger(__name__)

STAGES = (
    "ingest", "reduce", "cluster", "label", "series", "breakpoints",
    "segment", "select", "forecast", "evaluate", "ablate",
)

REQUIRES = {
    "ingest": (),
    "reduce": (),
    "cluster": ("reduce",),
    "label": ("cluster", "ingest"),
    "series": ("label", "ingest"),
    "breakpoints": ("series", "ingest"),
    "segment": ("breakpoints", "ingest"),
    "select": ("segment", "series", "ingest"),
    "forecast": ("select", "series", "ingest"),
    "evaluate": ("forecast", "cluster", "ingest"),
    "ablate": ("select", "series", "ingest"),
}

PRODUCES = {
    "ingest": "ingested corpus and prices",
    "reduce": "reduced vectors",
    "cluster": "keyword clusters",
    "label": "topic labels",
    "series": "topic series",
    "breakpoints": "breakpoints",
    "segment": "training segments",
    "select": "segment scores",
    "forecast": "forecasts",
}

# files each stage must leave in <run_dir>/<stage>/
ARTIFACTS = {
    "ingest": ("corpus.csv", "stock.csv", "splits.json", "ingest_report.json"),
    "reduce": ("reduced.vec",),
    "cluster": ("clusters.csv",),
    "label": ("topics.json",),
    "series": ("topic_series.csv", "topic_series.svg"),
    "breakpoints": ("breakpoints.csv", "source_topic.json", "breakpoint_eval.csv", "breakpoints.svg"),
    "segment": ("segments.csv",),
    "select": ("topic_forecasts.csv", "coefficients.json", "segment_scores.csv", "segment_breakdown.csv"),
    "forecast": (
        "forecast_baseline.csv", "model_baseline.json", "forecast_topics.csv", "model_topics.json",
        "forecast_topics_segment.csv", "model_topics_segment.json", "forecast_vs_actual.svg",
    ),
    "evaluate": ("metrics.csv", "metrics.svg", "error_fixes.csv", "cluster_quality.csv"),
    "ablate": ("ablation.csv", "ablation.svg"),
}

# config sections whose values change a stage's output
SECTIONS = {
    "ingest": ("ingest",),
    "reduce": ("reduce",),
    "cluster": ("cluster",),
    "label": ("label",),
    "series": ("series",),
    "breakpoints": ("breakpoints",),
    "segment": ("segment",),
    "select": ("select", "forecast"),
    "forecast": ("forecast", "select"),
    "evaluate": (),
    "ablate": ("forecast",),
}

# external files read by a stage, by ``paths`` attribute
EXTERNAL = {
    "ingest": ("corpus", "stock"),
    "reduce": ("vectors",),
    "breakpoints": ("reference_events",),
    "evaluate": ("keyword_classes",),
}


class MissingUpstreamError(RuntimeError):
    """A stage ran before the stage producing its inputs."""


@dataclass(frozen=True)
class StageResult:
    stage: str
    status: str  # "ran" or "up-to-date"
    outputs: tuple[str, ...]


# ---------------------------------------------------------------- hashing


def _sha_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _versions() -> dict:
    return {"newsregime": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _input_hashes(name: str, cfg: RunConfig, run_dir: Path) -> dict:
    out = {}
    for dep in REQUIRES[name]:
        manifest = run_dir / dep / "manifest.json"
        if not manifest.exists():
            raise MissingUpstreamError(f"{name} requires {PRODUCES[dep]} (run `{dep}` first)")
        for fname, digest in json.loads(manifest.read_text())["outputs"].items():
            out[f"{dep}/{fname}"] = digest
    for attr in EXTERNAL.get(name, ()):
        ref = getattr(cfg.paths, attr)
        if ref is None:
            continue
        if attr == "stock" and ref.startswith(("http://", "https://")):
            out["paths.stock"] = hashlib.sha256(ref.encode()).hexdigest()
        else:
            out[f"paths.{attr}"] = _sha_file(cfg.resolve(ref))
    return out


# ---------------------------------------------------------------- helpers


def _full_range(cfg: RunConfig) -> DateRange:
    return DateRange(cfg.ingest.start, cfg.ingest.end)


def _load_splits(run_dir: Path) -> SplitSpec:
    d = json.loads((run_dir / "ingest" / "splits.json").read_text())
    return SplitSpec(*(DateRange(*d[k]) for k in ("train", "train_val", "test", "test_val")))


def _restrict(series: TopicSeries, rng: DateRange) -> TopicSeries:
    m = rng.contains(series.dates)
    return TopicSeries(series.topic, series.dates[m], np.asarray(series.counts, dtype=float)[m])


def resolve_topic(name: str | None, clusters) -> str:
    """Match a configured topic by label, then by member keyword."""
    if not clusters:
        raise ValueError("no topics available")
    if name is None:
        return clusters[0].label
    for c in clusters:
        if c.label.lower() == name.lower():
            return c.label
    for c in clusters:
        if name.lower() in c.member_keywords:
            return c.label
    raise ValueError(f"no topic label or member keyword matches {name!r}")


def _forecast_config(cfg: RunConfig) -> ForecastConfig:
    f = cfg.forecast
    return ForecastConfig(f.n_changepoints, f.changepoint_range, f.yearly_order, f.weekly_order, f.ridge_lambda)


def _write_topic_forecasts(results, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["topic", "date", "yhat", "trend", "seasonal", "regressors"])
        for r in results:
            s = r.forecast
            for row in zip(s.dates, s.yhat, s.trend, s.seasonal, s.regressors):
                w.writerow([r.topic, str(row[0]), *(repr(float(v)) for v in row[1:])])


def _read_topic_forecasts(path) -> dict[str, ForecastSeries]:
    acc: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            acc.setdefault(row["topic"], []).append(row)
    out = {}
    for topic, rows in acc.items():
        col = lambda k: np.array([float(r[k]) for r in rows])
        out[topic] = ForecastSeries(
            np.array([r["date"] for r in rows], dtype="datetime64[D]"),
            col("yhat"), col("trend"), col("seasonal"), col("regressors"),
        )
    return out


def _read_segments(path) -> list[Segment]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [Segment(r["start"], r["end"], r["source_topic"]) for r in csv.DictReader(fh)]


def _best_segment(run_dir: Path) -> Segment:
    with open(run_dir / "select" / "segment_scores.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    best = min(rows, key=lambda r: int(r["rank"]))
    return Segment(best["start"], best["end"])


def _test_dates(run_dir: Path, stock=None):
    stock = stock or read_stock(run_dir / "ingest" / "stock.csv")
    test = _load_splits(run_dir).test
    return stock.dates[test.contains(stock.dates)]


# ---------------------------------------------------------------- stages


def _stage_ingest(cfg: RunConfig, run_dir: Path, out: Path) -> list[str]:
    rng = _full_range(cfg)
    corpus = load_corpus(cfg.resolve(cfg.paths.corpus))
    kept, report = preprocess_corpus(corpus, cfg.ingest.sections)
    kept = [a for a in kept if rng.start <= a.date < rng.end]
    write_corpus(kept, out / "corpus.csv")
    src = cfg.paths.stock
    src = src if src.startswith(("http://", "https://")) else cfg.resolve(src)
    history = fetch_stock_history(cfg.ingest.symbol, rng, src)
    write_stock(history.to_pct_change(), out / "stock.csv")
    splits = make_splits(rng, cfg.ingest.splits)
    (out / "splits.json").write_text(json.dumps(splits.as_dict(), indent=1))
    (out / "ingest_report.json").write_text(
        json.dumps({"kept": report.kept, "removed_empty": report.removed_empty,
                    "removed_section": report.removed_section, "in_range": len(kept),
                    "trading_days": len(history)}, indent=1)
    )
    return ["corpus.csv", "stock.csv", "splits.json", "ingest_report.json"]


def _stage_reduce(cfg, run_dir, out):
    path = cfg.resolve(cfg.paths.vectors)
    if cfg.reduce.method == "pca":
        table = pca_reduce(load_embeddings(path), cfg.reduce.n_components)
    else:
        table = load_reduced(path, cfg.reduce.n_components)
    write_vectors(table, out / "reduced.vec")
    return ["reduced.vec"]


def _stage_cluster(cfg, run_dir, out):
    table = load_reduced(run_dir / "reduce" / "reduced.vec", cfg.reduce.n_components)
    result = hdbscan(table, HdbscanParams(cfg.cluster.min_cluster_size, cfg.cluster.min_samples))
    if result.cluster_count == 0:
        raise ValueError("clustering found no clusters; lower cluster.min_cluster_size")
    write_cluster_dump(result, out / "clusters.csv")
    return ["clusters.csv"]


def _stage_label(cfg, run_dir, out):
    result = read_cluster_dump(run_dir / "cluster" / "clusters.csv")
    corpus = load_corpus(run_dir / "ingest" / "corpus.csv")
    if cfg.label.method == "stub":
        labeler = label_cluster_stub
    else:
        cache = cfg.resolve(cfg.paths.label_cache) if cfg.paths.label_cache else run_dir / "label-cache"
        labeler = ChatLabeler(cfg.label.base_url, cfg.label.model, cache_dir=cache, min_interval=cfg.label.min_interval)
    clusters = build_topic_clusters(result, corpus, labeler, cfg.label.top_k, cfg.workers)
    write_topics(clusters, out / "topics.json")
    return ["topics.json"]


def _stage_series(cfg, run_dir, out):
    clusters = read_topics(run_dir / "label" / "topics.json")
    corpus = load_corpus(run_dir / "ingest" / "corpus.csv")
    stock = read_stock(run_dir / "ingest" / "stock.csv")
    raw = build_topic_series(corpus, clusters, _full_range(cfg).calendar(), cfg.series.mode)
    series = []
    for s in raw:
        s = align_topic_series(s, stock.dates, cfg.series.alignment)
        if cfg.series.smooth_window > 1:
            s = smooth_series(s, min(cfg.series.smooth_window, len(s)))
        series.append(s)
    write_topic_series(series, out / "topic_series.csv")
    emit_plot([(s.topic, s.dates, s.counts) for s in series], out / "topic_series.svg", "Topic frequency")
    return ["topic_series.csv", "topic_series.svg"]


def _stage_breakpoints(cfg, run_dir, out):
    clusters = read_topics(run_dir / "label" / "topics.json")
    series = read_topic_series(run_dir / "series" / "topic_series.csv")
    train = _load_splits(run_dir).train
    bc = cfg.breakpoints
    pcfg = PeltConfig(bc.penalty, bc.min_segment_length, bc.bandwidth)
    source = resolve_topic(bc.topic, clusters)

    def detect(s):
        s = _restrict(s, train)
        return s.topic, pelt(s.counts, pcfg, dates=s.dates)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = dict(pool.map(detect, series))
    write_breakpoints(results, out / "breakpoints.csv")
    (out / "source_topic.json").write_text(json.dumps({"source_topic": source}))
    outputs = ["breakpoints.csv", "source_topic.json"]
    ref_path = cfg.resolve(cfg.paths.reference_events)
    if ref_path is not None:
        refs = [r for r in read_reference_events(ref_path) if train.start <= r < train.end]
        with open(out / "breakpoint_eval.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["topic", "source", "detected", "references", "precision", "recall", "f_score", "tolerance_days"])
            for topic, bps in results.items():
                sc = evaluate_breakpoints(bps, refs, bc.tolerance_days)
                w.writerow([topic, int(topic == source), len(bps), len(refs),
                            f"{sc.precision:.4f}", f"{sc.recall:.4f}", f"{sc.f_score:.4f}", bc.tolerance_days])
        outputs.append("breakpoint_eval.csv")
    src = _restrict(next(s for s in series if s.topic == source), train)
    emit_plot([(source, src.dates, src.counts)], out / "breakpoints.svg",
              f"Breakpoints in {source}", vlines=results[source].dates)
    outputs.append("breakpoints.svg")
    return outputs


def _stage_segment(cfg, run_dir, out):
    source = json.loads((run_dir / "breakpoints" / "source_topic.json").read_text())["source_topic"]
    bps = read_breakpoints(run_dir / "breakpoints" / "breakpoints.csv").get(source)
    dates = bps.dates if bps is not None else ()
    train = _load_splits(run_dir).train
    segs = midpoint_segments(dates, train, cfg.segment.min_span_days, cfg.segment.mode, source)
    with open(out / "segments.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_index", "start", "end", "source_topic"])
        for i, s in enumerate(segs, start=1):
            w.writerow([i, s.start.isoformat(), s.end.isoformat(), s.source_topic])
    return ["segments.csv"]


def _stage_select(cfg, run_dir, out):
    series = read_topic_series(run_dir / "series" / "topic_series.csv")
    stock = read_stock(run_dir / "ingest" / "stock.csv")
    splits = _load_splits(run_dir)
    segments = _read_segments(run_dir / "segment" / "segments.csv")
    test_dates = _test_dates(run_dir, stock)
    train_series = [_restrict(s, splits.train) for s in series]
    fc = forecast_topic_trends(train_series, test_dates, _forecast_config(cfg), cfg.workers)
    good = [r for r in fc if r.ok]
    for r in fc:
        if not r.ok:
            logger.warning("topic %r left out of scoring: %s", r.topic, r.error)
    if not good:
        raise ValueError("no topic could be forecast")
    _write_topic_forecasts(good, out / "topic_forecasts.csv")

    train_stock = stock.restrict(splits.train)
    if cfg.select.coefficients:
        c = cfg.select.coefficients
        coeffs = CoefficientSet(float(c["alpha"]), float(c["beta"]), float(c["gamma"]))
    else:
        total = np.sum([s.counts for s in train_series], axis=0)
        coeffs = solve_coefficients(dataset_characteristics(total, train_stock.pct_change, size=len(train_stock)))
    (out / "coefficients.json").write_text(json.dumps({
        "alpha": coeffs.alpha, "beta": coeffs.beta, "gamma": coeffs.gamma,
        "characteristics": coeffs.characteristics.as_dict() if coeffs.characteristics else None,
    }, indent=1))

    by_topic = {s.topic: s for s in series}
    topics = [by_topic[r.topic] for r in good]
    forecasts = [r.forecast for r in good]
    scores = []
    for seg in segments:
        try:
            scores.append(score_segment(seg, topics, stock, forecasts, coeffs, cfg.select.nd_variant))
        except ValueError as exc:
            logger.warning("segment %s..%s not scored: %s", seg.start, seg.end, exc)
    if not scores:
        raise ValueError("no segment could be scored")
    ranked = rank_segments(scores, cfg.select.score_direction)
    write_score_report(ranked, out / "segment_scores.csv")
    write_breakdown_report(ranked, out / "segment_breakdown.csv")
    return ["topic_forecasts.csv", "coefficients.json", "segment_scores.csv", "segment_breakdown.csv"]


def _regressor_inputs(cfg, run_dir, series, fit_dates, test_dates):
    """Regressor matrices for fitting and for the test horizon."""
    train = {s.topic: s.values_on(fit_dates) for s in series}
    if cfg.forecast.observed_regressors:
        future = {s.topic: s.values_on(test_dates) for s in series}
    else:
        fc = _read_topic_forecasts(run_dir / "select" / "topic_forecasts.csv")
        future = {t: fc[t].yhat for t in train if t in fc}
        train = {t: v for t, v in train.items() if t in future}
    return train, future


def _stage_forecast(cfg, run_dir, out):
    series = read_topic_series(run_dir / "series" / "topic_series.csv")
    stock = read_stock(run_dir / "ingest" / "stock.csv")
    splits = _load_splits(run_dir)
    test_dates = _test_dates(run_dir, stock)
    fcfg = _forecast_config(cfg)
    best = _best_segment(run_dir)
    runs = {
        "baseline": (splits.train, False),
        "topics": (splits.train, True),
        "topics_segment": (DateRange(best.start, best.end), True),
    }
    outputs, curves = [], [("actual", test_dates, stock.pct_change[splits.test.contains(stock.dates)])]
    for name, (rng, with_topics) in runs.items():
        part = stock.restrict(rng)
        regs, future = (None, None)
        if with_topics:
            regs, future = _regressor_inputs(cfg, run_dir, series, part.dates, test_dates)
        model = fit(part.dates, part.pct_change, regs, fcfg)
        pred = predict(model, test_dates, future)
        write_forecast(pred, out / f"forecast_{name}.csv")
        dump_model(model, out / f"model_{name}.json")
        outputs += [f"forecast_{name}.csv", f"model_{name}.json"]
        curves.append((name, pred.dates, pred.yhat))
    emit_plot(curves, out / "forecast_vs_actual.svg", "Forecast vs actual percent change")
    outputs.append("forecast_vs_actual.svg")
    return outputs


def _stage_evaluate(cfg, run_dir, out):
    stock = read_stock(run_dir / "ingest" / "stock.csv")
    test = _load_splits(run_dir).test
    y = stock.pct_change[test.contains(stock.dates)]
    span = f"{test.start.isoformat()}..{test.end.isoformat()}"
    preds = {
        name: read_forecast(run_dir / "forecast" / f"forecast_{name}.csv").yhat
        for name in ("baseline", "topics", "topics_segment")
    }
    reports = [(name, span, regression_metrics(y, p)) for name, p in preds.items()]
    write_regression_table(reports, out / "metrics.csv")
    emit_bar_plot([r[0] for r in reports], [r[2].mse for r in reports], out / "metrics.svg", "Test MSE")

    counter: Counter = Counter()
    dates = stock.dates[test.contains(stock.dates)]
    per_config = {
        name: dict(detect_error_fixes(preds["baseline"], preds[name], y, dates, counter))
        for name in ("topics", "topics_segment")
    }
    with open(out / "error_fixes.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "config", "fixed", "times_fixed"])
        for name, rows in per_config.items():
            for d, fixed in rows.items():
                w.writerow([d.isoformat(), name, int(fixed), counter[d]])
    outputs = ["metrics.csv", "metrics.svg", "error_fixes.csv"]

    classes_path = cfg.resolve(cfg.paths.keyword_classes)
    if classes_path is not None:
        with open(classes_path, newline="", encoding="utf-8") as fh:
            truth = {r["keyword"]: r["class"] for r in csv.DictReader(fh)}
        result = read_cluster_dump(run_dir / "cluster" / "clusters.csv")
        kws = [k for k in result.keywords if k in truth]
        table = ContingencyTable.from_labels([result.label_of(k) for k in kws], [truth[k] for k in kws])
        write_cluster_quality(purity_fmeasure(table), adjusted_rand_index(table), out / "cluster_quality.csv")
        outputs.append("cluster_quality.csv")
    return outputs


def _stage_ablate(cfg, run_dir, out):
    series = read_topic_series(run_dir / "series" / "topic_series.csv")
    stock = read_stock(run_dir / "ingest" / "stock.csv")
    splits = _load_splits(run_dir)
    test_dates = _test_dates(run_dir, stock)
    train = stock.restrict(splits.train)
    regs, future = _regressor_inputs(cfg, run_dir, series, train.dates, test_dates)
    y_test = stock.pct_change[splits.test.contains(stock.dates)]
    results = ablate_topics(train.dates, train.pct_change, regs, test_dates, y_test, future, _forecast_config(cfg))
    write_ablation_table(results, out / "ablation.csv")
    emit_bar_plot([r.topic for r in results], [r.mse_pct_change for r in results], out / "ablation.svg",
                  "MSE % change when the topic is withheld")
    return ["ablation.csv", "ablation.svg"]


STAGE_FUNCS: dict[str, Callable] = {
    "ingest": _stage_ingest,
    "reduce": _stage_reduce,
    "cluster": _stage_cluster,
    "label": _stage_label,
    "series": _stage_series,
    "breakpoints": _stage_breakpoints,
    "segment": _stage_segment,
    "select": _stage_select,
    "forecast": _stage_forecast,
    "evaluate": _stage_evaluate,
    "ablate": _stage_ablate,
}


def run_stage(name: str, cfg: RunConfig, run_dir: str | Path, force: bool = False) -> StageResult:
    """Run one stage, or skip it when its manifest shows nothing changed."""
    if name not in STAGE_FUNCS:
        raise ValueError(f"unknown stage {name!r}")
    run_dir = Path(run_dir)
    inputs = _input_hashes(name, cfg, run_dir)
    config_hash = cfg.section_hash(*SECTIONS[name]) if SECTIONS[name] else hashlib.sha256(b"").hexdigest()
    out = run_dir / name
    manifest_path = out / "manifest.json"
    if not force and manifest_path.exists():
        old = json.loads(manifest_path.read_text())
        fresh = (
            old.get("inputs") == inputs
            and old.get("config_hash") == config_hash
            and old.get("versions") == _versions()
            and all((out / f).exists() and _sha_file(out / f) == h for f, h in old.get("outputs", {}).items())
        )
        if fresh:
            logger.info("%s: up-to-date", name)
            return StageResult(name, "up-to-date", tuple(old["outputs"]))
    out.mkdir(parents=True, exist_ok=True)
    files = STAGE_FUNCS[name](cfg, run_dir, out)
    missing = [f for f in ARTIFACTS[name] if not (out / f).exists()]
    if missing:
        raise RuntimeError(f"{name} did not write {missing}")
    manifest = {
        "stage": name,
        "inputs": inputs,
        "config_hash": config_hash,
        "config": {s: cfg.to_dict()[s] for s in SECTIONS[name]},
        "seed": cfg.seed,
        "versions": _versions(),
        "outputs": {f: _sha_file(out / f) for f in files},
    }
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return StageResult(name, "ran", tuple(files))


def run_pipeline(cfg: RunConfig, run_dir: str | Path, force: bool = False) -> list[StageResult]:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.yaml").write_text(cfg.dumps(), encoding="utf-8")
    return [run_stage(s, cfg, run_dir, force) for s in STAGES]
