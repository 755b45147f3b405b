"""Evaluation: clustering agreement, regression error, topic ablation and
error-fix dates."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .forecast import ForecastConfig, fit, predict
from .ingest import as_date


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """``counts[i, j]``: items in cluster ``i`` and reference class ``j``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2:
            raise ValueError("contingency table must be 2-D")
        if np.any(c < 0):
            raise ValueError("negative count")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_labels(cls, clusters: Sequence, classes: Sequence) -> "ContingencyTable":
        if len(clusters) != len(classes):
            raise ValueError("label sequences differ in length")
        ci = {c: i for i, c in enumerate(dict.fromkeys(clusters))}
        cj = {c: j for j, c in enumerate(dict.fromkeys(classes))}
        t = np.zeros((len(ci), len(cj)), dtype=np.int64)
        for a, b in zip(clusters, classes):
            t[ci[a], cj[b]] += 1
        return cls(t)

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClusterQuality:
    purity: float
    inverse_purity: float
    f_measure: float


@dataclass(frozen=True)
class RegressionReport:
    mae: float
    mse: float
    rmse: float
    r2: float
    r2_undefined: bool = False


@dataclass(frozen=True)
class AblationResult:
    topic: str
    mse_all: float
    mse_without: float
    mse_pct_change: float


def purity_fmeasure(table: ContingencyTable) -> ClusterQuality:
    n = table.n
    if n == 0:
        raise ValueError("empty contingency table")
    purity = table.counts.max(axis=1).sum() / n
    inverse = table.counts.max(axis=0).sum() / n
    f = 2 * purity * inverse / (purity + inverse)
    return ClusterQuality(float(purity), float(inverse), float(f))


def _pairs(x) -> int:
    return sum(math.comb(int(v), 2) for v in np.ravel(x))


def adjusted_rand_index(table: ContingencyTable) -> float:
    """Chance-corrected pair agreement; 1.0 when both partitions are trivial alike."""
    n = table.n
    if n < 2:
        raise ValueError("ARI needs at least two items")
    index = _pairs(table.counts)
    a, b = _pairs(table.row_sums), _pairs(table.col_sums)
    expected = a * b / math.comb(n, 2)
    max_index = (a + b) / 2
    if max_index == expected:
        return 1.0
    return float((index - expected) / (max_index - expected))


def regression_metrics(y, yhat) -> RegressionReport:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError("y and yhat must be equally long, non-empty 1-D series")
    e = y - yhat
    mae = float(np.mean(np.abs(e)))
    mse = float(np.mean(e * e))
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0:
        return RegressionReport(mae, mse, math.sqrt(mse), float("nan"), True)
    return RegressionReport(mae, mse, math.sqrt(mse), 1.0 - float(np.sum(e * e)) / sst)


def ablate_topics(
    train_dates,
    train_y,
    train_regressors: Mapping[str, np.ndarray],
    test_dates,
    test_y,
    test_regressors: Mapping[str, np.ndarray],
    config: ForecastConfig = ForecastConfig(),
) -> list[AblationResult]:
    """MSE percent change on the test span when each topic regressor is withheld."""
    names = list(train_regressors)
    if not names:
        raise ValueError("no regressors to ablate")

    def mse(keep):
        model = fit(train_dates, train_y, {k: train_regressors[k] for k in keep} or None, config)
        fut = {k: test_regressors[k] for k in keep} or None
        return regression_metrics(test_y, predict(model, test_dates, fut).yhat).mse

    base = mse(names)
    out = []
    for name in names:
        m = mse([k for k in names if k != name])
        pct = 100.0 * (m - base) / base if base > 0 else (0.0 if m == base else math.inf)
        out.append(AblationResult(name, base, m, pct))
    return out


def detect_error_fixes(baseline_pred, topic_pred, y, dates=None, counter: Counter | None = None) -> list[tuple]:
    """Dates where the baseline errs and the topic-regressor model does not.

    A date is an error for a prediction when its absolute residual is
    strictly above that prediction's median absolute residual. Returns
    ``(date, fixed)`` for every baseline error date; ``counter`` (if given)
    is incremented for each fixed date so repeated configurations can be
    tallied.
    """
    b = np.asarray(baseline_pred, dtype=float)
    t = np.asarray(topic_pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if not len(y) or b.shape != y.shape or t.shape != y.shape:
        raise ValueError("predictions and target must share a non-empty date axis")
    keys = list(range(len(y))) if dates is None else [as_date(d) for d in dates]
    rb, rt = np.abs(y - b), np.abs(y - t)
    err_b = rb > np.median(rb)
    err_t = rt > np.median(rt)
    out = []
    for i in np.flatnonzero(err_b):
        fixed = not err_t[i]
        out.append((keys[i], bool(fixed)))
        if fixed and counter is not None:
            counter[keys[i]] += 1
    return out


def write_regression_table(rows: Sequence[tuple[str, str, RegressionReport]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "span", "MAE", "MSE", "RMSE", "R2"])
        for config, span, r in rows:
            w.writerow([config, span, f"{r.mae:.4f}", f"{r.mse:.4f}", f"{r.rmse:.4f}", "nan" if r.r2_undefined else f"{r.r2:.4f}"])


def write_ablation_table(results: Sequence[AblationResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["topic", "mse_all", "mse_without", "mse_pct_change"])
        for r in results:
            w.writerow([r.topic, f"{r.mse_all:.6f}", f"{r.mse_without:.6f}", f"{r.mse_pct_change:.3f}"])


def write_cluster_quality(quality: ClusterQuality, ari: float, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for k, v in (("Purity", quality.purity), ("Inverse Purity", quality.inverse_purity),
                     ("F-measure", quality.f_measure), ("ARI", ari)):
            w.writerow([k, f"{v:.3f}"])
