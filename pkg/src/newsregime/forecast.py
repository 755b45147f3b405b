"""Additive forecaster: piecewise-linear trend + Fourier seasonality + linear
regressors, all fitted jointly by ridge-regularised least squares.

Time is measured in days from the first fitted date and rescaled to [0, 1]
over the history; the target is rescaled by its maximum absolute value.
Both scalings are undone in every public output.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .ingest import DateRange, as_date

logger = logging.getLogger(__name__)

MODEL_FORMAT = "newsregime-additive-model"
MODEL_VERSION = 1
YEAR = 365.25
WEEK = 7.0


class SingularDesignError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class ForecastConfig:
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    yearly_order: int = 10
    weekly_order: int = 3
    ridge_lambda: float = 0.1

    def __post_init__(self):
        if self.n_changepoints < 0 or self.yearly_order < 0 or self.weekly_order < 0:
            raise ValueError("changepoint count and Fourier orders must be >= 0")
        if not 0 < self.changepoint_range <= 1:
            raise ValueError("changepoint_range must be in (0, 1]")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")


@dataclass(frozen=True, eq=False)
class AdditiveModel:
    t0: np.datetime64
    t_scale: float  # days spanned by the history
    y_scale: float
    trend_changepoints: np.ndarray  # scaled time positions
    trend_params: np.ndarray  # [base slope k, offset m, delta_1..delta_C] in scaled units
    seasonal_periods: tuple[tuple[float, int], ...]
    seasonal_coeffs: np.ndarray  # (sin, cos) pairs per period and order, concatenated
    regressor_names: tuple[str, ...]
    regressor_coeffs: np.ndarray  # on standardised regressors, scaled-target units
    regressor_mean: np.ndarray
    regressor_std: np.ndarray
    ridge_lambda: float
    fitted_range: DateRange

    @property
    def params(self) -> np.ndarray:
        return np.concatenate([self.trend_params, self.seasonal_coeffs, self.regressor_coeffs])

    @property
    def penalized_params(self) -> np.ndarray:
        """The coefficients the ridge penalty acts on (everything but slope and offset)."""
        return np.concatenate([self.trend_params[2:], self.seasonal_coeffs, self.regressor_coeffs])

    @property
    def base_slope(self) -> float:
        """Initial trend slope in target units per day."""
        return float(self.trend_params[0]) * self.y_scale / self.t_scale

    @property
    def final_slope(self) -> float:
        """Trend slope after the last changepoint, target units per day."""
        k = self.trend_params[0] + self.trend_params[2:].sum()
        return float(k) * self.y_scale / self.t_scale

    def regressor_effects(self) -> dict[str, float]:
        """Coefficients in original units: target change per unit regressor change."""
        eff = self.regressor_coeffs * self.y_scale / self.regressor_std
        return dict(zip(self.regressor_names, map(float, eff)))


@dataclass(frozen=True, eq=False)
class ForecastSeries:
    dates: np.ndarray
    yhat: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    regressors: np.ndarray

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class TopicForecast:
    topic: str
    forecast: ForecastSeries | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.forecast is not None


# ---------------------------------------------------------------- design matrix


def _days(dates, t0) -> np.ndarray:
    d = np.asarray(dates, dtype="datetime64[D]")
    return (d - t0).astype(np.int64).astype(float)


def _fourier(days: np.ndarray, periods) -> np.ndarray:
    cols = []
    for period, order in periods:
        for k in range(1, order + 1):
            ang = 2.0 * np.pi * k * days / period
            cols.append(np.sin(ang))
            cols.append(np.cos(ang))
    return np.column_stack(cols) if cols else np.zeros((len(days), 0))


def _trend_basis(t: np.ndarray, changepoints: np.ndarray) -> np.ndarray:
    hinge = np.maximum(t[:, None] - changepoints[None, :], 0.0)
    return np.column_stack([t, np.ones_like(t), hinge])


def _regressor_matrix(regressors, dates, n) -> tuple[tuple[str, ...], np.ndarray]:
    if regressors is None:
        return (), np.zeros((n, 0))
    if isinstance(regressors, Mapping):
        names = tuple(regressors)
        cols = [np.asarray(regressors[k], dtype=float) for k in names]
    else:
        names, cols = [], []
        for r in regressors:
            names.append(getattr(r, "topic"))
            cols.append(np.asarray(r.values_on(dates) if hasattr(r, "values_on") else r.yhat, dtype=float))
        names = tuple(names)
    if not cols:
        return (), np.zeros((n, 0))
    X = np.column_stack(cols)
    if X.shape[0] != n:
        raise ValueError(f"regressors have {X.shape[0]} rows, expected {n}")
    return names, X


def _changepoint_positions(t: np.ndarray, cfg: ForecastConfig) -> np.ndarray:
    n = len(t)
    last = int(np.floor(cfg.changepoint_range * (n - 1)))
    count = min(cfg.n_changepoints, max(last - 1, 0))
    if count == 0:
        return np.zeros(0)
    idx = np.unique(np.round(np.linspace(0, last, count + 1)[1:]).astype(int))
    return t[idx]


def _active_periods(span_days: float, cfg: ForecastConfig) -> tuple[tuple[float, int], ...]:
    out = []
    if cfg.yearly_order and span_days >= 2 * YEAR:
        out.append((YEAR, cfg.yearly_order))
    if cfg.weekly_order and span_days >= 2 * WEEK:
        out.append((WEEK, cfg.weekly_order))
    return tuple(out)


# ---------------------------------------------------------------- fit / predict


def fit(dates, values, regressors=None, config: ForecastConfig = ForecastConfig()) -> AdditiveModel:
    """Fit the additive model to ``values`` observed on ``dates``.

    ``regressors`` is a mapping name -> array aligned with ``dates``, or a
    sequence of topic series (looked up on ``dates``). Seasonal terms whose
    period is not covered twice by the history are left out.
    """
    d = np.asarray(dates, dtype="datetime64[D]")
    y = np.asarray(values, dtype=float)
    if d.ndim != 1 or len(d) != len(y):
        raise ValueError("dates and values differ in length")
    if len(y) < 2:
        raise ValueError("need at least two observations")
    if np.any(np.diff(d.astype(np.int64)) <= 0):
        raise ValueError("dates must be strictly increasing")
    if not np.all(np.isfinite(y)):
        raise ValueError("target contains NaN or Inf")
    names, R = _regressor_matrix(regressors, d, len(y))
    if not np.all(np.isfinite(R)):
        raise ValueError("regressors contain NaN or Inf")

    t0 = d[0]
    days = _days(d, t0)
    t_scale = float(days[-1]) if days[-1] > 0 else 1.0
    t = days / t_scale
    y_scale = float(np.max(np.abs(y))) or 1.0

    cps = _changepoint_positions(t, config)
    periods = _active_periods(float(days[-1]), config)
    r_mean = R.mean(axis=0) if R.shape[1] else np.zeros(0)
    r_std = R.std(axis=0) if R.shape[1] else np.zeros(0)
    r_std = np.where(r_std > 0, r_std, 1.0)
    Rs = (R - r_mean) / r_std

    trend = _trend_basis(t, cps)
    seas = _fourier(days, periods)
    X = np.hstack([trend, seas, Rs])
    p = X.shape[1]
    penalized = np.ones(p, dtype=bool)
    penalized[:2] = False
    lam = config.ridge_lambda
    target = y / y_scale
    if lam > 0:
        A = np.vstack([X, np.sqrt(lam) * np.diag(penalized.astype(float))[penalized]])
        b = np.concatenate([target, np.zeros(int(penalized.sum()))])
    else:
        A, b = X, target
    coef, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < p:
        raise SingularDesignError(
            f"design matrix is rank deficient ({rank} < {p}); use ridge_lambda > 0"
        )
    nt, ns = trend.shape[1], seas.shape[1]
    return AdditiveModel(
        t0=t0,
        t_scale=t_scale,
        y_scale=y_scale,
        trend_changepoints=cps,
        trend_params=coef[:nt],
        seasonal_periods=periods,
        seasonal_coeffs=coef[nt : nt + ns],
        regressor_names=names,
        regressor_coeffs=coef[nt + ns :],
        regressor_mean=r_mean,
        regressor_std=r_std,
        ridge_lambda=lam,
        fitted_range=DateRange(as_date(d[0]), as_date(d[-1] + np.timedelta64(1, "D"))),
    )


def predict(model: AdditiveModel, horizon_dates, future_regressors=None) -> ForecastSeries:
    """Evaluate the model on ``horizon_dates``; past the history the trend keeps its last slope."""
    d = np.asarray(horizon_dates, dtype="datetime64[D]")
    if len(d) == 0:
        e = np.zeros(0)
        return ForecastSeries(d, e, e, e, e)
    days = _days(d, model.t0)
    t = days / model.t_scale
    trend = _trend_basis(t, model.trend_changepoints) @ model.trend_params
    seasonal = _fourier(days, model.seasonal_periods) @ model.seasonal_coeffs
    if model.regressor_names:
        if future_regressors is None:
            raise ValueError(f"model needs future values for regressors {list(model.regressor_names)}")
        if isinstance(future_regressors, Mapping):
            missing = [k for k in model.regressor_names if k not in future_regressors]
            if missing:
                raise ValueError(f"missing future regressors {missing}")
            R = np.column_stack([np.asarray(future_regressors[k], dtype=float) for k in model.regressor_names])
        else:
            names, R = _regressor_matrix(future_regressors, d, len(d))
            if names != model.regressor_names:
                raise ValueError(f"regressors {names} do not match fitted {model.regressor_names}")
        if R.shape[0] != len(d):
            raise ValueError("future regressors do not cover the horizon")
        reg = ((R - model.regressor_mean) / model.regressor_std) @ model.regressor_coeffs
    else:
        reg = np.zeros(len(d))
    trend, seasonal, reg = (c * model.y_scale for c in (trend, seasonal, reg))
    return ForecastSeries(d, trend + seasonal + reg, trend, seasonal, reg)


def forecast_topic_trends(
    topics: Sequence,
    horizon,
    config: ForecastConfig = ForecastConfig(),
    max_workers: int = 4,
) -> list[TopicForecast]:
    """One regressor-free model per topic, forecast over ``horizon``.

    A topic that cannot be fitted is returned with ``forecast=None`` and the
    error message; the others are unaffected.
    """
    dates = horizon.calendar() if isinstance(horizon, DateRange) else np.asarray(horizon, dtype="datetime64[D]")

    def one(topic):
        try:
            model = fit(topic.dates, topic.counts, None, config)
            return TopicForecast(topic.topic, predict(model, dates))
        except (ValueError, np.linalg.LinAlgError) as exc:
            logger.warning("forecast for topic %r failed: %s", topic.topic, exc)
            return TopicForecast(topic.topic, None, str(exc))

    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        return list(pool.map(one, topics))


# ---------------------------------------------------------------- persistence


def dump_model(model: AdditiveModel, path: str | Path) -> None:
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "t0": str(model.t0),
        "t_scale": model.t_scale,
        "y_scale": model.y_scale,
        "trend_changepoints": model.trend_changepoints.tolist(),
        "trend_params": model.trend_params.tolist(),
        "seasonal_periods": [list(p) for p in model.seasonal_periods],
        "seasonal_coeffs": model.seasonal_coeffs.tolist(),
        "regressor_names": list(model.regressor_names),
        "regressor_coeffs": model.regressor_coeffs.tolist(),
        "regressor_mean": model.regressor_mean.tolist(),
        "regressor_std": model.regressor_std.tolist(),
        "ridge_lambda": model.ridge_lambda,
        "fitted_range": [model.fitted_range.start.isoformat(), model.fitted_range.end.isoformat()],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def load_model(path: str | Path) -> AdditiveModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a model dump")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {doc.get('version')}")
    arr = lambda k: np.asarray(doc[k], dtype=float)
    return AdditiveModel(
        t0=np.datetime64(doc["t0"], "D"),
        t_scale=doc["t_scale"],
        y_scale=doc["y_scale"],
        trend_changepoints=arr("trend_changepoints"),
        trend_params=arr("trend_params"),
        seasonal_periods=tuple((float(p), int(o)) for p, o in doc["seasonal_periods"]),
        seasonal_coeffs=arr("seasonal_coeffs"),
        regressor_names=tuple(doc["regressor_names"]),
        regressor_coeffs=arr("regressor_coeffs"),
        regressor_mean=arr("regressor_mean"),
        regressor_std=arr("regressor_std"),
        ridge_lambda=doc["ridge_lambda"],
        fitted_range=DateRange(*doc["fitted_range"]),
    )


def write_forecast(series: ForecastSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "yhat", "trend", "seasonal", "regressors"])
        for row in zip(series.dates, series.yhat, series.trend, series.seasonal, series.regressors):
            w.writerow([str(row[0]), *(repr(float(v)) for v in row[1:])])


def read_forecast(path: str | Path) -> ForecastSeries:
    cols: dict[str, list] = {k: [] for k in ("date", "yhat", "trend", "seasonal", "regressors")}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            for k in cols:
                cols[k].append(row[k])
    f = lambda k: np.array(cols[k], dtype=float)
    return ForecastSeries(
        np.array(cols["date"], dtype="datetime64[D]"), f("yhat"), f("trend"), f("seasonal"), f("regressors")
    )
