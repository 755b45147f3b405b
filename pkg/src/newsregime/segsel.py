"""Training-window selection: cut the training range into segments around
detected breakpoints and rank each segment by how its topic trends relate to
the stock series and to forecast topic trends."""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from numba import njit
from scipy.special import betainc, expit

from .changepoint import BreakpointSet
from .ingest import DateRange, StockSeries, as_date

LOWEST_FIRST = "paper"
SIMILARITY = "similarity"
RATIO_SENTINEL = 1e3


@dataclass(frozen=True)
class Segment:
    """Half-open date range ``[start, end)``."""

    start: dt.date
    end: dt.date
    source_topic: str = ""

    def __post_init__(self):
        object.__setattr__(self, "start", as_date(self.start))
        object.__setattr__(self, "end", as_date(self.end))
        if self.end <= self.start:
            raise ValueError(f"empty segment {self.start}..{self.end}")

    @property
    def days(self) -> int:
        return (self.end - self.start).days

    def mask(self, dates) -> np.ndarray:
        return DateRange(self.start, self.end).contains(dates)


@dataclass(frozen=True)
class SimilarityBreakdown:
    topic: str
    pw: float
    cs: float
    nd: float
    pearson_r: float
    pearson_p: float
    dtw_raw: float
    w: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Characteristics:
    size: int
    volatility: float
    noise: float
    trend_strength: float
    periodicity: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("size", "volatility", "noise", "trend_strength", "periodicity")}


@dataclass(frozen=True)
class CoefficientSet:
    alpha: float
    beta: float
    gamma: float
    characteristics: Characteristics | None = None

    def __post_init__(self):
        vals = (self.alpha, self.beta, self.gamma)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValueError(f"coefficients must lie in [0, 1]: {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ValueError(f"coefficients must sum to 1, got {sum(vals)!r}")


@dataclass(frozen=True)
class SegmentScore:
    segment: Segment
    per_topic: tuple[SimilarityBreakdown, ...]
    total: float
    rank: int = 0


# ---------------------------------------------------------------- segmentation


def _breakpoint_dates(breakpoints) -> list[dt.date]:
    if isinstance(breakpoints, BreakpointSet):
        breakpoints = breakpoints.dates
    return sorted(as_date(b) for b in breakpoints)


def midpoint_segments(
    breakpoints,
    rng: DateRange,
    min_span: int = 0,
    mode: str = "midpoint",
    source_topic: str = "",
) -> list[Segment]:
    """Cut ``rng`` at midpoints between consecutive breakpoints.

    ``mode="direct"`` cuts at the breakpoints themselves. Segments shorter
    than ``min_span`` days are merged into the previous segment (the first
    one into its successor), so every returned segment spans ``min_span``
    days unless the whole range is shorter.
    """
    if mode not in ("midpoint", "direct"):
        raise ValueError(f"unknown segmentation mode {mode!r}")
    bps = _breakpoint_dates(breakpoints)
    for b in bps:
        if not rng.start <= b < rng.end:
            raise ValueError(f"breakpoint {b} outside {rng.start}..{rng.end}")
    if mode == "direct":
        cuts = bps
    else:
        cuts = [a + dt.timedelta(days=(b - a).days // 2) for a, b in zip(bps[:-1], bps[1:])]
    bounds = sorted({rng.start, *cuts, rng.end})
    pieces = [[a, b] for a, b in zip(bounds[:-1], bounds[1:])]
    merged: list[list[dt.date]] = []
    for p in pieces:
        if merged and (p[1] - p[0]).days < min_span:
            merged[-1][1] = p[1]
        else:
            merged.append(p)
    if len(merged) > 1 and (merged[0][1] - merged[0][0]).days < min_span:
        merged[1][0] = merged[0][0]
        merged.pop(0)
    return [Segment(a, b, source_topic) for a, b in merged]


# ---------------------------------------------------------------- similarity terms


class PearsonResult(NamedTuple):
    pw: float
    r: float
    p: float
    constant: bool = False


def pearson_weight(T, S) -> PearsonResult:
    """``pw = |r| * (1 - p)`` with a two-sided t-test p-value on ``n - 2`` d.o.f."""
    x = np.asarray(T, dtype=float)
    y = np.asarray(S, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("series must be 1-D and equally long")
    n = len(x)
    if n < 3:
        raise ValueError("pearson weight needs at least 3 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        return PearsonResult(0.0, float("nan"), float("nan"), True)
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        t2 = r * r * df / (1.0 - r * r)
        p = float(betainc(0.5 * df, 0.5, df / (df + t2)))
    return PearsonResult(abs(r) * (1.0 - p), r, p, False)


def cosine_distance(T, S) -> float:
    x = np.asarray(T, dtype=float)
    y = np.asarray(S, dtype=float)
    if x.shape != y.shape:
        raise ValueError("series differ in length")
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise ValueError("cosine distance of a zero vector is undefined")
    return float(1.0 - np.clip((x @ y) / (nx * ny), -1.0, 1.0))


@njit(cache=True)
def _dtw_kernel(a, b, band):
    n, m = len(a), len(b)
    D = np.full((n + 1, m + 1), np.inf)
    D[0, 0] = 0.0
    for i in range(1, n + 1):
        lo, hi = 1, m
        if band >= 0:
            lo = max(1, i - band)
            hi = min(m, i + band)
        for j in range(lo, hi + 1):
            best = D[i - 1, j - 1]
            if D[i - 1, j] < best:
                best = D[i - 1, j]
            if D[i, j - 1] < best:
                best = D[i, j - 1]
            D[i, j] = abs(a[i - 1] - b[j - 1]) + best
    return D[n, m]


def dtw(A, B, window: int | None = None) -> float:
    """Dynamic time warping distance with absolute-difference local cost.

    ``window`` is a Sakoe-Chiba band half-width in samples; it must be at
    least ``|len(A) - len(B)|`` so the two corners stay connected.
    """
    a = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(B, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("dtw needs non-empty series")
    band = -1
    if window is not None:
        if window < abs(len(a) - len(b)):
            raise ValueError(f"band {window} cannot connect series of lengths {len(a)} and {len(b)}")
        band = int(window)
    return float(_dtw_kernel(a, b, band))


def normalized_dtw(P, T, variant: str = "clamp", window: int | None = None) -> tuple[float, float]:
    """Return ``(nd, raw_dtw)``.

    ``clamp``: ``nd = 1 - d / max(d, 1)``, which is 0 once ``d >= 1``.
    ``path``: divides by ``len(P) + len(T)`` first, a bound on the warping-path length.
    """
    d = dtw(P, T, window)
    if variant == "clamp":
        x = d
    elif variant == "path":
        x = d / (len(P) + len(T))
    else:
        raise ValueError(f"unknown nd variant {variant!r}")
    return 1.0 - x / max(x, 1.0), d


def minmax(x) -> np.ndarray:
    """Rescale to [0, 1]; a constant series maps to zeros."""
    x = np.asarray(x, dtype=float)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


# ---------------------------------------------------------------- coefficients


def _centred_mean(x: np.ndarray, window: int) -> np.ndarray:
    n = len(x)
    left = (window - 1) // 2
    right = window - 1 - left
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def dataset_characteristics(values, pct_change=None, size: int | None = None, window: int = 30) -> Characteristics:
    """Summary statistics that drive the coefficient solve.

    ``values`` is the series whose shape is described (noise, trend,
    periodicity); volatility comes from ``pct_change`` (percent units) when
    given, else from the relative change of ``values``.
    """
    x = np.asarray(values, dtype=float)
    if len(x) < 3 or not np.all(np.isfinite(x)):
        raise ValueError("need at least 3 finite values")
    if pct_change is None:
        prev = np.where(x[:-1] == 0, np.nan, x[:-1])
        pc = 100.0 * np.diff(x) / prev
        pc = pc[np.isfinite(pc)]
    else:
        pc = np.asarray(pct_change, dtype=float)
    vol_raw = float(np.std(pc)) / 100.0 if len(pc) else 0.0
    volatility = float(2.0 * expit(vol_raw / 0.1) - 1.0)
    std = float(np.std(x))
    if std == 0:
        noise = trend = periodicity = 0.0
    else:
        resid = x - _centred_mean(x, min(window, len(x)))
        noise = float(np.std(resid) / std)
        trend = max(0.0, 1.0 - float(np.var(resid) / np.var(x)))
        power = np.abs(np.fft.rfft(x - x.mean())[1:]) ** 2
        periodicity = float(power.max() / power.sum()) if power.sum() > 0 else 0.0
    return Characteristics(int(size if size is not None else len(x)), volatility, noise, trend, periodicity)


def solve_coefficients(ch: Characteristics) -> CoefficientSet:
    """Map dataset characteristics to ``(alpha, beta, gamma)``.

    alpha grows with dataset size (a logistic in log10 size, capped at 0.6);
    the rest is split between beta and gamma by how noisy the series is
    relative to its trend.
    """
    if ch.size < 3:
        raise ValueError("size must be >= 3")
    vals = (ch.volatility, ch.noise, ch.trend_strength, ch.periodicity)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("characteristics must be finite")
    alpha = 0.6 * float(expit(7.8 * (math.log10(ch.size) - 3.2)))
    ratio = ch.noise / ch.trend_strength if ch.trend_strength > 0 else RATIO_SENTINEL
    ratio = min(ratio, RATIO_SENTINEL)
    beta = (1.0 - alpha) * float(expit(2.4 * (ratio - 1.0)))
    gamma = max(0.0, 1.0 - alpha - beta)
    return CoefficientSet(alpha, beta, gamma, ch)


# ---------------------------------------------------------------- scoring


def _values(obj) -> np.ndarray:
    for attr in ("yhat", "counts", "pct_change"):
        if hasattr(obj, attr):
            return np.asarray(getattr(obj, attr), dtype=float)
    return np.asarray(obj, dtype=float)


def score_segment(
    segment: Segment,
    topics: Sequence,
    stock: StockSeries,
    forecasts: Sequence,
    coeffs: CoefficientSet,
    nd_variant: str = "clamp",
) -> SegmentScore:
    """Score one segment: ``w_i = alpha*pw + beta*nd + gamma*cs`` per topic, summed.

    Topic values are taken on the stock's trading days inside the segment.
    All series are min-max normalised first. A topic or stock window that is
    constant gets ``pw = 0`` and ``cs = 1`` and is flagged.
    """
    if not topics:
        raise ValueError("no topics to score")
    if len(forecasts) != len(topics):
        raise ValueError("need one forecast per topic")
    mask = segment.mask(stock.dates)
    days = stock.dates[mask]
    if len(days) < 3:
        raise ValueError(f"segment {segment.start}..{segment.end} has fewer than 3 trading days")
    S = minmax(stock.pct_change[mask])
    out = []
    for topic, fc in zip(topics, forecasts):
        T = minmax(topic.values_on(days))
        P = minmax(_values(fc))
        flags = []
        pr = pearson_weight(T, S)
        if pr.constant:
            flags.append("constant-series")
        try:
            cs = cosine_distance(T, S)
        except ValueError:
            cs = 1.0
            flags.append("zero-norm")
        nd, raw = normalized_dtw(P, T, nd_variant)
        w = coeffs.alpha * pr.pw + coeffs.beta * nd + coeffs.gamma * cs
        out.append(SimilarityBreakdown(topic.topic, pr.pw, cs, nd, pr.r, pr.p, raw, w, tuple(flags)))
    return SegmentScore(segment, tuple(out), float(math.fsum(b.w for b in out)))


def rank_segments(scores: Sequence[SegmentScore], direction: str = LOWEST_FIRST) -> list[SegmentScore]:
    """Order segments best first and fill in ``rank``.

    ``paper`` puts the lowest total first; ``similarity`` the highest. Ties
    go to the more recent segment in both modes.
    """
    if direction == LOWEST_FIRST:
        key = lambda s: (s.total, -s.segment.start.toordinal())
    elif direction == SIMILARITY:
        key = lambda s: (-s.total, -s.segment.start.toordinal())
    else:
        raise ValueError(f"unknown score direction {direction!r}")
    return [replace(s, rank=i) for i, s in enumerate(sorted(scores, key=key), start=1)]


# ---------------------------------------------------------------- reports


def _segment_index(scores):
    order = sorted(scores, key=lambda s: s.segment.start)
    return {id(s): i for i, s in enumerate(order, start=1)}


def write_score_report(scores: Sequence[SegmentScore], path: str | Path) -> None:
    idx = _segment_index(scores)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_index", "start", "end", "total", "rank"])
        for s in scores:
            w.writerow([idx[id(s)], s.segment.start.isoformat(), s.segment.end.isoformat(), f"{s.total:.6f}", s.rank])


def write_breakdown_report(scores: Sequence[SegmentScore], path: str | Path) -> None:
    idx = _segment_index(scores)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["segment_index", "topic", "pw", "cs", "nd", "w"])
        for s in sorted(scores, key=lambda s: idx[id(s)]):
            for b in s.per_topic:
                w.writerow([idx[id(s)], b.topic, f"{b.pw:.6f}", f"{b.cs:.6f}", f"{b.nd:.6f}", f"{b.w:.6f}"])


def read_score_report(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            {
                "segment_index": int(r["segment_index"]),
                "start": as_date(r["start"]),
                "end": as_date(r["end"]),
                "total": float(r["total"]),
                "rank": int(r["rank"]),
            }
            for r in csv.DictReader(fh)
        ]
