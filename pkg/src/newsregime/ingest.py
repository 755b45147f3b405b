"""Loading and preprocessing of the news keyword corpus and stock prices.

The corpus is a delimited text file with the header
``date,headline,section,keywords`` where ``keywords`` is a bracketed list of
quoted strings, e.g. ``['bankruptcies', 'exciteathome', 'amerco']``.

Stock prices are read from ``date,close`` files (offline fixture mode) or from
a JSON-over-HTTP endpoint::

    GET {base_url}/history?symbol=SPY&start=2000-01-01&end=2024-11-01
    -> {"symbol": "SPY", "prices": [{"date": "2000-01-03", "close": 145.44}, ...]}
"""
from __future__ import annotations

import csv
import datetime as dt
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_SECTIONS = frozenset(
    {"politics", "economy", "business", "washington", "world", "national", "u.s."}
)

# Internal cut dates of the reference experiment (train | train-val | test | test-val).
REFERENCE_CUTS = (dt.date(2018, 5, 10), dt.date(2019, 5, 5), dt.date(2024, 5, 1))


class KeywordParseError(ValueError):
    """Malformed keyword field; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class StockDataError(ValueError):
    pass


class UpstreamError(RuntimeError):
    """A remote service (price API, labeling endpoint) failed."""


def as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]").item()
    return dt.date.fromisoformat(str(value).strip()[:10])


def as_day_array(dates: Iterable) -> np.ndarray:
    return np.array([np.datetime64(as_date(d), "D") for d in dates], dtype="datetime64[D]")


@dataclass(frozen=True)
class DateRange:
    """Half-open calendar range ``[start, end)``."""

    start: dt.date
    end: dt.date

    def __post_init__(self):
        object.__setattr__(self, "start", as_date(self.start))
        object.__setattr__(self, "end", as_date(self.end))
        if self.end <= self.start:
            raise ValueError(f"empty date range {self.start}..{self.end}")

    @property
    def days(self) -> int:
        return (self.end - self.start).days

    def contains(self, dates) -> np.ndarray:
        d = np.asarray(dates, dtype="datetime64[D]")
        return (d >= np.datetime64(self.start)) & (d < np.datetime64(self.end))

    def calendar(self) -> np.ndarray:
        return np.arange(np.datetime64(self.start), np.datetime64(self.end), dtype="datetime64[D]")


@dataclass(frozen=True)
class Article:
    date: dt.date
    headline: str
    keywords: tuple[str, ...]
    section: str = ""


@dataclass(frozen=True)
class PreprocessReport:
    kept: int
    removed_empty: int
    removed_section: int


@dataclass(frozen=True, eq=False)
class PriceHistory:
    """Raw closing prices, one row per trading day."""

    dates: np.ndarray
    closes: np.ndarray

    def __len__(self):
        return len(self.dates)

    def to_pct_change(self) -> "StockSeries":
        return compute_pct_change(self.closes, self.dates)


@dataclass(frozen=True, eq=False)
class StockSeries:
    """Daily percentage change from the previous close.

    ``closes[t]`` is the close on ``dates[t]``; ``base_close`` is the close of
    the dropped first day, so prices can be rebuilt exactly.
    """

    dates: np.ndarray
    pct_change: np.ndarray
    closes: np.ndarray | None = None
    base_close: float | None = None

    def __post_init__(self):
        if len(self.dates) != len(self.pct_change):
            raise ValueError("dates and pct_change differ in length")
        if len(self.dates) > 1 and np.any(np.diff(self.dates.astype("int64")) <= 0):
            raise ValueError("stock dates must be strictly increasing")

    def __len__(self):
        return len(self.dates)

    def restrict(self, rng: DateRange) -> "StockSeries":
        mask = rng.contains(self.dates)
        closes = None if self.closes is None else self.closes[mask]
        return StockSeries(self.dates[mask], self.pct_change[mask], closes, None)


@dataclass(frozen=True)
class SplitSpec:
    train: DateRange
    train_val: DateRange
    test: DateRange
    test_val: DateRange

    def ranges(self) -> tuple[DateRange, ...]:
        return (self.train, self.train_val, self.test, self.test_val)

    def proportions(self) -> tuple[float, ...]:
        total = self.test_val.end.toordinal() - self.train.start.toordinal()
        return tuple(r.days / total for r in self.ranges())

    def as_dict(self) -> dict:
        return {
            name: [r.start.isoformat(), r.end.isoformat()]
            for name, r in zip(("train", "train_val", "test", "test_val"), self.ranges())
        }


def parse_keyword_field(raw: str) -> list[str]:
    """Parse a bracketed quoted-list field into lowercase keyword strings.

    Duplicates are preserved. Both quote styles are accepted; a backslash
    escapes the next character inside a quoted item.
    """
    text = raw.strip()
    lead = len(raw) - len(raw.lstrip())
    if text == "":
        return []
    if text[0] != "[":
        raise KeywordParseError("expected '['", _byte_offset(raw, lead))
    out: list[str] = []
    i, n = 1, len(text)
    expect_item = True
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            raise KeywordParseError("unterminated list", _byte_offset(raw, lead + i))
        ch = text[i]
        if ch == "]":
            if expect_item and out:
                raise KeywordParseError("trailing comma", _byte_offset(raw, lead + i))
            i += 1
            break
        if not expect_item:
            if ch != ",":
                raise KeywordParseError("expected ',' or ']'", _byte_offset(raw, lead + i))
            expect_item = True
            i += 1
            continue
        if ch not in "'\"":
            raise KeywordParseError("expected quoted keyword", _byte_offset(raw, lead + i))
        quote, j, buf = ch, i + 1, []
        while j < n and text[j] != quote:
            if text[j] == "\\" and j + 1 < n:
                j += 1
            buf.append(text[j])
            j += 1
        if j >= n:
            raise KeywordParseError("unterminated quote", _byte_offset(raw, lead + i))
        out.append("".join(buf).strip().lower())
        expect_item = False
        i = j + 1
    rest = text[i:]
    if rest.strip():
        skip = len(rest) - len(rest.lstrip())
        raise KeywordParseError("trailing characters", _byte_offset(raw, lead + i + skip))
    return out


def _byte_offset(raw: str, char_index: int) -> int:
    return len(raw[:char_index].encode("utf-8"))


def load_corpus(path: str | Path) -> list[Article]:
    """Read the corpus file; duplicate ``(date, headline)`` rows are dropped."""
    articles = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"date", "headline", "section", "keywords"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"corpus {path} lacks columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            key = (row["date"].strip(), row["headline"].strip())
            if key in seen:
                continue
            seen.add(key)
            try:
                kws = parse_keyword_field(row["keywords"] or "")
            except KeywordParseError as exc:
                raise KeywordParseError(f"{path}:{lineno}: {exc}", exc.offset) from None
            articles.append(
                Article(as_date(row["date"]), key[1], tuple(kws), (row["section"] or "").strip())
            )
    return articles


def write_corpus(articles: Sequence[Article], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "headline", "section", "keywords"])
        for a in articles:
            kw = "[" + ", ".join("'" + k.replace("\\", "\\\\").replace("'", "\\'") + "'" for k in a.keywords) + "]"
            w.writerow([a.date.isoformat(), a.headline, a.section, kw])


def preprocess_corpus(
    articles: Sequence[Article],
    section_whitelist: Iterable[str] | None = DEFAULT_SECTIONS,
) -> tuple[list[Article], PreprocessReport]:
    """Drop articles without keywords, then those outside the section whitelist.

    ``section_whitelist=None`` disables the section filter. Matching is
    case-insensitive.
    """
    allowed = None if section_whitelist is None else {s.lower() for s in section_whitelist}
    kept, empty, off_section = [], 0, 0
    for a in articles:
        if not any(k for k in a.keywords):
            empty += 1
        elif allowed is not None and a.section.strip().lower() not in allowed:
            off_section += 1
        else:
            kept.append(a)
    return kept, PreprocessReport(len(kept), empty, off_section)


def compute_pct_change(closes, dates=None) -> StockSeries:
    """Percent change from the previous close; the first day is dropped.

    Without ``dates`` the rows are placed on consecutive days from 1970-01-01.
    """
    c = np.asarray(closes, dtype=float)
    if c.ndim != 1 or len(c) < 2:
        raise ValueError("need at least two closing prices")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        bad = int(np.flatnonzero(~(c > 0))[0]) if np.any(~(c > 0)) else 0
        raise StockDataError(f"non-positive or non-finite price at position {bad}")
    if dates is None:
        d = np.arange(len(c)).astype("datetime64[D]")
    else:
        d = np.asarray(dates, dtype="datetime64[D]")
        if len(d) != len(c):
            raise ValueError("dates and closes differ in length")
    pct = 100.0 * (c[1:] - c[:-1]) / c[:-1]
    return StockSeries(d[1:], pct, c[1:].copy(), float(c[0]))


def reconstruct_closes(series: StockSeries, base_close: float | None = None) -> np.ndarray:
    """Inverse of :func:`compute_pct_change` (excluding the base close itself)."""
    base = series.base_close if base_close is None else base_close
    if base is None:
        raise ValueError("base close unknown")
    return base * np.cumprod(1.0 + series.pct_change / 100.0)


def make_splits(full_range: DateRange, proportions: Sequence[float] | None = None) -> SplitSpec:
    """Split ``full_range`` into train / train-val / test / test-val.

    Without ``proportions`` the fixed cut dates 2018-05-10, 2019-05-05 and
    2024-05-01 are used, which requires the range to straddle all three.
    Otherwise the cuts fall at the given day fractions (normalised to sum 1).
    """
    start, end = full_range.start, full_range.end
    if proportions is None:
        if not (start < REFERENCE_CUTS[0] and end > REFERENCE_CUTS[-1]):
            raise ValueError(
                f"range {start}..{end} does not cover the cut dates "
                f"{', '.join(c.isoformat() for c in REFERENCE_CUTS)}"
            )
        cuts = list(REFERENCE_CUTS)
    else:
        p = np.asarray(proportions, dtype=float)
        if p.shape != (4,) or np.any(p <= 0):
            raise ValueError("need four positive proportions")
        p = p / p.sum()
        total = full_range.days
        offsets = np.rint(np.cumsum(p)[:3] * total).astype(int)
        cuts = [start + dt.timedelta(days=int(o)) for o in offsets]
        if not (start < cuts[0] < cuts[1] < cuts[2] < end):
            raise ValueError(f"range {start}..{end} too short for proportions {list(proportions)}")
    bounds = [start, *cuts, end]
    return SplitSpec(*(DateRange(a, b) for a, b in zip(bounds[:-1], bounds[1:])))


def _validate_prices(rows: list[tuple[dt.date, float]], origin: str) -> PriceHistory:
    if not rows:
        raise StockDataError(f"empty price history from {origin}")
    rows.sort(key=lambda r: r[0])
    for (d0, _), (d1, _) in zip(rows, rows[1:]):
        if d0 == d1:
            raise StockDataError(f"duplicate date {d1.isoformat()} in {origin}")
    for d, c in rows:
        if not np.isfinite(c) or c <= 0:
            raise StockDataError(f"non-positive close on {d.isoformat()} in {origin}")
    dates = as_day_array(r[0] for r in rows)
    return PriceHistory(dates, np.array([r[1] for r in rows], dtype=float))


def read_price_file(path: str | Path) -> PriceHistory:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not {"date", "close"} <= set(reader.fieldnames or ()):
            raise StockDataError(f"{path} lacks date/close columns")
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append((as_date(row["date"]), float(row["close"])))
            except ValueError as exc:
                raise StockDataError(f"{path}:{lineno}: unparseable row ({exc})") from None
    return _validate_prices(rows, str(path))


def fetch_stock_history(
    symbol: str,
    rng: DateRange,
    source: str | Path,
    *,
    client=None,
    timeout: float = 30.0,
) -> PriceHistory:
    """Daily closes for ``symbol`` within ``rng``.

    ``source`` is either a fixture file path or an ``http(s)://`` base URL.
    ``client`` may be an ``httpx.Client`` (used for injecting transports).
    """
    src = str(source)
    if src.startswith(("http://", "https://")):
        history = _fetch_http(symbol, rng, src, client, timeout)
    else:
        history = read_price_file(src)
    mask = rng.contains(history.dates)
    if not mask.any():
        raise StockDataError(f"no prices for {symbol} in {rng.start}..{rng.end}")
    return PriceHistory(history.dates[mask], history.closes[mask])


def _fetch_http(symbol, rng, base_url, client, timeout) -> PriceHistory:
    import httpx

    own = client is None
    client = client or httpx.Client(timeout=timeout)
    try:
        resp = client.get(
            base_url.rstrip("/") + "/history",
            params={"symbol": symbol, "start": rng.start.isoformat(), "end": rng.end.isoformat()},
        )
        resp.raise_for_status()
        payload = resp.json()
    except httpx.HTTPError as exc:
        raise UpstreamError(f"price request for {symbol} failed: {exc}") from exc
    except ValueError as exc:
        raise StockDataError(f"unparseable price payload for {symbol}: {exc}") from exc
    finally:
        if own:
            client.close()
    try:
        rows = [(as_date(p["date"]), float(p["close"])) for p in payload["prices"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise StockDataError(f"unparseable price payload for {symbol}: {exc!r}") from exc
    return _validate_prices(rows, f"{base_url} ({symbol})")


def write_stock(series: StockSeries, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close", "pct_change"])
        closes = series.closes if series.closes is not None else [""] * len(series)
        for d, c, p in zip(series.dates, closes, series.pct_change):
            w.writerow([str(d), "" if c == "" else repr(float(c)), repr(float(p))])


def read_stock(path: str | Path) -> StockSeries:
    dates, closes, pct = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            dates.append(as_date(row["date"]))
            closes.append(float(row["close"]) if row.get("close") else np.nan)
            pct.append(float(row["pct_change"]))
    c = np.array(closes)
    return StockSeries(as_day_array(dates), np.array(pct), None if np.isnan(c).any() else c)


def align_counts(
    dates: np.ndarray,
    values: np.ndarray,
    trading_dates: np.ndarray,
    policy: str = "roll",
) -> np.ndarray:
    """Map calendar-day values onto trading days.

    ``policy="roll"`` adds values from closed-market days to the next trading
    day (values after the last trading day are discarded); ``"drop"`` keeps
    trading-day values only.
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    trading = np.asarray(trading_dates, dtype="datetime64[D]")
    values = np.asarray(values, dtype=float)
    out = np.zeros(len(trading))
    if policy == "drop":
        idx = np.searchsorted(trading, dates)
        hit = (idx < len(trading)) & (trading[np.minimum(idx, len(trading) - 1)] == dates)
        np.add.at(out, idx[hit], values[hit])
    elif policy == "roll":
        idx = np.searchsorted(trading, dates, side="left")
        # days before the first trading day have no preceding session; drop them
        ok = (idx < len(trading)) & (idx > 0 if len(trading) else True)
        if len(trading):
            ok |= (idx == 0) & (dates == trading[0])
        np.add.at(out, idx[ok], values[ok])
    else:
        raise ValueError(f"unknown alignment policy {policy!r}")
    return out
