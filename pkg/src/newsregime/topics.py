"""Topic labels for keyword clusters and per-topic daily article counts."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import ClusterResult, top_keywords
from .ingest import Article, UpstreamError, align_counts, as_date

logger = logging.getLogger(__name__)

PROMPT_VERSION = "v1"
PROMPT_TEMPLATE = (
    "The following keywords were grouped together by a clustering algorithm "
    "run over news article tags, listed from most to least frequent:\n"
    "{keywords}\n\n"
    "Reply with a single short topic label (at most six words) that best "
    "describes this group. Reply with the label only."
)


class LabelingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TopicCluster:
    cluster_id: int
    label: str
    top_keywords: tuple[str, ...]
    member_keywords: frozenset[str]

    def __post_init__(self):
        if not self.label.strip():
            raise ValueError(f"cluster {self.cluster_id} has an empty label")
        extra = set(self.top_keywords) - self.member_keywords
        if extra:
            raise ValueError(f"top keywords {sorted(extra)} are not cluster members")

    def as_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "label": self.label,
            "top_keywords": list(self.top_keywords),
            "member_keywords": sorted(self.member_keywords),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TopicCluster":
        return cls(int(d["cluster_id"]), d["label"], tuple(d["top_keywords"]), frozenset(d["member_keywords"]))


@dataclass(frozen=True, eq=False)
class TopicSeries:
    topic: str
    dates: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.counts):
            raise ValueError("dates and counts differ in length")

    def __len__(self):
        return len(self.dates)

    def values_on(self, dates: np.ndarray) -> np.ndarray:
        """Values at ``dates`` (which must all be present)."""
        idx = np.searchsorted(self.dates, dates)
        if np.any(idx >= len(self.dates)) or np.any(self.dates[np.minimum(idx, len(self.dates) - 1)] != dates):
            raise KeyError(f"topic {self.topic!r} has no value for some requested dates")
        return self.counts[idx]


def label_cluster_stub(top_keywords: Sequence[str]) -> str:
    """Deterministic offline label: first three keywords, title-cased, joined by '/'."""
    if not top_keywords:
        raise ValueError("no keywords to label")
    return "/".join(k.strip().title() for k in top_keywords[:3])


@dataclass
class ChatLabeler:
    """Labels clusters through a chat-completion style HTTP endpoint.

    Responses are cached on disk under ``cache_dir`` keyed by model and prompt
    hash, so a rerun reproduces earlier labels without network access.
    ``client`` accepts any object with an ``httpx.Client``-like ``post``.
    """

    base_url: str
    model: str = "gpt-4-0613"
    api_key_env: str = "NEWSREGIME_LLM_API_KEY"
    cache_dir: Path | None = None
    max_retries: int = 3
    min_interval: float = 0.0
    timeout: float = 60.0
    client: object = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _last_call: float = field(default=0.0, repr=False)

    def prompt(self, keywords: Sequence[str]) -> str:
        return PROMPT_TEMPLATE.format(keywords=", ".join(keywords))

    def cache_key(self, prompt: str) -> str:
        h = hashlib.sha256(f"{PROMPT_VERSION}\0{self.model}\0{prompt}".encode()).hexdigest()
        return h[:32]

    def __call__(self, keywords: Sequence[str]) -> str:
        if not keywords:
            raise ValueError("no keywords to label")
        prompt = self.prompt(keywords)
        cached = self._cache_get(prompt)
        if cached is not None:
            return cached
        for attempt in range(1, self.max_retries + 1):
            text = self._request(prompt)
            label = text.strip().splitlines()[0].strip() if text.strip() else ""
            if label:
                self._cache_put(prompt, label)
                return label
            logger.warning("empty label response (attempt %d/%d)", attempt, self.max_retries)
        raise LabelingError(f"model returned no label after {self.max_retries} attempts")

    def _request(self, prompt: str) -> str:
        import httpx

        key = os.environ.get(self.api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        }
        with self._lock:
            wait = self.min_interval - (time.monotonic() - self._last_call)
            if wait > 0:
                time.sleep(wait)
            self._last_call = time.monotonic()
        client = self.client or httpx.Client(timeout=self.timeout)
        try:
            resp = client.post(self.base_url.rstrip("/") + "/chat/completions", json=body, headers=headers)
            resp.raise_for_status()
            payload = resp.json()
        except httpx.HTTPError as exc:
            raise UpstreamError(f"labeling request failed: {exc}") from exc
        finally:
            if self.client is None:
                client.close()
        try:
            return payload["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise UpstreamError(f"unexpected labeling response shape: {payload!r}") from exc

    def _cache_path(self, prompt):
        return None if self.cache_dir is None else Path(self.cache_dir) / f"{self.cache_key(prompt)}.json"

    def _cache_get(self, prompt):
        p = self._cache_path(prompt)
        if p is not None and p.exists():
            return json.loads(p.read_text(encoding="utf-8"))["label"]
        return None

    def _cache_put(self, prompt, label):
        p = self._cache_path(prompt)
        if p is None:
            return
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(
            json.dumps({"model": self.model, "prompt_version": PROMPT_VERSION, "prompt": prompt, "label": label}, indent=1),
            encoding="utf-8",
        )


def label_cluster_llm(top_keywords: Sequence[str], client: ChatLabeler) -> str:
    if not top_keywords:
        raise ValueError("no keywords to label")
    return client(top_keywords)


def build_topic_clusters(
    result: ClusterResult,
    corpus: Sequence[Article],
    labeler=label_cluster_stub,
    k: int = 20,
    max_workers: int = 4,
) -> list[TopicCluster]:
    """Label every cluster from its ``k`` most frequent keywords.

    Duplicate labels get a ``" (2)"``-style suffix so topic names stay unique.
    """
    ids = list(range(result.cluster_count))
    tops = [top_keywords(result, corpus, cid, k) for cid in ids]
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        labels = list(pool.map(labeler, tops))
    seen: dict[str, int] = {}
    out = []
    for cid, top, label in zip(ids, tops, labels):
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label} ({seen[label]})"
        out.append(TopicCluster(cid, label, tuple(top), frozenset(result.members(cid))))
    return out


def build_topic_series(
    corpus: Sequence[Article],
    clusters: Sequence[TopicCluster],
    calendar,
    mode: str = "articles",
) -> list[TopicSeries]:
    """Daily topic frequencies over ``calendar``.

    ``mode="articles"`` counts distinct articles with at least one member
    keyword; ``"keywords"`` counts matching keyword occurrences instead.
    Articles dated outside the calendar are ignored.
    """
    if mode not in ("articles", "keywords"):
        raise ValueError(f"unknown count mode {mode!r}")
    cal = np.asarray(calendar, dtype="datetime64[D]")
    if len(cal) == 0:
        raise ValueError("empty calendar")
    owner: dict[str, list[int]] = {}
    for t, c in enumerate(clusters):
        for kw in c.member_keywords:
            owner.setdefault(kw, []).append(t)
    counts = np.zeros((len(clusters), len(cal)), dtype=np.int64)
    day_index = {d: i for i, d in enumerate(cal.tolist())}
    for a in corpus:
        i = day_index.get(as_date(a.date))
        if i is None:
            continue
        if mode == "articles":
            hit = {t for kw in a.keywords for t in owner.get(kw, ())}
            for t in hit:
                counts[t, i] += 1
        else:
            for kw in a.keywords:
                for t in owner.get(kw, ()):
                    counts[t, i] += 1
    return [TopicSeries(c.label, cal.copy(), counts[t]) for t, c in enumerate(clusters)]


def align_topic_series(series: TopicSeries, trading_dates, policy: str = "roll") -> TopicSeries:
    values = align_counts(series.dates, series.counts, trading_dates, policy)
    return TopicSeries(series.topic, np.asarray(trading_dates, dtype="datetime64[D]"), values)


def smooth_series(series: TopicSeries, window: int) -> TopicSeries:
    """Centred rolling mean; edges average over the part of the window that exists."""
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(series)
    if window > n:
        raise ValueError(f"window {window} longer than series ({n})")
    x = np.asarray(series.counts, dtype=float)
    if window == 1:
        return TopicSeries(series.topic, series.dates, x.copy())
    left = (window - 1) // 2
    right = window - 1 - left
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(n)
    lo = np.maximum(idx - left, 0)
    hi = np.minimum(idx + right + 1, n)
    return TopicSeries(series.topic, series.dates, (csum[hi] - csum[lo]) / (hi - lo))


def write_topics(clusters: Sequence[TopicCluster], path: str | Path) -> None:
    Path(path).write_text(json.dumps([c.as_dict() for c in clusters], indent=1), encoding="utf-8")


def read_topics(path: str | Path) -> list[TopicCluster]:
    return [TopicCluster.from_dict(d) for d in json.loads(Path(path).read_text(encoding="utf-8"))]


def write_topic_series(series: Sequence[TopicSeries], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["topic", "date", "count"])
        for s in series:
            for d, c in zip(s.dates, s.counts):
                v = float(c)
                w.writerow([s.topic, str(d), int(v) if v.is_integer() else repr(v)])


def read_topic_series(path: str | Path) -> list[TopicSeries]:
    rows: dict[str, tuple[list, list]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            d, c = rows.setdefault(row["topic"], ([], []))
            d.append(row["date"])
            c.append(float(row["count"]))
    return [
        TopicSeries(t, np.array(d, dtype="datetime64[D]"), np.array(c)) for t, (d, c) in rows.items()
    ]
