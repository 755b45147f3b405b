"""Generator for the bundled synthetic fixture set.

Three keyword groups (energy, tech, politics) publish articles at Poisson
rates; the energy rate jumps on ``SHIFT_DATE``. The stock's daily percent
change is partly driven by the energy article count, so topic regressors
carry real signal. Run ``python -m newsregime.synthetic OUT_DIR`` to
regenerate.
"""
from __future__ import annotations

import csv
import datetime as dt
import sys
from pathlib import Path

import numpy as np

from .ingest import Article, align_counts, write_corpus
from .vectors import VectorTable, write_vectors

START = dt.date(2019, 1, 1)
END = dt.date(2021, 1, 1)
SHIFT_DATE = dt.date(2019, 11, 1)

GROUPS = {
    "energy": [
        "oil", "natural gas", "opec", "pipelines", "solar power", "wind power",
        "coal", "electricity", "gasoline", "refineries", "crude oil prices", "nuclear energy",
    ],
    "tech": [
        "artificial intelligence", "smartphones", "semiconductors", "cloud computing",
        "social media", "cybersecurity", "software", "startups", "data privacy",
        "e-commerce", "broadband", "robotics",
    ],
    "politics": [
        "elections", "congress", "senate", "supreme court", "campaign finance",
        "legislation", "voting rights", "white house", "lobbying", "governors",
        "polls", "impeachment",
    ],
}
STRAYS = ["weather", "obituaries", "recipes", "crossword"]
SECTIONS = {"energy": "business", "tech": "business", "politics": "politics"}

CONFIG_YAML = """\
# Synthetic fixture run: two years of daily data, one planted regime shift.
paths:
  corpus: corpus.csv
  vectors: embeddings.vec
  stock: prices.csv
  reference_events: reference_events.txt
  keyword_classes: keyword_classes.csv
  output_dir: null
  label_cache: null
ingest:
  start: '2019-01-01'
  end: '2021-01-01'
  splits: [0.74, 0.04, 0.2, 0.02]
  sections: [politics, economy, business, washington, world, national, u.s.]
  symbol: SYN
reduce:
  method: pca
  n_components: 5
cluster:
  min_cluster_size: 5
  min_samples: null
label:
  method: stub
  base_url: null
  model: gpt-4-0613
  top_k: 20
  min_interval: 0.0
series:
  mode: articles
  alignment: roll
  smooth_window: 10
breakpoints:
  topic: oil
  penalty: null
  min_segment_length: 30
  bandwidth: auto
  tolerance_days: 10
segment:
  mode: direct
  min_span_days: 30
select:
  score_direction: paper
  nd_variant: clamp
  coefficients: null
forecast:
  n_changepoints: 25
  changepoint_range: 0.8
  yearly_order: 10
  weekly_order: 3
  ridge_lambda: 0.1
  observed_regressors: false
seed: 0
workers: 4
"""


def _rates(day: dt.date) -> dict[str, float]:
    return {"energy": 0.35 if day < SHIFT_DATE else 1.6, "tech": 0.9, "politics": 0.9}


def generate(out_dir: str | Path, seed: int = 7) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    # keyword embeddings: tight groups around well-separated centres
    keywords, rows, classes = [], [], []
    for name, kws in GROUPS.items():
        centre = rng.normal(scale=10.0, size=16)
        for kw in kws:
            keywords.append(kw)
            rows.append(centre + rng.normal(scale=0.3, size=16))
            classes.append((kw, name))
    for kw in STRAYS:
        keywords.append(kw)
        rows.append(rng.normal(scale=10.0, size=16))
        classes.append((kw, "none"))
    write_vectors(VectorTable(tuple(keywords), np.array(rows)), out / "embeddings.vec")
    with open(out / "keyword_classes.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["keyword", "class"])
        w.writerows(classes)

    # articles
    articles = []
    days = [START + dt.timedelta(days=i) for i in range((END - START).days)]
    energy_daily = np.zeros(len(days))
    for i, day in enumerate(days):
        for topic, lam in _rates(day).items():
            for k in range(rng.poisson(lam)):
                pick = rng.choice(GROUPS[topic], size=rng.integers(2, 5), replace=False)
                kws = [str(x) for x in pick]
                if rng.random() < 0.15:
                    kws.append(str(rng.choice(STRAYS)))
                articles.append(Article(day, f"{topic} story {day:%Y%m%d}-{k}", tuple(kws), SECTIONS[topic]))
                if topic == "energy":
                    energy_daily[i] += 1
    for j in range(40):
        day = days[int(rng.integers(len(days)))]
        articles.append(Article(day, f"untagged brief {j}", (), "business"))
        pick = rng.choice(GROUPS["tech"], size=2, replace=False)
        articles.append(Article(day, f"arts review {j}", tuple(str(x) for x in pick), "arts"))
    articles.sort(key=lambda a: (a.date, a.headline))
    write_corpus(articles, out / "corpus.csv")

    # prices on weekdays; percent change leans on the energy article count
    cal = np.array(days, dtype="datetime64[D]")
    trading = cal[np.is_busday(cal)]
    energy = align_counts(cal, energy_daily, trading, "roll")
    z = (energy - energy.mean()) / energy.std()
    pct = 0.05 + 0.4 * z + 0.6 * rng.normal(size=len(trading))
    closes = 100.0 * np.cumprod(1.0 + pct / 100.0)
    with open(out / "prices.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "close"])
        for d, c in zip(trading, closes):
            w.writerow([str(d), f"{c:.6f}"])

    (out / "reference_events.txt").write_text(
        "# planted regime shift in the energy topic\n" f"{SHIFT_DATE.isoformat()}\n", encoding="utf-8"
    )
    (out / "config.yaml").write_text(CONFIG_YAML, encoding="utf-8")
    return out


if __name__ == "__main__":
    generate(sys.argv[1] if len(sys.argv) > 1 else "fixtures")
