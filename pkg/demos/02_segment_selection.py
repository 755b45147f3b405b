"""Ranking candidate training windows.

Five 30-day segments of one topic are scored against the stock series and
a forecast of the topic. In one segment the topic moves with the stock
and matches its forecast. The two score directions put it at opposite
ends of the ranking.

    python3 demos/02_segment_selection.py
"""
import numpy as np

from newsregime.ingest import StockSeries
from newsregime.segsel import (
    LOWEST_FIRST,
    SIMILARITY,
    Segment,
    dataset_characteristics,
    rank_segments,
    score_segment,
    solve_coefficients,
)
from newsregime.topics import TopicSeries

rng = np.random.default_rng(3)
dates = np.arange("2023-01-02", "2023-06-01", dtype="datetime64[D]")[:150]
stock = rng.normal(scale=1.2, size=150)
topic = rng.poisson(4, size=150).astype(float)
aligned = slice(60, 90)
topic[aligned] = 4 + 2 * stock[aligned]

ts = TopicSeries("Energy", dates, topic)
ss = StockSeries(dates, stock)

# Coefficients come from properties of the stock series: its length,
# volatility, and how noisy it is relative to its trend. A 150-day
# history is short, so the correlation weight alpha is close to zero.
prices = 100 * np.cumprod(1 + stock / 100)
coeffs = solve_coefficients(dataset_characteristics(prices, pct_change=stock))
print(f"alpha {coeffs.alpha:.3f}  beta {coeffs.beta:.3f}  gamma {coeffs.gamma:.3f}")
print("  from", {k: round(v, 3) for k, v in coeffs.characteristics.as_dict().items()})

scores = []
for k in range(5):
    seg = Segment(dates[30 * k].item(), (dates[30 * k] + np.timedelta64(30, "D")).item())
    days = dates[seg.mask(dates)]
    truth = ts.values_on(days)
    forecast = truth if k == 2 else truth + rng.normal(scale=3, size=len(days))
    scores.append(score_segment(seg, [ts], ss, [forecast], coeffs))

print("\nsegment              pw     cs     nd     total")
for s in scores:
    b = s.per_topic[0]
    print(f"{s.segment.start}..{s.segment.end}  {b.pw:.3f}  {b.cs:.3f}  {b.nd:.3f}  {s.total:.3f}")

for direction in (SIMILARITY, LOWEST_FIRST):
    best = rank_segments(scores, direction)[0]
    print(f"best under {direction!r:>12}: {best.segment.start}..{best.segment.end}")
