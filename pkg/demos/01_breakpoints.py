"""Finding regime shifts in a topic's daily coverage.

A synthetic "energy" topic is quiet for a year, then its coverage jumps.
PELT with the RBF cost should find the jump; the training range is then
cut into segments around it.

    python3 demos/01_breakpoints.py [out_dir]
"""
import sys
from pathlib import Path

import numpy as np

from newsregime.changepoint import PeltConfig, evaluate_breakpoints, pelt
from newsregime.ingest import DateRange
from newsregime.plotting import emit_plot
from newsregime.segsel import midpoint_segments
from newsregime.topics import TopicSeries, smooth_series

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-output")
out.mkdir(exist_ok=True)
rng = np.random.default_rng(11)

dates = np.arange("2019-01-01", "2021-01-01", dtype="datetime64[D]")
shift = int(np.flatnonzero(dates == np.datetime64("2019-11-01"))[0])
rate = np.where(np.arange(len(dates)) < shift, 0.4, 1.8)
raw = TopicSeries("Energy", dates, rng.poisson(rate).astype(float))

# Daily counts are spiky; a 10-day centred mean makes the level shift obvious.
series = smooth_series(raw, 10)
bps = pelt(series.counts, PeltConfig(min_segment_length=30), dates=dates)
print("breakpoints:", [d.isoformat() for d in bps.dates])
print(f"penalty used: {bps.penalty:.3f}, objective: {bps.objective:.3f}")

score = evaluate_breakpoints(bps, [dates[shift].item()], tolerance=10)
print(f"against the planted shift: precision {score.precision:.2f}, recall {score.recall:.2f}")

# Penalty controls how eager the detector is.
for pen in (0.5, 2.0, 8.0):
    n = len(pelt(series.counts, PeltConfig(penalty=pen, min_segment_length=30)))
    print(f"  penalty {pen:>4}: {n} breakpoints")

# Midpoints need two breakpoints; with a single one, only direct cutting
# splits the range.
full = DateRange(dates[0].item(), (dates[-1] + 1).item())
for mode in ("midpoint", "direct"):
    print(f"{mode} segments:")
    for s in midpoint_segments(bps, full, min_span=30, mode=mode):
        print(f"  {s.start} .. {s.end}  ({s.days} days)")

emit_plot(
    [("daily", dates, raw.counts), ("10-day mean", dates, series.counts)],
    out / "breakpoints.svg",
    title="Energy coverage and detected breakpoints",
    vlines=[str(d) for d in bps.dates],
)
print("plot:", out / "breakpoints.svg")
