"""When do topic regressors help a price forecast?

A stock's daily change partly follows coverage of one topic. Three
forecasts of a held-out window are compared:

  * no regressors,
  * topic regressors whose future values are themselves forecasts,
  * topic regressors whose future values are the observed counts.

Only the last can use the day-to-day topic signal; forecast topic values
are smooth, so the model can only use their trend.

    python3 demos/03_topic_regressors.py
"""
import numpy as np

from newsregime.evaluation import ablate_topics, regression_metrics
from newsregime.forecast import ForecastConfig, fit, predict

rng = np.random.default_rng(5)
n, horizon = 500, 60
dates = np.datetime64("2022-01-03") + np.arange(n + horizon)
energy = rng.poisson(3, size=n + horizon).astype(float)
tech = rng.poisson(5, size=n + horizon).astype(float)
change = 0.02 + 0.3 * (energy - 3) + rng.normal(scale=0.5, size=n + horizon)

train, test = slice(0, n), slice(n, n + horizon)
cfg = ForecastConfig(ridge_lambda=0.1)
regs = {"energy": energy, "tech": tech}

base = fit(dates[train], change[train], config=cfg)
with_topics = fit(dates[train], change[train], {k: v[train] for k, v in regs.items()}, cfg)

# Forecast the topics themselves (no regressors) to stand in for future values.
forecast_regs = {
    k: predict(fit(dates[train], v[train], config=cfg), dates[test]).yhat for k, v in regs.items()
}
observed_regs = {k: v[test] for k, v in regs.items()}

rows = [
    ("baseline", predict(base, dates[test]).yhat),
    ("topics (forecast)", predict(with_topics, dates[test], forecast_regs).yhat),
    ("topics (observed)", predict(with_topics, dates[test], observed_regs).yhat),
]
print(f"{'model':<20} {'MAE':>6} {'RMSE':>6} {'R2':>7}")
for name, yhat in rows:
    r = regression_metrics(change[test], yhat)
    print(f"{name:<20} {r.mae:6.3f} {r.rmse:6.3f} {r.r2:7.3f}")

print("\nlearned effect per article:", {k: round(v, 3) for k, v in with_topics.regressor_effects().items()})

print("\nwithholding one topic at a time (observed future values):")
for a in ablate_topics(dates[train], change[train], {k: v[train] for k, v in regs.items()},
                       dates[test], change[test], observed_regs, cfg):
    print(f"  without {a.topic:<7} MSE {a.mse_without:.3f} vs {a.mse_all:.3f}  ({a.mse_pct_change:+.1f}%)")
