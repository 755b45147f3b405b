import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from oracles import brute_ari, brute_purity, brute_regression
from newsregime.evaluation import (
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
from newsregime.forecast import ForecastConfig

labels = st.lists(st.integers(0, 4), min_size=2, max_size=40)


class TestClusterMetrics:
    def test_identical_partitions(self):
        t = ContingencyTable.from_labels([0, 0, 1, 1], ["a", "a", "b", "b"])
        q = purity_fmeasure(t)
        assert (q.purity, q.inverse_purity, q.f_measure) == (1.0, 1.0, 1.0)
        assert adjusted_rand_index(t) == 1.0

    def test_purity_half(self):
        q = purity_fmeasure(ContingencyTable(np.array([[1, 1], [1, 1]])))
        assert q.purity == 0.5

    def test_balanced_two_by_two(self):
        # no agreeing pairs; 2/3 expected by chance, maximum 2
        assert adjusted_rand_index(ContingencyTable(np.array([[1, 1], [1, 1]]))) == pytest.approx(-0.5)

    def test_single_cluster_single_class(self):
        assert adjusted_rand_index(ContingencyTable(np.array([[5]]))) == 1.0

    def test_table_validation(self):
        with pytest.raises(ValueError):
            ContingencyTable(np.array([1, 2]))
        with pytest.raises(ValueError):
            ContingencyTable(np.array([[-1]]))
        with pytest.raises(ValueError):
            ContingencyTable.from_labels([1], [1, 2])
        with pytest.raises(ValueError):
            adjusted_rand_index(ContingencyTable(np.array([[1]])))
        with pytest.raises(ValueError):
            purity_fmeasure(ContingencyTable(np.zeros((1, 1))))

    @settings(max_examples=100)
    @given(labels, st.data())
    def test_match_brute_force(self, x, data):
        y = data.draw(st.lists(st.integers(0, 4), min_size=len(x), max_size=len(x)))
        t = ContingencyTable.from_labels(x, y)
        assert abs(purity_fmeasure(t).purity - brute_purity(x, y)) <= 1e-12
        assert abs(purity_fmeasure(t).inverse_purity - brute_purity(y, x)) <= 1e-12
        assert abs(adjusted_rand_index(t) - brute_ari(x, y)) <= 1e-12
        assert adjusted_rand_index(t) == pytest.approx(adjusted_rand_score(y, x), abs=1e-12)

    @settings(max_examples=50)
    @given(labels, st.permutations(range(5)))
    def test_label_renaming_invariance(self, x, perm):
        y = [v % 3 for v in x]
        renamed = [perm[v] for v in x]
        a = ContingencyTable.from_labels(x, y)
        b = ContingencyTable.from_labels(renamed, y)
        assert adjusted_rand_index(a) == pytest.approx(adjusted_rand_index(b), abs=1e-12)
        assert purity_fmeasure(a) == purity_fmeasure(b)


class TestRegressionMetrics:
    def test_perfect(self):
        r = regression_metrics([1, 2, 3], [1, 2, 3])
        assert (r.mae, r.mse, r.rmse, r.r2) == (0, 0, 0, 1)

    def test_example(self):
        r = regression_metrics([0, 0, 0, 4], [1, -1, 1, 4])
        assert (r.mae, r.mse, r.rmse) == (0.75, 0.75, math.sqrt(0.75))
        assert r.r2 == pytest.approx(1 - 3 / 12)

    def test_constant_target_flags_r2(self):
        r = regression_metrics([2, 2, 2], [1, 2, 3])
        assert r.r2_undefined and math.isnan(r.r2)

    def test_validation(self):
        with pytest.raises(ValueError):
            regression_metrics([], [])
        with pytest.raises(ValueError):
            regression_metrics([1, 2], [1])

    @settings(max_examples=100)
    @given(st.integers(2, 60), st.integers(0, 2**31))
    def test_match_brute_force(self, n, seed):
        r = np.random.default_rng(seed)
        y, yhat = r.normal(size=n) * 5, r.normal(size=n) * 5
        got = regression_metrics(y, yhat)
        mae, mse, rmse, r2 = brute_regression(y, yhat)
        for a, b in ((got.mae, mae), (got.mse, mse), (got.rmse, rmse), (got.r2, r2)):
            assert abs(a - b) <= 1e-12 * max(1.0, abs(b))
        assert got.rmse == pytest.approx(math.sqrt(got.mse))


class TestAblation:
    def test_informative_topic_hurts_when_withheld(self, rng):
        n_train, n_test = 200, 40
        d = np.datetime64("2020-01-01") + np.arange(n_train + n_test)
        signal = rng.normal(size=n_train + n_test)
        noise = rng.normal(size=n_train + n_test)
        y = 3 * signal + 0.05 * rng.normal(size=n_train + n_test)
        regs = {"signal": signal, "noise": noise}
        tr = {k: v[:n_train] for k, v in regs.items()}
        te = {k: v[n_train:] for k, v in regs.items()}
        cfg = ForecastConfig(n_changepoints=0, yearly_order=0, weekly_order=0, ridge_lambda=1e-6)
        res = {r.topic: r for r in ablate_topics(d[:n_train], y[:n_train], tr, d[n_train:], y[n_train:], te, cfg)}
        assert res["signal"].mse_pct_change > 1000
        assert abs(res["noise"].mse_pct_change) < 5
        assert res["signal"].mse_all == res["noise"].mse_all

    def test_no_regressors(self):
        d = np.datetime64("2020-01-01") + np.arange(5)
        with pytest.raises(ValueError):
            ablate_topics(d, np.zeros(5), {}, d, np.zeros(5), {})

    def test_single_topic_falls_back_to_no_regressors(self, rng):
        d = np.datetime64("2020-01-01") + np.arange(60)
        x = rng.normal(size=60)
        res = ablate_topics(d[:50], x[:50], {"x": x[:50]}, d[50:], x[50:], {"x": x[50:]})
        assert len(res) == 1 and res[0].mse_without > res[0].mse_all


class TestErrorFixes:
    def test_example(self):
        y = np.zeros(6)
        base = np.array([0, 0, 0, 5, 5, 5.0])
        topic = np.array([0, 0, 0, 0, 5, 0.0])
        dates = np.datetime64("2021-01-04") + np.arange(6)
        c = Counter()
        out = detect_error_fixes(base, topic, y, dates, c)
        assert [f for _, f in out] == [True, False, True]
        assert sum(c.values()) == 2

    def test_identical_predictions_fix_nothing(self, rng):
        y, p = rng.normal(size=30), rng.normal(size=30)
        assert not any(f for _, f in detect_error_fixes(p, p, y))

    def test_perfect_baseline_has_no_errors(self, rng):
        y = rng.normal(size=10)
        assert detect_error_fixes(y, y + 1, y) == []

    def test_validation(self):
        with pytest.raises(ValueError):
            detect_error_fixes([], [], [])
        with pytest.raises(ValueError):
            detect_error_fixes([1, 2], [1], [1, 2])

    @settings(max_examples=50)
    @given(st.integers(1, 50), st.integers(0, 2**31))
    def test_at_most_half_are_errors(self, n, seed):
        r = np.random.default_rng(seed)
        y, b, t = r.normal(size=(3, n))
        assert len(detect_error_fixes(b, t, y)) <= n // 2


def test_report_writers(tmp_path):
    r = regression_metrics([1, 2, 4], [1, 2, 3])
    write_regression_table([("baseline", "test", r)], tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "config,span,MAE,MSE,RMSE,R2" and lines[1].startswith("baseline,test,0.3333")
    q = purity_fmeasure(ContingencyTable(np.eye(2, dtype=int)))
    write_cluster_quality(q, 1.0, tmp_path / "q.csv")
    assert (tmp_path / "q.csv").read_text().splitlines()[1:] == [
        "Purity,1.000", "Inverse Purity,1.000", "F-measure,1.000", "ARI,1.000"
    ]
    from newsregime.evaluation import AblationResult

    write_ablation_table([AblationResult("Oil", 1.0, 1.5, 50.0)], tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().splitlines()[1] == "Oil,1.000000,1.500000,50.000"
