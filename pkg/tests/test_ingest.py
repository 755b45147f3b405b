import datetime as dt

import httpx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from newsregime.ingest import (
    Article,
    DateRange,
    KeywordParseError,
    StockDataError,
    UpstreamError,
    align_counts,
    compute_pct_change,
    fetch_stock_history,
    load_corpus,
    make_splits,
    parse_keyword_field,
    preprocess_corpus,
    read_stock,
    reconstruct_closes,
    write_corpus,
    write_stock,
)


class TestParseKeywordField:
    def test_bracketed_list(self):
        raw = "['bankruptcies', 'exciteathome', 'amerco']"
        assert parse_keyword_field(raw) == ["bankruptcies", "exciteathome", "amerco"]

    def test_empty(self):
        assert parse_keyword_field("[]") == []
        assert parse_keyword_field("") == []

    def test_duplicates_kept(self):
        assert parse_keyword_field("['a', 'a']") == ["a", "a"]

    def test_trims_and_lowercases(self):
        assert parse_keyword_field('[" Oil Prices ", "OPEC"]') == ["oil prices", "opec"]

    def test_escaped_quote(self):
        assert parse_keyword_field(r"['o\'neill, tip']") == ["o'neill, tip"]

    @pytest.mark.parametrize(
        "raw, offset",
        [("'a'", 0), ("['a'", 4), ("['a' 'b']", 5), ("['a',]", 5), ("['abc", 1), ("['a'] x", 6)],
    )
    def test_malformed_reports_byte_offset(self, raw, offset):
        with pytest.raises(KeywordParseError) as err:
            parse_keyword_field(raw)
        assert err.value.offset == offset

    def test_offset_counts_bytes_not_chars(self):
        with pytest.raises(KeywordParseError) as err:
            parse_keyword_field("['é' x]")
        assert err.value.offset == len("['é' ".encode())

    @given(st.lists(st.text(alphabet="abcdefgh xyz'\\,.-", min_size=1).map(str.strip).filter(bool)))
    def test_write_then_parse_round_trips(self, kws):
        kws = [k.lower() for k in kws]
        row = "[" + ", ".join("'" + k.replace("\\", "\\\\").replace("'", "\\'") + "'" for k in kws) + "]"
        assert parse_keyword_field(row) == kws


def _articles(n_empty, n_full, section="business"):
    day = dt.date(2020, 1, 1)
    empty = [Article(day, f"e{i}", (), section) for i in range(n_empty)]
    full = [Article(day, f"f{i}", ("oil",), section) for i in range(n_full)]
    return empty + full


class TestPreprocess:
    def test_keyword_filter_removes_22_of_100(self):
        kept, report = preprocess_corpus(_articles(22, 78))
        assert len(kept) == 78
        assert report.removed_empty == 22 and report.removed_section == 0

    def test_empty_input(self):
        kept, report = preprocess_corpus([])
        assert kept == [] and report.kept == 0

    def test_identity_when_everything_qualifies(self):
        arts = _articles(0, 10)
        kept, _ = preprocess_corpus(arts)
        assert kept == arts

    def test_section_filter_is_case_insensitive(self):
        arts = _articles(0, 3, "Business") + _articles(0, 2, "Sports")
        kept, report = preprocess_corpus(arts)
        assert len(kept) == 3 and report.removed_section == 2

    def test_whitelist_none_disables_filter(self):
        arts = _articles(0, 2, "Sports")
        assert len(preprocess_corpus(arts, None)[0]) == 2

    @given(st.lists(st.tuples(st.booleans(), st.sampled_from(["business", "sports", "World"])), max_size=40))
    def test_output_is_subset(self, spec):
        arts = [Article(dt.date(2020, 1, 1), str(i), ("k",) if has else (), sec) for i, (has, sec) in enumerate(spec)]
        kept, report = preprocess_corpus(arts)
        assert len(kept) <= len(arts)
        assert all(a in arts for a in kept)
        assert report.kept + report.removed_empty + report.removed_section == len(arts)


class TestCorpusFile:
    def test_round_trip_and_dedup(self, tmp_path):
        arts = [
            Article(dt.date(2020, 1, 2), "Oil rises", ("oil", "opec"), "business"),
            Article(dt.date(2020, 1, 3), "Vote, again", ("elections",), "politics"),
        ]
        p = tmp_path / "c.csv"
        write_corpus(arts + [arts[0]], p)
        assert load_corpus(p) == arts

    def test_missing_column(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("date,headline\n2020-01-01,x\n")
        with pytest.raises(ValueError, match="keywords"):
            load_corpus(p)

    def test_parse_error_names_line(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text('date,headline,section,keywords\n2020-01-01,x,business,"[\'a\'"\n')
        with pytest.raises(KeywordParseError, match=":2:"):
            load_corpus(p)


class TestPctChange:
    def test_arithmetic(self):
        s = compute_pct_change([100, 102, 101.49])
        np.testing.assert_allclose(s.pct_change, [2.0, -0.5], atol=1e-12)

    def test_constant(self):
        assert list(compute_pct_change([50, 50, 50]).pct_change) == [0.0, 0.0]

    def test_matches_one_line_oracle(self, rng):
        c = rng.uniform(10, 200, size=10)
        expected = [100 * (c[i] - c[i - 1]) / c[i - 1] for i in range(1, 10)]
        np.testing.assert_allclose(compute_pct_change(c).pct_change, expected, rtol=1e-12)

    def test_first_date_dropped(self):
        d = np.array(["2020-01-01", "2020-01-02", "2020-01-03"], dtype="datetime64[D]")
        s = compute_pct_change([1, 2, 3], d)
        assert list(s.dates) == list(d[1:])

    @pytest.mark.parametrize("bad", [[100, 0, 1], [100, -5], [1.0, float("nan")]])
    def test_non_positive_rejected(self, bad):
        with pytest.raises(StockDataError):
            compute_pct_change(bad)

    def test_too_short(self):
        with pytest.raises(ValueError):
            compute_pct_change([1.0])

    # price ratios of realistic size; a 1e7x collapse loses digits in the percent form itself
    @given(st.lists(st.floats(1.0, 1e4), min_size=2, max_size=60))
    def test_reconstruction_round_trip(self, closes):
        s = compute_pct_change(closes)
        np.testing.assert_allclose(reconstruct_closes(s), closes[1:], rtol=1e-9)

    def test_stock_file_round_trip(self, tmp_path):
        d = np.arange("2020-01-01", "2020-01-06", dtype="datetime64[D]")
        s = compute_pct_change([10, 11, 12, 11, 13], d)
        write_stock(s, tmp_path / "s.csv")
        back = read_stock(tmp_path / "s.csv")
        assert list(back.dates) == list(s.dates)
        assert np.array_equal(back.pct_change, s.pct_change)
        assert np.array_equal(back.closes, s.closes)


class TestSplits:
    def test_fixed_cut_dates(self):
        sp = make_splits(DateRange("2000-01-01", "2024-11-01"))
        assert sp.train.end == dt.date(2018, 5, 10)
        assert sp.test.end == dt.date(2024, 5, 1)
        for got, want in zip(sp.proportions(), (0.74, 0.04, 0.20, 0.02)):
            assert abs(got - want) <= 0.01

    def test_single_day_range(self):
        with pytest.raises(ValueError):
            make_splits(DateRange("2020-01-01", "2020-01-02"))

    def test_range_not_covering_cuts(self):
        with pytest.raises(ValueError, match="cut dates"):
            make_splits(DateRange("2010-01-01", "2020-01-01"))

    def test_custom_proportions(self):
        rng = DateRange("2001-01-01", "2011-01-01")
        sp = make_splits(rng, [50, 10, 35, 5])
        total = rng.days
        offsets = [round(total * f) for f in (0.5, 0.6, 0.95)]
        assert [r.end for r in sp.ranges()[:3]] == [rng.start + dt.timedelta(days=o) for o in offsets]

    @given(st.integers(20, 5000), st.lists(st.floats(0.05, 1.0), min_size=4, max_size=4))
    def test_partition(self, days, props):
        rng = DateRange(dt.date(2000, 1, 1), dt.date(2000, 1, 1) + dt.timedelta(days=days))
        try:
            sp = make_splits(rng, props)
        except ValueError:
            return
        rs = sp.ranges()
        assert rs[0].start == rng.start and rs[-1].end == rng.end
        assert all(a.end == b.start for a, b in zip(rs[:-1], rs[1:]))
        assert sum(r.days for r in rs) == rng.days


class TestFetchStock:
    def _write(self, path, rows):
        path.write_text("date,close\n" + "".join(f"{d},{c}\n" for d, c in rows))

    def test_five_rows(self, tmp_path):
        p = tmp_path / "p.csv"
        self._write(p, [(f"2020-01-0{i}", 100 + i) for i in range(1, 6)])
        h = fetch_stock_history("X", DateRange("2020-01-01", "2020-02-01"), p)
        assert len(h) == 5
        assert len(h.to_pct_change()) == 4

    def test_unsorted_rows_sorted(self, tmp_path):
        p = tmp_path / "p.csv"
        self._write(p, [("2020-01-03", 3), ("2020-01-01", 1), ("2020-01-02", 2)])
        h = fetch_stock_history("X", DateRange("2020-01-01", "2020-02-01"), p)
        assert list(h.closes) == [1, 2, 3]

    def test_duplicate_date_named(self, tmp_path):
        p = tmp_path / "p.csv"
        self._write(p, [("2020-01-02", 3), ("2020-01-02", 1)])
        with pytest.raises(StockDataError, match="2020-01-02"):
            fetch_stock_history("X", DateRange("2020-01-01", "2020-02-01"), p)

    def test_empty_history_in_range(self, tmp_path):
        p = tmp_path / "p.csv"
        self._write(p, [("2019-01-02", 3)])
        with pytest.raises(StockDataError, match="no prices"):
            fetch_stock_history("X", DateRange("2020-01-01", "2020-02-01"), p)

    def test_http_endpoint(self):
        seen = {}

        def handler(request):
            seen.update(request.url.params)
            body = {"symbol": "SPY", "prices": [{"date": "2020-01-03", "close": 2.0}, {"date": "2020-01-02", "close": 1.0}]}
            return httpx.Response(200, json=body)

        client = httpx.Client(transport=httpx.MockTransport(handler))
        h = fetch_stock_history("SPY", DateRange("2020-01-01", "2020-02-01"), "http://prices.test", client=client)
        assert list(h.closes) == [1.0, 2.0]
        assert seen == {"symbol": "SPY", "start": "2020-01-01", "end": "2020-02-01"}

    def test_http_failure_is_upstream_error(self):
        client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(503)))
        with pytest.raises(UpstreamError):
            fetch_stock_history("SPY", DateRange("2020-01-01", "2020-02-01"), "http://prices.test", client=client)

    def test_http_bad_payload(self):
        client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"rows": []})))
        with pytest.raises(StockDataError):
            fetch_stock_history("SPY", DateRange("2020-01-01", "2020-02-01"), "http://prices.test", client=client)


class TestAlignCounts:
    cal = np.arange("2020-01-03", "2020-01-08", dtype="datetime64[D]")  # Fri..Tue
    trading = np.array(["2020-01-03", "2020-01-06", "2020-01-07"], dtype="datetime64[D]")

    def test_roll_forward_weekend(self):
        out = align_counts(self.cal, [1, 2, 3, 4, 5], self.trading, "roll")
        assert list(out) == [1, 2 + 3 + 4, 5]

    def test_drop(self):
        out = align_counts(self.cal, [1, 2, 3, 4, 5], self.trading, "drop")
        assert list(out) == [1, 4, 5]

    def test_roll_preserves_total_inside_span(self, rng):
        cal = np.arange("2020-01-01", "2020-03-01", dtype="datetime64[D]")
        trading = cal[np.is_busday(cal)]
        vals = rng.integers(0, 5, len(cal))
        first = np.searchsorted(cal, trading[0])
        last = np.searchsorted(cal, trading[-1])
        assert align_counts(cal, vals, trading, "roll").sum() == vals[first : last + 1].sum()

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            align_counts(self.cal, [0] * 5, self.trading, "ffill")
