import datetime as dt

import numpy as np
import pytest

from tsrepr.dataset import (
    DataError,
    LabelCoverageError,
    LabeledDataset,
    SalesSeries,
    SchemaError,
    TooShortError,
    aggregate,
    aggregate_dataset,
    attach_labels,
    load_long_csv,
    load_wide_csv,
    parse_levels,
    write_labels_csv,
    write_long_csv,
)


def _days(start, n):
    return tuple(start + dt.timedelta(days=i) for i in range(n))


def _write(path, text):
    path.write_text(text)
    return path


class TestSeries:
    def test_rejects_negative_and_nan(self):
        with pytest.raises(DataError):
            SalesSeries("a", [1, -1])
        with pytest.raises(DataError):
            SalesSeries("a", [1, np.nan])

    def test_rejects_uneven_dates(self):
        d = (dt.date(2020, 1, 1), dt.date(2020, 1, 2), dt.date(2020, 1, 4))
        with pytest.raises(DataError):
            SalesSeries("a", [1, 2, 3], d)

    def test_values_read_only(self):
        s = SalesSeries("a", [1, 2])
        with pytest.raises(ValueError):
            s.values[0] = 5

    def test_equality(self):
        assert SalesSeries("a", [1, 2]) == SalesSeries("a", [1.0, 2.0])
        assert SalesSeries("a", [1, 2]) != SalesSeries("a", [1, 3])


class TestLabeledDataset:
    def test_unique_ids(self):
        with pytest.raises(DataError):
            LabeledDataset([SalesSeries("a", [1]), SalesSeries("a", [2])])

    def test_label_coverage(self):
        s = [SalesSeries("a", [1]), SalesSeries("b", [2])]
        with pytest.raises(LabelCoverageError):
            LabeledDataset(s, {"store": {"a": "x"}})
        with pytest.raises(DataError):
            LabeledDataset(s, {"store": {"a": "x", "b": "x"}})
        ds = LabeledDataset(s, {"store": {"a": "x", "b": "y"}})
        assert ds.labels("store") == ["x", "y"]
        assert ds.subset(["b", "a"]).ids == ["a", "b"]
        with pytest.raises(DataError):
            ds.subset(["b"])  # one remaining label is not a classification task


class TestLongCsv:
    def test_three_rows(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,date,value\nA,2020-01-01,1\nA,2020-01-02,2\nA,2020-01-03,3\n")
        ds = load_long_csv(p)
        assert len(ds) == 1 and list(ds.series[0].values) == [1, 2, 3]
        assert ds.series[0].frequency == 7

    def test_interleaved_and_sorted(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,date,value\nA,2020-01-02,2\nB,2020-01-01,5\n"
                                       "A,2020-01-01,1\nB,2020-01-02,6\n")
        ds = load_long_csv(p)
        assert ds.ids == ["A", "B"]
        assert list(ds.series[0].values) == [1, 2]
        assert ds.series[0].dates[0] == dt.date(2020, 1, 1)

    def test_negative_names_row(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,date,value\nA,2020-01-01,1\nA,2020-01-02,-1\n")
        with pytest.raises(DataError, match="row 3"):
            load_long_csv(p)

    def test_non_numeric_names_row(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,date,value\nA,2020-01-01,abc\n")
        with pytest.raises(DataError, match="row 2"):
            load_long_csv(p)

    def test_duplicate_date(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,date,value\nA,2020-01-01,1\nA,2020-01-01,2\n")
        with pytest.raises(DataError, match="duplicate"):
            load_long_csv(p)

    def test_missing_column(self, tmp_path):
        p = _write(tmp_path / "d.csv", "id,day,value\nA,2020-01-01,1\n")
        with pytest.raises(SchemaError):
            load_long_csv(p)

    def test_custom_columns_and_undated(self, tmp_path):
        p = _write(tmp_path / "d.csv", "item,sales\nA,1\nA,4\n")
        ds = load_long_csv(p, id_col="item", date_col=None, value_col="sales", frequency=5)
        assert list(ds.series[0].values) == [1, 4] and ds.series[0].frequency == 5

    def test_roundtrip(self, tmp_path):
        s = SalesSeries("x", [0.1, 2.0, 3.5], _days(dt.date(2021, 2, 27), 3))
        ds = LabeledDataset([s], name="r")
        write_long_csv(ds, tmp_path / "o.csv")
        back = load_long_csv(tmp_path / "o.csv")
        assert back.series[0] == s


class TestWideCsv:
    def test_m5_layout(self, tmp_path):
        p = _write(tmp_path / "w.csv", "id,store_id,cat_id,d_1,d_2,d_3\n"
                                       "a,S1,C1,0,1,2\nb,S2,C1,3,0,0\n")
        ds = load_wide_csv(p, label_cols=("store_id",))
        assert ds.ids == ["a", "b"]
        assert list(ds.series[1].values) == [3, 0, 0]
        assert ds.tasks == {"store_id": {"a": "S1", "b": "S2"}}


class TestLabels:
    def _ds(self):
        return LabeledDataset([SalesSeries("a", [1]), SalesSeries("b", [2])])

    def test_one_task(self, tmp_path):
        p = _write(tmp_path / "l.csv", "id,store\na,s1\nb,s2\n")
        assert attach_labels(self._ds(), p).tasks == {"store": {"a": "s1", "b": "s2"}}

    def test_two_tasks(self, tmp_path):
        p = _write(tmp_path / "l.csv", "id,store,cat\na,s1,c1\nb,s2,c2\n")
        assert set(attach_labels(self._ds(), p).tasks) == {"store", "cat"}

    def test_missing_id(self, tmp_path):
        p = _write(tmp_path / "l.csv", "id,store\na,s1\n")
        with pytest.raises(LabelCoverageError, match="b"):
            attach_labels(self._ds(), p)

    def test_unknown_id(self, tmp_path):
        p = _write(tmp_path / "l.csv", "id,store\na,s1\nb,s2\nc,s3\n")
        with pytest.raises(LabelCoverageError):
            attach_labels(self._ds(), p)

    def test_write_roundtrip(self, tmp_path):
        ds = LabeledDataset(self._ds().series, {"store": {"a": "s1", "b": "s2"}})
        write_labels_csv(ds, tmp_path / "l.csv")
        assert attach_labels(self._ds(), tmp_path / "l.csv").tasks == ds.tasks


class TestAggregate:
    def test_weekly_blocks(self):
        w = aggregate(SalesSeries("a", np.ones(14)), "weekly")
        assert list(w.values) == [7, 7] and w.frequency == 52 and w.level == "weekly"

    def test_weekly_drops_partial(self):
        assert list(aggregate(SalesSeries("a", np.ones(17)), "weekly").values) == [7, 7]

    def test_single_bucket_is_too_short(self):
        with pytest.raises(TooShortError):
            aggregate(SalesSeries("a", np.ones(10)), "weekly")

    def test_calendar_months(self):
        dates = _days(dt.date(2021, 3, 1), 61)
        m = aggregate(SalesSeries("a", np.ones(61), dates), "monthly")
        assert list(m.values) == [31, 30] and m.frequency == 12
        assert m.dates == (dt.date(2021, 3, 1), dt.date(2021, 4, 1))

    def test_partial_months_dropped(self):
        dates = _days(dt.date(2021, 2, 20), 80)  # Feb 20 .. May 10
        m = aggregate(SalesSeries("a", np.arange(80.0), dates), "monthly")
        assert len(m.values) == 2  # March and April
        assert m.values.sum() == np.arange(80.0)[9:70].sum()

    def test_undated_months(self):
        m = aggregate(SalesSeries("a", np.ones(95)), "monthly")
        assert list(m.values) == [30, 30, 30]

    def test_conservation(self, rng):
        x = rng.poisson(3, size=700).astype(float)
        w = aggregate(SalesSeries("a", x), "weekly")
        assert w.values.sum() == x[:700].sum()

    def test_dataset(self):
        ds = LabeledDataset([SalesSeries("a", np.ones(28)), SalesSeries("b", np.ones(28))],
                            {"t": {"a": 1, "b": 2}})
        w = aggregate_dataset(ds, "weekly")
        assert w.level == "weekly" and w.tasks == ds.tasks

    def test_parse_levels(self):
        assert parse_levels("d,w,m") == ("daily", "weekly", "monthly")
        assert parse_levels(["monthly", "d"]) == ("monthly", "daily")
        with pytest.raises(ValueError):
            parse_levels("d,x")
