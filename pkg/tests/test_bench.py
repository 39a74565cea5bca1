import csv
import io as _io

import numpy as np
import pytest

from netrecon import bench
from netrecon.errors import SingularModelError

SMALL = dict(sizes=(10,), snrs=(10.0, 25.0), trials=2, steps=200,
             variants=("lasso", "reweighted-l1"))


def _csv_text(report, timing=False, tmp_path=None):
    path = tmp_path / "raw.csv"
    report.write_raw(path, timing=timing)
    return path.read_text()


def test_cell_seeds():
    a = bench.cell_seeds(0, 50, 25.0, 3)
    assert a == bench.cell_seeds(0, 50, 25.0, 3)
    b = bench.cell_seeds(0, 50, 5.0, 3)
    assert a[:2] == b[:2] and a[2] != b[2]
    assert bench.cell_seeds(0, 50, 25.0, 4)[0] != a[0]
    assert bench.cell_seeds(1, 50, 25.0, 3)[0] != a[0]


def test_sweep_rows_are_schema_complete(tmp_path):
    report = bench.run_sweep(bench.SweepSpec(**SMALL))
    assert len(report.rows) == 2 * 2 * 2
    for r in report.rows:
        assert set(bench.RAW_FIELDS) <= set(r)
        assert r["status"] == "ok"
        assert r["nmse"] >= 0
        assert 0 <= r["support_precision"] <= 1 and 0 <= r["support_recall"] <= 1
        assert r["wall_time_seconds"] > 0
    with open(tmp_path / "raw.csv", "w") as fh:
        pass
    report.write_raw(tmp_path / "raw.csv")
    rows = list(csv.DictReader(open(tmp_path / "raw.csv")))
    assert len(rows) == 8 and tuple(rows[0]) == bench.RAW_FIELDS


def test_aggregate_matches_recomputation(tmp_path):
    report = bench.run_sweep(bench.SweepSpec(**SMALL))
    agg = report.aggregate()
    assert len(agg) == 4
    for cell in agg:
        vals = [r["nmse"] for r in report.rows
                if r["snr_db"] == cell["snr_db"] and r["variant"] == cell["variant"]]
        assert cell["trials"] == len(vals) == 2
        assert cell["nmse_mean"] == pytest.approx(sum(vals) / 2)
        assert cell["nmse_std"] == pytest.approx(abs(vals[0] - vals[1]) / 2)
    report.write_aggregate(tmp_path / "agg.csv")
    assert len(list(csv.DictReader(open(tmp_path / "agg.csv")))) == 4


def test_sweep_is_deterministic_across_runs_and_workers(tmp_path):
    spec = bench.SweepSpec(**SMALL, blocks=3, workers=(1, 2))
    first = bench.run_sweep(spec)
    second = bench.run_sweep(spec)
    assert _csv_text(first, tmp_path=tmp_path) == _csv_text(second, tmp_path=tmp_path)
    by_workers = {}
    for r in first.rows:
        key = (r["snr_db"], r["trial"], r["variant"])
        by_workers.setdefault(key, []).append(r["nmse"])
    assert all(len(set(v)) == 1 for v in by_workers.values())


def test_cell_data_does_not_depend_on_sweep_shape():
    one = bench.run_sweep(bench.SweepSpec(sizes=(10,), snrs=(25.0,), trials=2, steps=200))
    two = bench.run_sweep(bench.SweepSpec(sizes=(10,), snrs=(10.0, 25.0), trials=2, steps=200))
    assert [r["nmse"] for r in one.rows] == [r["nmse"] for r in two.rows if r["snr_db"] == 25.0]


def test_failures_are_recorded_and_sweep_continues(monkeypatch):
    real = bench.estimate
    calls = {"n": 0}

    def flaky(*args, **kwargs):
        calls["n"] += 1
        if calls["n"] == 2:
            raise SingularModelError("forced")
        return real(*args, **kwargs)

    monkeypatch.setattr(bench, "estimate", flaky)
    report = bench.run_sweep(bench.SweepSpec(**SMALL))
    assert len(report.failures) == 1
    assert "forced" in report.failures[0]["error"]
    assert sum(r["status"] == "ok" for r in report.rows) == 7
    agg = {(c["snr_db"], c["variant"]): c for c in report.aggregate()}
    assert agg[(10.0, "reweighted-l1")]["failures"] == 1


@pytest.mark.parametrize("bad", [
    {"trials": 0}, {"variants": ("nope",)}, {"sizes": (1,)}, {"blocks": 0},
    {"blocks": 100, "sizes": (10,)}, {"nodes": (10,), "sizes": (10,)}, {"workers": (0,)},
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        bench.SweepSpec(**bad).validate()
