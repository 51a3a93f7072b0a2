"""Sweep-spec validation, the cell runner, and report emission."""
from __future__ import annotations

import csv
import json

import pytest

from microanon.bench import COLUMNS, SweepRow, SweepSpec, emit_report, run_sweep
from microanon.dataset import SyntheticSpec, save_table, synthesize
from microanon.errors import DataError


@pytest.fixture
def salary_files(tmp_path, salary_table):
    save_table(salary_table, tmp_path / "salary.csv")
    salary_table.schema.save(tmp_path / "salary.schema.json")
    return tmp_path


@pytest.fixture
def blob_files(tmp_path):
    """Two well-separated quasi-identifier blobs with two salary-like classes."""
    md, _ = synthesize(SyntheticSpec(
        n=60,
        qid_blob_centers=((0.0, 0.0), (8.0, 5.0)),
        conf_class_centers=((0.0,), (30.0,)),
        noise_scale=0.5,
        seed=4,
    ))
    save_table(md, tmp_path / "blobs.csv")
    md.schema.save(tmp_path / "blobs.schema.json")
    return tmp_path


def _spec(files, **overrides) -> SweepSpec:
    stem = "blobs" if (files / "blobs.csv").exists() else "salary"
    fields = dict(
        dataset=str(files / f"{stem}.csv"),
        schema=str(files / f"{stem}.schema.json"),
        methods=("mdav",),
        k_values=(2,),
        out_dir=str(files),
    )
    fields.update(overrides)
    return SweepSpec(**fields)


class TestSweepSpecValidation:
    def test_unknown_method_named_in_error(self, salary_files):
        with pytest.raises(DataError, match="mondrian"):
            _spec(salary_files, methods=("mdav", "mondrian"))

    def test_at_least_one_method(self, salary_files):
        with pytest.raises(DataError, match="method"):
            _spec(salary_files, methods=())

    def test_at_least_one_k(self, salary_files):
        with pytest.raises(DataError, match="k value"):
            _spec(salary_files, k_values=())

    @pytest.mark.parametrize("ks", [(2, 2), (5, 3), (1, 4, 4)])
    def test_k_values_strictly_increasing(self, salary_files, ks):
        with pytest.raises(DataError, match="strictly increasing"):
            _spec(salary_files, k_values=ks)

    def test_k_below_one_rejected(self, salary_files):
        with pytest.raises(DataError, match=">= 1"):
            _spec(salary_files, k_values=(0,))


class TestSweepSpecFromJson:
    def _write(self, tmp_path, doc) -> SweepSpec:
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return SweepSpec.from_json(path)

    def test_relative_paths_resolve_against_spec_dir(self, salary_files):
        spec = self._write(salary_files, {
            "dataset": "salary.csv", "schema": "salary.schema.json",
            "methods": ["mdav"], "k_values": [2], "out_dir": "results",
        })
        assert spec.dataset == str(salary_files / "salary.csv")
        assert spec.schema == str(salary_files / "salary.schema.json")
        assert spec.out_dir == str(salary_files / "results")

    def test_absolute_paths_kept(self, salary_files, tmp_path):
        spec = self._write(salary_files, {
            "dataset": str(tmp_path / "salary.csv"),
            "schema": "salary.schema.json",
            "methods": ["mdav"], "k_values": [2],
        })
        assert spec.dataset == str(tmp_path / "salary.csv")

    def test_fuzz_overrides_applied(self, salary_files):
        spec = self._write(salary_files, {
            "dataset": "salary.csv", "schema": "salary.schema.json",
            "methods": ["mdav"], "k_values": [2],
            "fuzz": {"m_fuzz": 1.8, "seed": 3},
        })
        assert spec.fuzz.m_fuzz == 1.8
        assert spec.fuzz.seed == 3
        assert spec.fuzz.eta == 2.0  # untouched default

    def test_unknown_fuzz_key_rejected(self, salary_files):
        with pytest.raises(DataError, match="fuzz"):
            self._write(salary_files, {
                "dataset": "salary.csv", "schema": "salary.schema.json",
                "methods": ["mdav"], "k_values": [2], "fuzz": {"bogus": 1},
            })

    def test_missing_required_field_named(self, salary_files):
        with pytest.raises(DataError, match='"methods"'):
            self._write(salary_files, {
                "dataset": "salary.csv", "schema": "salary.schema.json",
                "k_values": [2],
            })

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(DataError, match="valid JSON"):
            SweepSpec.from_json(path)

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(DataError, match="object"):
            SweepSpec.from_json(path)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            SweepSpec.from_json(tmp_path / "nope.json")


class TestRunSweep:
    def test_rows_follow_spec_order(self, blob_files):
        spec = _spec(blob_files, methods=("mdav", "hm_pfsom"), k_values=(2, 3))
        rows = run_sweep(spec)
        assert [(r.method, r.k) for r in rows] == [
            ("mdav", 2), ("mdav", 3), ("hm_pfsom", 2), ("hm_pfsom", 3),
        ]
        for row in rows:
            assert row.error is None
            assert row.k_max >= row.k
            assert row.il >= 0.0
            assert row.wall_time_ms > 0.0

    def test_hybrid_rows_carry_sub_summary(self, blob_files):
        spec = _spec(blob_files, methods=("mdav", "hm_pfsom"), k_values=(2,))
        rows = run_sweep(spec)
        assert rows[0].sub_summary is None
        summary = rows[1].sub_summary
        assert summary["n_subs"] == len(summary["sub_sizes"]) == len(summary["cs"])
        assert sum(summary["sub_sizes"]) == 60

    def test_failing_cell_recorded_sweep_continues(self, salary_files):
        # 13 records cannot host two hybrid groups of k=7, but the plain
        # microaggregation cell still runs.
        spec = _spec(salary_files, methods=("hm_pfsom", "mdav"), k_values=(7,))
        rows = run_sweep(spec)
        assert rows[0].error is not None
        assert rows[0].il is None
        assert rows[1].error is None
        assert rows[1].k_max >= 7

    def test_progress_callback_sees_every_row(self, salary_files):
        seen = []
        spec = _spec(salary_files, methods=("mdav",), k_values=(2, 3))
        rows = run_sweep(spec, progress=seen.append)
        assert seen == rows

    def test_rerun_identical_apart_from_wall_time(self, blob_files):
        spec = _spec(blob_files, methods=("mdav", "hm_pfsom"), k_values=(2, 3))
        first = [r.to_dict(with_time=False) for r in run_sweep(spec)]
        second = [r.to_dict(with_time=False) for r in run_sweep(spec)]
        assert first == second


ROWS = [
    SweepRow(method="mdav", k=2, il=1.5, il_normalized=0.1 + 0.2, linked=3,
             second_nearest=1, expected_matches=3.25, min_sse=1234.5,
             k_max=2, wall_time_ms=12.5, error=None),
    SweepRow(method="hm_pfsom", k=3, il=2.5, il_normalized=4.0, linked=1,
             second_nearest=0, expected_matches=1.0, min_sse=9.0,
             k_max=6, wall_time_ms=80.0, error=None,
             sub_summary={"n_subs": 2, "sub_sizes": [30, 30], "cs": [2, 2]}),
    SweepRow(method="single_axis_pca", k=9, wall_time_ms=0.5, error="boom"),
]


class TestEmitReport:
    def test_csv_layout(self, tmp_path):
        paths = emit_report(ROWS, tmp_path, "demo", formats=("csv",))
        assert paths == [tmp_path / "sweep_demo.csv"]
        with paths[0].open(newline="") as fh:
            records = list(csv.reader(fh))
        assert records[0] == list(COLUMNS)
        assert len(records) == 1 + len(ROWS)
        error_row = dict(zip(COLUMNS, records[3]))
        assert error_row["il"] == ""
        assert error_row["error"] == "boom"

    def test_float_cells_round_trip_exactly(self, tmp_path):
        (path,) = emit_report(ROWS, tmp_path, "demo", formats=("csv",))
        with path.open(newline="") as fh:
            records = list(csv.reader(fh))
        first = dict(zip(COLUMNS, records[1]))
        assert float(first["il_normalized"]) == 0.1 + 0.2
        assert float(first["il"]) == 1.5

    def test_json_payload(self, tmp_path):
        (path,) = emit_report(ROWS, tmp_path, "demo", formats=("json",))
        payload = json.loads(path.read_text())
        assert [row["method"] for row in payload] == ["mdav", "hm_pfsom", "single_axis_pca"]
        assert "sub_summary" not in payload[0]
        assert payload[1]["sub_summary"]["n_subs"] == 2
        assert payload[2]["error"] == "boom"

    def test_both_formats_at_once(self, tmp_path):
        paths = emit_report(ROWS, tmp_path, "demo", formats=("csv", "json"))
        assert [p.name for p in paths] == ["sweep_demo.csv", "sweep_demo.json"]

    def test_long_format_one_row_per_metric(self, tmp_path):
        paths = emit_report(ROWS, tmp_path, "demo", formats=("csv",), long_format=True)
        assert paths[1].name == "sweep_demo_long.csv"
        with paths[1].open(newline="") as fh:
            records = list(csv.reader(fh))
        assert records[0] == ["method", "k", "metric", "value"]
        metrics = [c for c in COLUMNS if c not in ("method", "k", "error")]
        assert len(records) == 1 + len(ROWS) * len(metrics)
        assert ["mdav", "2", "il", "1.5"] in records

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="xml"):
            emit_report(ROWS, tmp_path, "demo", formats=("xml",))

    def test_out_dir_created(self, tmp_path):
        nested = tmp_path / "a" / "b"
        emit_report(ROWS, nested, "demo", formats=("json",))
        assert (nested / "sweep_demo.json").exists()
