"""Command-line behaviour, exercised through ``main(argv)`` return codes."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from conftest import SALARY_ROWS
from microanon.bench import COLUMNS
from microanon.cli import main
from microanon.dataset import (
    Microdata,
    SyntheticSpec,
    load_table,
    save_table,
    synthesize,
)
from microanon.metrics import k_anonymity_check
from microanon.schema import Attribute, AttributeRole, AttributeSchema

NAMES = ["ana", "bo", "cy", "dee", "eli", "fay", "gus", "hal", "ida", "jo",
         "kim", "lee", "mo"]


@pytest.fixture
def salary_files(tmp_path, salary_table):
    data = tmp_path / "salary.csv"
    schema = tmp_path / "salary.schema.json"
    save_table(salary_table, data)
    salary_table.schema.save(schema)
    return {"data": data, "schema": schema, "dir": tmp_path,
            "table": salary_table}


@pytest.fixture
def named_files(tmp_path):
    """Salary table with a textual identifier column in front."""
    schema = AttributeSchema((
        Attribute("name", AttributeRole.IDENTIFIER),
        Attribute("zip", AttributeRole.QUASI_IDENTIFIER),
        Attribute("age", AttributeRole.QUASI_IDENTIFIER),
        Attribute("salary", AttributeRole.CONFIDENTIAL),
    ))
    data = tmp_path / "people.csv"
    with data.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "zip", "age", "salary"])
        for name, row in zip(NAMES, SALARY_ROWS):
            writer.writerow([name] + [f"{v:g}" for v in row])
    schema_path = tmp_path / "people.schema.json"
    schema.save(schema_path)
    return {"data": data, "schema": schema_path, "dir": tmp_path}


@pytest.fixture
def blob_files(tmp_path):
    md, _ = synthesize(SyntheticSpec(
        n=60,
        qid_blob_centers=((0.0, 0.0), (8.0, 5.0)),
        conf_class_centers=((0.0,), (30.0,)),
        noise_scale=0.5,
        seed=4,
    ))
    data = tmp_path / "blobs.csv"
    schema = tmp_path / "blobs.schema.json"
    save_table(md, data)
    md.schema.save(schema)
    return {"data": data, "schema": schema, "dir": tmp_path}


def _anonymize_args(files, out, *extra):
    return ["anonymize", "--input", str(files["data"]),
            "--schema", str(files["schema"]), "--out", str(out), *extra]


class TestAnonymizeCommand:
    def test_masked_output_is_k_anonymous(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        code = main(_anonymize_args(salary_files, out, "--method", "mdav", "--k", "2"))
        assert code == 0
        masked = load_table(out, salary_files["table"].schema)
        assert k_anonymity_check(masked, 2).holds
        # confidential column is untouched
        np.testing.assert_array_equal(masked.rows[:, 2], SALARY_ROWS[:, 2])
        assert "method=mdav" in capsys.readouterr().out

    def test_json_summary_on_stdout(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        code = main(_anonymize_args(salary_files, out,
                                    "--method", "mdav", "--k", "3", "--json"))
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 13
        assert doc["method"] == "mdav"
        assert doc["k"] == 3
        assert doc["k_max"] >= 3
        assert doc["out"] == str(out)

    def test_identifiers_dropped_and_codes_mapped(self, named_files):
        out = named_files["dir"] / "masked.csv"
        code = main(_anonymize_args(named_files, out, "--method", "mdav",
                                    "--k", "2", "--encode-categorical"))
        assert code == 0
        with out.open(newline="") as fh:
            header = next(csv.reader(fh))
        assert header == ["zip", "age", "salary"]
        codes = json.loads((named_files["dir"] / "masked.csv.codes.json").read_text())
        assert codes == {"name": {name: i for i, name in enumerate(sorted(NAMES))}}

    def test_hybrid_writes_grouping_structure(self, blob_files):
        out = blob_files["dir"] / "masked.csv"
        code = main(_anonymize_args(blob_files, out,
                                    "--method", "hm_pfsom", "--k", "2"))
        assert code == 0
        doc = json.loads((blob_files["dir"] / "masked.csv.structure.json").read_text())
        assert len(doc["labels"]) == 60
        assert sum(g["size"] for g in doc["groups"]) == 60
        assert sum(s["size"] for s in doc["subs"]) == 60

    def test_k_or_groups_count_required(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        assert main(_anonymize_args(salary_files, out, "--method", "mdav")) == 1
        assert "--k" in capsys.readouterr().err
        assert not out.exists()

    def test_c_min_needs_c_max(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        args = _anonymize_args(salary_files, out, "--method", "hm_pfsom",
                               "--k", "2", "--c-min", "2")
        assert main(args) == 1
        assert "--c-max" in capsys.readouterr().err

    def test_infeasible_k_exits_with_method_code(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        args = _anonymize_args(salary_files, out, "--method", "mdav", "--k", "99")
        assert main(args) == 3
        assert "method failure" in capsys.readouterr().err
        assert not out.exists()

    def test_missing_input_exits_with_data_code(self, salary_files, capsys):
        args = ["anonymize", "--input", str(salary_files["dir"] / "nope.csv"),
                "--schema", str(salary_files["schema"]),
                "--out", str(salary_files["dir"] / "masked.csv"),
                "--method", "mdav", "--k", "2"]
        assert main(args) == 2
        assert "data error" in capsys.readouterr().err

    def test_bad_flags_exit_with_usage_code(self, capsys):
        assert main(["anonymize", "--nope"]) == 1
        assert main([]) == 1
        assert main(["anonymize", "--input", "x", "--schema", "y",
                     "--out", "z", "--method", "mondrian", "--k", "2"]) == 1
        capsys.readouterr()

    def test_rerun_is_byte_identical(self, blob_files):
        first = blob_files["dir"] / "a.csv"
        second = blob_files["dir"] / "b.csv"
        for out in (first, second):
            assert main(_anonymize_args(blob_files, out,
                                        "--method", "hm_pfsom", "--k", "2")) == 0
        assert first.read_bytes() == second.read_bytes()


class TestEvaluateCommand:
    def _mask(self, files, out, k="2"):
        assert main(_anonymize_args(files, out, "--method", "mdav", "--k", k)) == 0

    def test_json_report(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        self._mask(salary_files, out)
        capsys.readouterr()
        code = main(["evaluate", "--input", str(salary_files["data"]),
                     "--masked", str(out), "--schema", str(salary_files["schema"]),
                     "--k", "2", "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["k_requested"] == 2
        assert doc["k_holds"] is True
        assert doc["il"] > 0.0
        assert doc["linked"] + doc["second_nearest"] + doc["not_linked"] == 13

    def test_text_report(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        self._mask(salary_files, out)
        capsys.readouterr()
        code = main(["evaluate", "--input", str(salary_files["data"]),
                     "--masked", str(out), "--schema", str(salary_files["schema"]),
                     "--k", "2"])
        assert code == 0
        text = capsys.readouterr().out
        assert "il " in text
        assert "holds" in text

    def test_masked_file_without_identifier_columns(self, named_files, capsys):
        out = named_files["dir"] / "masked.csv"
        assert main(_anonymize_args(named_files, out, "--method", "mdav",
                                    "--k", "2", "--encode-categorical")) == 0
        capsys.readouterr()
        code = main(["evaluate", "--input", str(named_files["data"]),
                     "--masked", str(out), "--schema", str(named_files["schema"]),
                     "--encode-categorical", "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["k_anonymous_at"] >= 2

    def test_row_count_mismatch_is_a_data_error(self, salary_files, capsys):
        out = salary_files["dir"] / "masked.csv"
        self._mask(salary_files, out)
        lines = out.read_text().strip().splitlines()
        out.write_text("\n".join(lines[:-1]) + "\n")
        code = main(["evaluate", "--input", str(salary_files["data"]),
                     "--masked", str(out), "--schema", str(salary_files["schema"])])
        assert code == 2
        assert "row-aligned" in capsys.readouterr().err


class TestSweepCommand:
    def _write_spec(self, files, **extra):
        doc = {"dataset": files["data"].name, "schema": files["schema"].name,
               "methods": ["mdav", "single_axis_zscore"], "k_values": [2, 3],
               "out_dir": "results"}
        doc.update(extra)
        path = files["dir"] / "sweep.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path

    def test_writes_csv_report(self, salary_files, capsys):
        spec = self._write_spec(salary_files)
        assert main(["sweep", str(spec)]) == 0
        captured = capsys.readouterr()
        report = Path(captured.out.strip())
        assert report == salary_files["dir"] / "results" / "sweep_salary.csv"
        with report.open(newline="") as fh:
            records = list(csv.reader(fh))
        assert records[0] == list(COLUMNS)
        assert len(records) == 1 + 4
        assert "sweep: mdav k=2: ok" in captured.err

    def test_json_and_long_reports(self, salary_files, capsys):
        spec = self._write_spec(salary_files)
        assert main(["sweep", str(spec), "--json", "--long"]) == 0
        paths = [Path(p) for p in json.loads(capsys.readouterr().out)]
        assert [p.name for p in paths] == [
            "sweep_salary.csv", "sweep_salary.json", "sweep_salary_long.csv",
        ]
        assert all(p.exists() for p in paths)

    def test_missing_spec_is_a_data_error(self, tmp_path, capsys):
        assert main(["sweep", str(tmp_path / "nope.json")]) == 2
        assert "data error" in capsys.readouterr().err


class TestInspectCommand:
    def test_json_summary(self, salary_files, capsys):
        code = main(["inspect", "--input", str(salary_files["data"]),
                     "--schema", str(salary_files["schema"]), "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["n"] == 13
        assert [a["name"] for a in doc["attributes"]] == ["zip", "age", "salary"]
        assert doc["attributes"][2]["min"] == 500.0
        assert doc["attributes"][2]["max"] == 3800.0
        assert doc["k_max"] == 1  # all quasi-identifier pairs are distinct

    def test_text_summary(self, salary_files, capsys):
        code = main(["inspect", "--input", str(salary_files["data"]),
                     "--schema", str(salary_files["schema"])])
        assert code == 0
        text = capsys.readouterr().out
        assert "records: 13" in text
        assert "salary" in text

    def test_encoded_columns_reported(self, named_files, capsys):
        code = main(["inspect", "--input", str(named_files["data"]),
                     "--schema", str(named_files["schema"]),
                     "--encode-categorical", "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["encoded_columns"] == ["name"]
        assert doc["n"] == 13
