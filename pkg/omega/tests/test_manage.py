"""Tests for matrix files and report serialization."""

import json
import os

import numpy as np
import pytest

import omega
from omega import manage
from omega.errors import InvalidParameters, IoError
from omega.space import SymmetricOperator


def test_check_file_exists(tmp_path):
    with pytest.raises(IoError):
        manage.check_file_exists(str(tmp_path / "missing.json"))
    path = tmp_path / "present.txt"
    path.write_text("1 0\n0 2\n")
    manage.check_file_exists(str(path))


def test_matrix_json_round_trip(tmp_path, he):
    path = str(tmp_path / "he.json")
    manage.write_matrix(he.H, path)
    H = manage.read_matrix(path)
    assert np.array_equal(H.entries, he.H.entries)


def test_read_text_matrix(tmp_path):
    path = tmp_path / "h.txt"
    np.savetxt(path, np.array([[1.0, 0.5], [0.5 + 1e-14, 2.0]]))
    H = manage.read_matrix(str(path))
    assert H.dim == 2
    assert np.array_equal(H.entries, H.entries.T)


@pytest.mark.parametrize(
    "name,content",
    [
        ("bad.json", "{not json"),
        ("nokey.json", '{"dim": 2}'),
        ("dim.json", '{"dim": 3, "entries": [[1, 0], [0, 2]]}'),
        ("asym.json", '{"dim": 2, "entries": [[1, 0.5], [0.7, 2]]}'),
        ("small.txt", "1.0\n"),
        ("ragged.txt", "1 2\n3\n"),
    ],
)
def test_read_matrix_errors(tmp_path, name, content):
    path = tmp_path / name
    path.write_text(content)
    with pytest.raises(IoError):
        manage.read_matrix(str(path))


def test_json_floats_keep_full_precision():
    text = manage.format_json({"x": 0.1, "flag": True, "n": 3, "none": None, "bad": float("nan")})
    data = json.loads(text)
    assert "0.10000000000000001" in text
    assert data == {"x": 0.1, "flag": True, "n": 3, "none": None, "bad": None}


def test_json_nested_structures():
    report = {"results": {"roots": [-2.903, -2.06], "rows": [{"a": 1}, {"a": 2}], "empty": []}}
    data = json.loads(manage.format_json(report))
    assert data == report


def test_tsv_single_row():
    report = {"scenario": {"task": "hum"}, "results": {"roots": [-2.5, 0.25]}}
    lines = manage.format_tsv(report).splitlines()
    assert len(lines) == 2
    header, row = lines[0].split("\t"), lines[1].split("\t")
    assert header == ["scenario.task", "results.roots"]
    assert row == ["hum", "-2.5;0.25"]


def test_tsv_one_row_per_trial():
    report = {
        "scenario": {"task": "bench"},
        "results": {"trials_run": 2, "trials": [{"trial": 0, "ok": True}, {"trial": 1, "ok": False}]},
    }
    table = manage.report_table(report)
    assert len(table) == 2
    assert list(table["trial.trial"]) == [0, 1]
    assert list(table["results.trials_run"]) == [2, 2]


def test_write_report(tmp_path):
    path = tmp_path / "report.json"
    manage.write_report({"results": {"value": 1.5}}, str(path))
    assert json.loads(path.read_text()) == {"results": {"value": 1.5}}
    with pytest.raises(InvalidParameters):
        manage.format_report({}, "xml")
    with pytest.raises(IoError):
        manage.write_report({}, str(tmp_path / "missing" / "report.json"))


def test_symmetric_operator_written_with_dim(tmp_path):
    path = tmp_path / "m.json"
    manage.write_matrix(SymmetricOperator.diagonal([1.0, 2.0]), str(path))
    assert json.loads(path.read_text())["dim"] == 2


def test_packaged_he_model_matches_builtin(he):
    path = os.path.join(os.path.dirname(omega.__file__), "data", "he_model.json")
    H = manage.read_matrix(path)
    assert H.dim == 3
    assert np.array_equal(H.entries, he.H.entries)
