"""Tests for the command-line interface."""

import json

import pytest
from click.testing import CliRunner

from omega.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_help_lists_tasks(runner):
    result = runner.invoke(cli, ["--help"])
    assert result.exit_code == 0
    for task in ("spectrum", "omega-min", "hum", "refine", "pathology", "bench"):
        assert task in result.output


def test_spectrum_to_file(runner, tmp_path):
    out = tmp_path / "spectrum.json"
    result = runner.invoke(cli, ["spectrum", "--builtin", "he-model", "--out", str(out)])
    assert result.exit_code == 0
    data = json.loads(out.read_text())
    assert data["results"]["energies"] == pytest.approx([-2.903, -2.146, -2.06])


def test_spectrum_to_stdout(runner):
    result = runner.invoke(cli, ["spectrum", "--builtin", "he-model"], env={"OMEGA_LOG": "error"})
    assert result.exit_code == 0
    assert json.loads(result.output)["results"]["dim"] == 3


def test_tsv_format(runner, tmp_path):
    out = tmp_path / "hum.tsv"
    result = runner.invoke(cli, ["hum", "--builtin", "he-model", "--format", "tsv", "--out", str(out)])
    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert "results.roots" in lines[0].split("\t")


def test_omega_min_with_steepening(runner, tmp_path):
    out = tmp_path / "omega.json"
    args = ["omega-min", "--builtin", "he-model", "--steepen", "N=1", "--restarts", "2", "--out", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    results = json.loads(out.read_text())["results"]
    assert results["steepened"]["e_f"] == pytest.approx(-2.146, abs=1e-6)


def test_bench_random(runner, tmp_path):
    out = tmp_path / "bench.json"
    args = ["bench", "--random", "dim=4,seed=7", "--trials", "5", "--out", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0
    assert json.loads(out.read_text())["results"]["trials_run"] == 5


@pytest.mark.parametrize(
    "args,error",
    [
        (["spectrum"], "ConfigError"),
        (["spectrum", "--builtin", "he-model", "--random", "dim=4"], "ConfigError"),
        (["spectrum", "--random", "dim=1"], "ConfigError"),
        (["hum", "--builtin", "he-model", "--steepen", "N=2"], "ConfigError"),
        (["omega-min", "--builtin", "he-model", "--steepen", "N=0.5"], "ConfigError"),
        (["spectrum", "--input", "does-not-exist.json"], "IoError"),
        (["pathology", "--builtin", "he-model", "--epsilon", "1.0"], "ConfigError"),
    ],
)
def test_errors_exit_with_status_two(runner, args, error):
    result = runner.invoke(cli, args)
    assert result.exit_code == 2
    assert f"{error}:" in result.output


def test_bad_log_level(runner):
    result = runner.invoke(cli, ["spectrum", "--builtin", "he-model"], env={"OMEGA_LOG": "chatty"})
    assert result.exit_code == 2
    assert "ConfigError:" in result.output
