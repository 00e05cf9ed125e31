from __future__ import annotations

import json

from click.testing import CliRunner

from eqshadow.cli import main


def test_version():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "version" in result.output


def test_synth_prints_circuit_and_counts():
    result = CliRunner().invoke(main, ["synth", "--label", "eq:3:120:101"])
    assert result.exit_code == 0, result.output
    assert "MEAS Z 0" in result.output
    counts = json.loads(result.output[result.output.index("{") :])
    assert counts["cz_count"] == 2 and counts["label"] == "eq:3:120:101"


def test_synth_lnn_writes_files(tmp_path):
    result = CliRunner().invoke(main, ["synth", "--label", "req:5:10110:1010011001", "--lnn", "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    counts = json.loads((tmp_path / "counts.json").read_text())
    assert counts["lnn"] and counts["two_qubit_depth"] <= 12 and counts["nn_cnot_count"] <= 25
    text = (tmp_path / "circuit.txt").read_text()
    assert "CNOT 0 1" in text and text.rstrip().endswith("REVERSE")


def test_synth_rejects_bad_label():
    result = CliRunner().invoke(main, ["synth", "--label", "eq:3:12:101"])
    assert result.exit_code != 0
    assert "invalid label" in result.output


def test_verify_moments(tmp_path):
    result = CliRunner().invoke(main, ["verify", "moments", "--out", str(tmp_path), "--workers", "2"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "moments.csv").exists() and (tmp_path / "moments.json").exists()


def test_run_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "fig4b", "seed": 1, "n_values": [4, 6], "labels": 3, "name": "depths"}))
    result = CliRunner().invoke(main, ["run", str(spec), "--out", str(tmp_path / "out"), "--seed", "5"])
    assert result.exit_code == 0, result.output
    manifest = json.loads((tmp_path / "out" / "depths.json").read_text())
    assert manifest["seed"] == 5


def test_run_rejects_invalid_spec(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "moments"}))
    result = CliRunner().invoke(main, ["run", str(spec)])
    assert result.exit_code != 0
    assert "invalid spec" in result.output


def test_run_budget_needs_long(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"kind": "fig2abc", "seed": 1, "n": 10, "N": [1000000], "repetitions": 1000}))
    result = CliRunner().invoke(main, ["run", str(spec), "--out", str(tmp_path)])
    assert result.exit_code != 0
    assert "--long" in result.output
