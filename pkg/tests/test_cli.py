"""Command-line interface: file formats, determinism and exit codes."""

import csv
import shutil

import numpy as np
import pytest
import yaml

from gridadmit.cli import (EXIT_NUMERIC, EXIT_OK, EXIT_UNSTABLE, EXIT_USAGE, format_admittance,
                           main, parse_admittance, read_admittance)
from gridadmit.era import EventRecord, save_event
from gridadmit.statespace import StateSpace, ss_to_admittance, step_response


def _run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_derive_round_trips_bit_identically(tmp_path, cases_dir):
    assert _run(tmp_path, "derive", "--case", str(cases_dir / "smib.yaml")) == EXIT_OK
    text = (tmp_path / "G1.adm").read_text()
    assert format_admittance(parse_admittance(text)) == text
    Y = read_admittance(tmp_path / "G1.adm")
    assert Y.shape == (2, 2)


def test_outputs_are_deterministic(tmp_path, cases_dir):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(d, "assemble", "--case", str(cases_dir / "kundur4.yaml")) == EXIT_OK
        assert _run(d, "eigs", "--case", str(cases_dir / "kundur4.yaml")) == EXIT_OK
    for name in ("total.adm", "powerflow.csv", "ybus.csv", "eigs.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert read_admittance(a / "total.adm").shape == (8, 8)


def test_dfig_derive_is_scalar_complex(tmp_path, cases_dir):
    assert _run(tmp_path, "derive", "--case", str(cases_dir / "dfig.yaml")) == EXIT_OK
    (adm,) = tmp_path.glob("*.adm")
    Y = read_admittance(adm)
    assert Y.shape == (1, 1) and Y.is_complex


def test_eigs_smib_and_adm_input_agree(tmp_path, cases_dir):
    assert _run(tmp_path, "assemble", "--case", str(cases_dir / "smib.yaml")) == EXIT_OK
    assert _run(tmp_path / "x", "eigs", "--case", str(cases_dir / "smib.yaml")) == EXIT_OK
    assert _run(tmp_path / "y", "eigs", "--adm", str(tmp_path / "total.adm")) == EXIT_OK
    rows = [list(csv.reader(open(tmp_path / d / "eigs.csv"))) for d in ("x", "y")]
    assert len(rows[0]) == 3                               # header + two roots
    assert np.allclose(np.array(rows[0][1:], float), np.array(rows[1][1:], float), rtol=1e-9)


def test_exit_code_unstable(tmp_path, cases_dir):
    assert _run(tmp_path, "eigs", "--case", str(cases_dir / "torsional.yaml")) == EXIT_UNSTABLE


def test_exit_code_operating_point_guard(tmp_path, cases_dir, capsys):
    assert _run(tmp_path, "eigs", "--case", str(cases_dir / "vsc_miscalibrated.yaml")) == EXIT_USAGE
    assert "calibrated" in capsys.readouterr().err


def test_exit_code_marginal_nyquist(tmp_path, cases_dir):
    # classical machines without an infinite bus keep a zero (angle-reference) root
    assert _run(tmp_path, "nyquist", "--case", str(cases_dir / "kundur4.yaml")) == EXIT_NUMERIC


def test_nyquist_stable_case(tmp_path, cases_dir):
    assert _run(tmp_path, "nyquist", "--case", str(cases_dir / "vsc_weak.yaml")) == EXIT_OK
    assert (tmp_path / "nyquist.json").exists()


def test_unknown_key_rejected(tmp_path, cases_dir, capsys):
    doc = yaml.safe_load((cases_dir / "smib.yaml").read_text())
    doc["sources"][0]["params"]["Hh"] = 3.0
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump(doc))
    assert _run(tmp_path, "eigs", "--case", str(bad)) == EXIT_USAGE
    assert "Hh" in capsys.readouterr().err


def test_diverging_power_flow_is_numeric_failure(tmp_path, cases_dir):
    doc = yaml.safe_load((cases_dir / "smib.yaml").read_text())
    doc["sources"][0]["P"] = 50.0
    bad = tmp_path / "heavy.yaml"
    bad.write_text(yaml.safe_dump(doc))
    assert _run(tmp_path, "eigs", "--case", str(bad)) == EXIT_NUMERIC


def test_usage_errors(tmp_path):
    assert main(["eigs"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert _run(tmp_path, "eigs", "--case", str(tmp_path / "missing.yaml")) == EXIT_USAGE


def test_trace_reports_crossing(tmp_path, cases_dir):
    assert _run(tmp_path, "trace", "--case", str(cases_dir / "dfig.yaml")) == EXIT_UNSTABLE
    rows = list(csv.DictReader(open(tmp_path / "trace_verdicts.csv")))
    assert rows[0]["verdict"] == "stable" and rows[1]["verdict"] == "unstable"


def _write_events(tmp_path):
    A = np.array([[-30.0, 80.0], [-80.0, -30.0]])
    ss = StateSpace(A, np.eye(2), np.array([[1.0, 0.2], [0.0, 1.0]]), np.diag([0.05, 0.05]))
    paths = []
    for ch in (0, 1):
        _, y = step_response(ss, ch, 1e-3, 0.3, 2500.0)
        y = np.vstack([np.zeros((5, 2)), y]).T
        path = tmp_path / f"ev{ch}.csv"
        save_event(path, EventRecord(ch, 1e-3, 1 / 2500.0, y, pre=5, names=["i_x", "i_y"]))
        paths.append(str(path))
    return ss, paths


def test_era_command(tmp_path):
    ss, paths = _write_events(tmp_path)
    assert _run(tmp_path, "era", "--events", *paths, "--order", "2") == EXIT_OK
    Y = read_admittance(tmp_path / "era.adm")
    ref = ss_to_admittance(ss)
    s = 2j * np.pi * np.geomspace(1, 100, 25)
    a, b = Y.evaluate_many(s), ref.evaluate_many(s)
    assert np.max(np.abs(np.abs(a) - np.abs(b)) / np.abs(b).max()) < 0.01
    assert (tmp_path / "era_report.json").exists()


def test_era_command_needs_two_events(tmp_path, capsys):
    _, paths = _write_events(tmp_path)
    assert _run(tmp_path, "era", "--events", paths[0]) == EXIT_USAGE
    assert "two events required for 2×2 identification" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("gridadmit") is None, reason="console script not installed")
def test_console_script_version():
    import subprocess
    out = subprocess.run(["gridadmit", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
