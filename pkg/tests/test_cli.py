"""Thin-client CLI: flags, exit codes, deterministic output."""

import io
import json
import subprocess
import sys

import numpy as np
import pytest

from symindex import cli, symcore


def run_cli(capsys, argv):
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_identity_csv(tmp_path, name="path.csv", dim=2):
    ts = np.linspace(0.0, 1.0, 9)
    mats = np.stack([np.eye(dim)] * 9)
    buf = io.StringIO()
    symcore.save_path_csv(symcore.sampled_path(ts, mats), buf)
    target = tmp_path / name
    target.write_text(buf.getvalue())
    return str(target)


class TestIndexCommand:
    def test_family_both_methods(self, capsys):
        code, out, _ = run_cli(
            capsys, ["index", "--family", "shear", "--fsign", "1", "--T", "5", "--method", "both"]
        )
        assert code == 0
        data = json.loads(out)
        assert data["results"]["crossing"]["value"] == -1
        assert data["results"]["intersection"]["value"] == -1
        assert data["match"] is True

    def test_lattice_warning_on_stderr(self, capsys):
        code, out, err = run_cli(
            capsys,
            ["index", "--family", "rbeta", "--a1", "1", "--a2", "1", "--T", "6.283185307179586"],
        )
        assert code == 0
        assert json.loads(out)["results"]["crossing"]["clm_value"] == 2
        assert "lattice" in err

    def test_csv_path_defaults_to_intersection(self, capsys, tmp_path):
        path = write_identity_csv(tmp_path)
        code, out, _ = run_cli(capsys, ["index", "--path", path])
        assert code == 0
        data = json.loads(out)
        assert list(data["results"]) == ["intersection"]
        assert data["results"]["intersection"]["value"] == -1

    def test_exit_codes(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("garbage\n1,2\n")
        code, _, err = run_cli(capsys, ["index", "--path", str(bad)])
        assert code == 2 and "MALFORMED_PATH_FILE" in err

        shifted = tmp_path / "shifted.csv"
        shifted.write_text("t,m11,m12,m21,m22\n0,2,0,0,0.5\n1,2,0,0,0.5\n")
        code, _, err = run_cli(capsys, ["index", "--path", str(shifted)])
        assert code == 3 and "NON_IDENTITY_START" in err

        wrong_dim = write_identity_csv(tmp_path, "four.csv", dim=4)
        code, _, err = run_cli(capsys, ["index", "--path", wrong_dim, "--method", "crossing"])
        assert code == 4 and "UNSUPPORTED_DIMENSION" in err

    def test_requires_one_source(self, capsys):
        code, _, err = run_cli(capsys, ["index"])
        assert code == 2
        assert "exactly one" in err

    def test_deterministic_output(self, capsys):
        argv = ["index", "--family", "rbeta", "--a1", "0.5", "--a2", "3", "--T", "7"]
        _, out1, _ = run_cli(capsys, argv)
        _, out2, _ = run_cli(capsys, argv)
        assert out1 == out2


class TestKeplerCommand:
    def test_report(self, capsys):
        code, out, _ = run_cli(
            capsys,
            ["kepler-report", "--a", "1", "--ecc", "0.6", "--mu", "1", "--m", "1", "--kmax", "2"],
        )
        assert code == 0
        data = json.loads(out)
        assert data["morse_indices"] == {"1": 0, "2": 2}
        assert data["nullity"] == 3

    def test_hyperbolic_exit_code(self, capsys):
        code, _, err = run_cli(capsys, ["kepler-report", "--ecc", "1.2"])
        assert code == 2
        assert "PARABOLIC_OR_HYPERBOLIC" in err

    def test_output_to_file(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run_cli(
            capsys, ["kepler-report", "--ecc", "0", "--kmax", "1", "--output", str(target)]
        )
        assert code == 0
        assert out == ""
        assert json.loads(target.read_text())["morse_indices"] == {"1": 0}


class TestSweepCommand:
    def test_small_grid(self, capsys):
        code, out, _ = run_cli(
            capsys, ["sweep", "--ecc-list", "0,0.2", "--k-list", "1,2", "--s-list", "1"]
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == "ecc,k,s,cz_index,nullity,max_mult_dev,drift,error"
        assert len(lines) == 5

    def test_empty_grid(self, capsys):
        code, out, _ = run_cli(capsys, ["sweep", "--ecc-list", "", "--k-list", "", "--s-list", ""])
        assert code == 0
        assert out == "ecc,k,s,cz_index,nullity,max_mult_dev,drift,error\n"


class TestTraceCommand:
    def test_combined_output(self, capsys):
        code, out, _ = run_cli(
            capsys, ["trace", "--family", "shear", "--fsign", "1", "--T", "2", "--samples", "8"]
        )
        assert code == 0
        assert out.startswith("t,m11,m12,m21,m22,r,theta,z,indicator,region")
        assert "theta,r" in out

    def test_section_to_separate_file(self, capsys, tmp_path):
        section = tmp_path / "section.csv"
        code, out, _ = run_cli(
            capsys,
            [
                "trace", "--family", "rbeta", "--a1", "1", "--a2", "1", "--T", "3",
                "--samples", "8", "--section-output", str(section),
            ],
        )
        assert code == 0
        assert "theta,r" not in out
        assert section.read_text().startswith("theta,r")


def test_console_entry_point_smoke():
    result = subprocess.run(
        [sys.executable, "-m", "symindex.cli", "index", "--family", "shear", "--fsign", "-1",
         "--T", "2", "--method", "intersection"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert json.loads(result.stdout)["results"]["intersection"]["value"] == 0
