import csv
import json
import subprocess
import sys

import pytest
import yaml

from rsbesov import cli


def write_config(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_wavelet_check_writes_report_and_metadata(tmp_path, capsys):
    code, out, _ = run(["wavelet-check", "-o", str(tmp_path / "w")], capsys)
    assert code == 0 and "PASS" in out
    report = json.loads((tmp_path / "w" / "report.json").read_text())
    assert report["passed"] is True
    assert report["config"]["basis"]["N"] == 3
    assert set(report) >= {"command", "version", "schema_version", "config", "checks", "results", "tables"}
    meta = json.loads((tmp_path / "w" / "metadata.json").read_text())
    assert meta["kernel_backend"] in ("cython", "python") and meta["wall_seconds"] >= 0
    for table in report["tables"]:
        with open(tmp_path / "w" / table) as fh:
            assert next(csv.reader(fh))


def test_invalid_basis_order_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"basis": {"N": 0}})
    code, _, err = run(["wavelet-check", "-c", cfg, "-o", str(tmp_path / "o")], capsys)
    assert code == 2 and "basis.N" in err


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"params": {"tolerance": 1e-3}})
    code, _, err = run(["wavelet-check", "-c", cfg], capsys)
    assert code == 2 and "params.tolerance" in err


@pytest.mark.parametrize("data", [{"schema_version": 99}, {"command": "fubini"}, {"params": {"fixture": "nope"}}])
def test_rejected_configs_exit_2(tmp_path, capsys, data):
    cfg = write_config(tmp_path / "c.yaml", data)
    assert run(["reconstruct", "-c", cfg], capsys)[0] == 2


@pytest.mark.parametrize("flags", [["--p", "1"], ["--q", "0.5"], ["--q", "abc"], ["--domain", "0-1"],
                                   ["--n-max", "-1"]])
def test_bad_flags_exit_2(capsys, flags):
    assert run(["besov-norm", "--print-config"] + flags, capsys)[0] == 2


def test_flag_not_applicable_exits_2(capsys):
    code, _, err = run(["wavelet-check", "--n-max", "3"], capsys)
    assert code == 2 and "--n-max" in err


def test_failed_tolerance_exits_3(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"params": {"tol": 1e-20}})
    code, out, _ = run(["wavelet-check", "-c", cfg, "-o", str(tmp_path / "o")], capsys)
    assert code == 3 and "FAIL" in out
    assert json.loads((tmp_path / "o" / "report.json").read_text())["passed"] is False


def test_level_cap_exits_4(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"limits": {"max_level": 4}})
    assert run(["reconstruct", "-c", cfg, "-o", str(tmp_path / "o")], capsys)[0] == 4


def test_path_cap_exits_4(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"limits": {"max_paths": 100}})
    assert run(["fubini-refine", "-c", cfg, "-o", str(tmp_path / "o")], capsys)[0] == 4


def test_print_config_applies_overrides(capsys):
    code, out, _ = run(["besov-norm", "--print-config", "--seed", "4", "--n-max", "5", "--q", "inf",
                        "--domain", "0:0.5"], capsys)
    assert code == 0
    cfg = json.loads(out)
    assert cfg["seed"] == 4 and cfg["params"]["n_max"] == 5
    assert cfg["params"]["q"] == "inf"
    assert cfg["domain"] == [[0.0, 0.5]]


def test_json_config_is_accepted(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"command": "besov-norm", "params": {"shells": 4}}))
    code, out, _ = run(["besov-norm", "-c", str(path), "--print-config"], capsys)
    assert code == 0 and json.loads(out)["params"]["shells"] == 4


def test_reports_are_byte_identical(tmp_path, capsys):
    out = str(tmp_path / "same")
    assert run(["model-check", "-o", out, "--seed", "3"], capsys)[0] == 0
    first = (tmp_path / "same" / "report.json").read_bytes()
    assert run(["model-check", "-o", out, "--seed", "3"], capsys)[0] == 0
    assert (tmp_path / "same" / "report.json").read_bytes() == first


def test_output_root_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "root"))
    assert run(["wavelet-check"], capsys)[0] == 0
    assert (tmp_path / "root" / "wavelet-check" / "report.json").exists()


def test_besov_norm_with_infinite_q(tmp_path, capsys):
    code, _, _ = run(["besov-norm", "--q", "inf", "--n-max", "5", "-o", str(tmp_path / "b")], capsys)
    assert code == 0
    report = json.loads((tmp_path / "b" / "report.json").read_text())
    assert report["config"]["params"]["q"] == "inf"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rsbesov", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("rsbesov ")
