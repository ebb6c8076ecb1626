import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from bellcause.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, render_table, run

DATA = Path(__file__).resolve().parent.parent / "data"
SINGLET = str(DATA / "singlet_tsirelson.yaml")
UNIFORM = str(DATA / "uniform.yaml")
DETERMINISTIC = str(DATA / "deterministic_model.yaml")
CAUSAL = str(DATA / "bell_local_causal.yaml")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.mark.parametrize("argv, expected", [
    (("membership", SINGLET), EXIT_FAIL),
    (("membership", UNIFORM), EXIT_OK),
    (("chsh", SINGLET), EXIT_FAIL),
    (("chsh", UNIFORM), EXIT_OK),
    (("check", DETERMINISTIC), EXIT_OK),
    (("check", UNIFORM), EXIT_FAIL),
    (("check", UNIFORM, "--property", "signal_locality"), EXIT_OK),
    (("fine", DETERMINISTIC), EXIT_OK),
    (("fine", SINGLET), EXIT_FAIL),
    (("causal", CAUSAL), EXIT_FAIL),
    (("causal", CAUSAL, "--principle", "local_causality", "--principle", "free_choice"), EXIT_OK),
    (("reconcile", SINGLET), EXIT_FAIL),
    (("reconcile", UNIFORM), EXIT_OK),
    (("reconcile", CAUSAL), EXIT_OK),
    (("lemmas", "--id", "2", "--trials", "100", "--seed", "7"), EXIT_OK),
])
def test_exit_codes(argv, expected):
    code, out, err = call(*argv)
    assert code == expected, err
    assert out.rstrip().splitlines()[-1].startswith("result: ")


def test_membership_output_for_singlet():
    code, out, _ = call("membership", SINGLET)
    assert "member of the local polytope: no" in out
    assert "max |CHSH| = 2.828427125" in out
    assert "rationalized" in out


def test_errors_exit_two_with_stable_codes(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("version: 9\nphenomenon: {table: []}\n")
    code, _, err = call("membership", str(bad))
    assert code == EXIT_ERROR and err.startswith("error [E_UNKNOWN_VERSION]: line 1")
    code, _, err = call("membership", str(tmp_path / "missing.yaml"))
    assert code == EXIT_ERROR and "[E_IO]" in err
    code, _, err = call("causal", UNIFORM)
    assert code == EXIT_ERROR and "[E_USAGE]" in err
    code, _, err = call("check", CAUSAL)
    assert code == EXIT_ERROR and "[E_USAGE]" in err
    code, _, err = call("membership", UNIFORM, "--tol", "-1")
    assert code == EXIT_ERROR and "[E_USAGE]" in err


def test_non_normalized_input_reports_position(tmp_path):
    text = (DATA / "uniform.yaml").read_text().replace("[[1/4, 1/4], [1/4, 1/4]]", "[[1/2, 1/4], [1/4, 1/4]]", 1)
    path = tmp_path / "skew.yaml"
    path.write_text(text)
    code, _, err = call("check", str(path))
    assert code == EXIT_ERROR
    assert err.startswith("error [E_NONNORMALIZED]: line 4")


def test_deterministic_mode_requires_seed():
    code, _, err = call("lemmas", "--deterministic", "--trials", "5")
    assert code == EXIT_ERROR and "[E_SEED_REQUIRED]" in err
    code, _, _ = call("lemmas", "--deterministic", "--seed", "1", "--id", "1", "--trials", "20")
    assert code == EXIT_OK


def test_unknown_arguments_exit_two():
    with pytest.raises(SystemExit) as info:
        call("membership")
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        call("lemmas", "--id", "9")


@pytest.mark.parametrize("argv", [
    ("membership", SINGLET), ("chsh", SINGLET), ("check", DETERMINISTIC), ("fine", UNIFORM),
    ("causal", CAUSAL), ("reconcile", SINGLET), ("lemmas", "--trials", "30", "--seed", "5"),
])
def test_reports_are_byte_deterministic(tmp_path, argv):
    paths = [tmp_path / "r1.json", tmp_path / "r2.json"]
    for p in paths:
        call(*argv, "--out", str(p))
    first, second = (p.read_bytes() for p in paths)
    assert first == second
    report = json.loads(first)
    assert set(report) >= {"tool", "version", "command", "input_sha256", "holds", "result"}
    assert "elapsed" not in first.decode()


def test_report_fields_for_membership(tmp_path):
    out = tmp_path / "m.json"
    call("membership", SINGLET, "--out", str(out))
    report = json.loads(out.read_text())
    assert report["holds"] is False
    cert = report["result"]["certificate"]
    assert cert["bound"] == "2/1" and len(cert["coefficients"]) == 16
    assert report["result"]["certificate_sound"] is True


def test_lemma_report_records_seed(tmp_path):
    out = tmp_path / "l.json"
    call("lemmas", "--id", "1", "--trials", "20", "--seed", "3", "--out", str(out))
    report = json.loads(out.read_text())
    assert report["seed"] == 3
    assert report["result"]["lemmas"][0]["counterexamples"] == []


def test_render_table_aligns_columns():
    text = render_table(("a", "long header"), [("xx", 1.5), ("y", True)])
    lines = text.splitlines()
    assert lines[1] == "--  -----------"
    assert lines[2] == "xx  1.5"
    assert lines[3] == "y   yes"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bellcause", "chsh", UNIFORM],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "max |CHSH| = 0" in proc.stdout
