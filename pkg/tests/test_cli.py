import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from mqka.cli import main
from mqka.report import validate_report

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_honest_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, _, _ = _run(["run", "--config", str(SCENARIOS / "honest.ini"), "--trials", "100",
                       "--out", str(out)], capsys)
    assert code == 0
    doc = json.loads(out.read_text())
    validate_report(doc)
    assert doc["trials"] == 100
    assert doc["summary"]["agreement_rate"] == 1.0
    assert doc["summary"]["mean_error_rate"] == 0.0


def test_run_twice_is_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["run", "--config", str(SCENARIOS / "impersonation.ini"), "--trials", "20",
                     "--seed", "123", "--per-trial", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    validate_report(doc)
    assert doc["seed"] == 123 and len(doc["per_trial"]) == 20
    for rep in doc["per_trial"]:
        validate_report(rep)


def test_seed_override_changes_output(capsys):
    _, a, _ = _run(["run", "--config", str(SCENARIOS / "honest.ini"), "--trials", "2", "--seed", "1",
                    "--per-trial"], capsys)
    _, b, _ = _run(["run", "--config", str(SCENARIOS / "honest.ini"), "--trials", "2", "--seed", "2",
                    "--per-trial"], capsys)
    assert a != b


def test_intercept_resend_scenario_near_three_eighths(capsys):
    code, out, _ = _run(["run", "--config", str(SCENARIOS / "intercept_resend.ini"), "--trials", "6"],
                        capsys)
    assert code == 0
    adv = json.loads(out)["summary"]["adversary"]
    assert adv["attacked_blocks"] > 2000
    lo, hi = adv["block_error_rate_ci95"]
    assert lo - 0.01 <= 0.375 <= hi + 0.01


def test_abort_is_not_a_failure(capsys):
    code, out, _ = _run(["run", "--config", str(SCENARIOS / "forged_tp_tag.ini"), "--trials", "3"], capsys)
    assert code == 0
    assert json.loads(out)["summary"]["abort_rate"] == 1.0


def test_csv_summary(tmp_path, capsys):
    path = tmp_path / "s.csv"
    code, _, _ = _run(["run", "--config", str(SCENARIOS / "honest.ini"), "--trials", "4",
                       "--csv", str(path)], capsys)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == 1 and rows[0]["trials"] == "4" and rows[0]["agreement_rate"] == "1.0"


def test_zero_trials_still_valid(capsys):
    code, out, _ = _run(["run", "--config", str(SCENARIOS / "honest.ini"), "--trials", "0"], capsys)
    assert code == 0
    validate_report(json.loads(out))


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["run"],
        ["run", "--config", "x.ini", "--seed", "-1"],
        ["usd-check", "--dim", "4"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_config_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[network]\nM = 3\nN = 3\n[session]\nn = 4\nbogus = 1\n")
    code, _, err = _run(["run", "--config", str(bad)], capsys)
    assert code == 2 and "[session] unknown key 'bogus'" in err
    code, _, err = _run(["run", "--config", str(tmp_path / "missing.ini")], capsys)
    assert code == 2 and "cannot read" in err
    code, _, _ = _run(["efficiency", "--parties", "1"], capsys)
    assert code == 2
    code, _, _ = _run(["usd-check", "--dim", "0", "--families", "3"], capsys)
    assert code == 2


def test_replay_example(tmp_path, capsys):
    out = tmp_path / "trace.json"
    code, text, _ = _run(["replay-example", "--out", str(out)], capsys)
    assert code == 0
    assert "10011110" in text and "1000" in text and "0010" in text
    doc = json.loads(out.read_text())
    assert doc["verified"] and doc["mismatches"] == []
    validate_report(doc["report"])


def test_replay_example_reports_diff_on_failure(monkeypatch, capsys):
    from mqka import example

    monkeypatch.setitem(example.EXPECTED, "key", "00000000")
    code, text, _ = _run(["replay-example"], capsys)
    assert code == 1
    assert "position" in text.lower()


@pytest.mark.parametrize("dim", [1, 4])
def test_usd_check(dim, capsys):
    code, out, _ = _run(["usd-check", "--dim", str(dim), "--families", "100", "--seed", "3"], capsys)
    assert code == 0
    assert "rank histogram: 4: 100" in out
    assert "PASS" in out


def test_usd_check_vacuous(capsys, caplog):
    code, out, _ = _run(["usd-check", "--dim", "2", "--families", "0"], capsys)
    assert code == 0 and "vacuous" in out


@pytest.mark.parametrize(
    "parties,delta,expected",
    [("3", "0", "eta = 0.2222"), ("2", "0", "eta = 0.3333"), ("3", "0.5", "eta = 0.1667")],
)
def test_efficiency(parties, delta, expected, capsys):
    code, out, _ = _run(["efficiency", "--parties", parties, "--delta", delta], capsys)
    assert code == 0 and out.splitlines()[0] == expected


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mqka", "efficiency", "--parties", "3"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.startswith("eta = 0.2222")
