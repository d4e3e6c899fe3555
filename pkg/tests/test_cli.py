import json

import pytest

from qmarkov.cli import main
from qmarkov.corpus import fixture_dir

REPORT_KEYS = {"schema_version", "tool_version", "model_digest", "command", "ok", "results", "residuals", "checks"}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def machine(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--format", "machine")
    return code, json.loads(out)


def test_hitting_machine_report(capsys):
    code, doc = machine(capsys, "hitting", "ex2", "--from", "0", "--to", "1")
    assert code == 0 and doc["ok"]
    assert REPORT_KEYS <= doc.keys()
    assert doc["schema_version"] == "qmarkov-report/1" and len(doc["model_digest"]) == 64
    assert doc["results"]["tau"] == pytest.approx(4.0, abs=1e-10)
    assert doc["results"]["probability"] == pytest.approx(1.0, abs=1e-10)


def test_param_override_changes_the_answer(capsys):
    code, doc = machine(capsys, "hitting", "ex2", "--from", "0", "--to", "1", "--param", "p=1/4")
    assert code == 0 and doc["results"]["tau"] == pytest.approx(8.0, abs=1e-10)


def test_mhtf2_human_table(capsys):
    code, out, _ = run(capsys, "mhtf2", "ex3c")
    assert code == 0
    assert "6.83333333333" in out and "PASS" in out


def test_target_on_scalar_chain(capsys):
    code, doc = machine(capsys, "target", "ex3b")
    assert code == 0
    assert doc["results"]["c"] == pytest.approx(3.0, abs=1e-9)
    assert doc["results"]["t_target"] == pytest.approx(8 / 3, abs=1e-9)


def test_target_without_family_fails_then_family_passes(capsys):
    assert run(capsys, "target", "ex3a")[0] == 1
    assert run(capsys, "target", "ex3a", "--family", "diagonal", "--rho", "diag:0.3,0.7")[0] == 0


def test_other_subcommands_succeed(capsys):
    for argv in (["validate", "ex3c"], ["stationary", "ex1"], ["fundamental", "ex2", "--blocks"],
                 ["hunter", "ex3c", "--ginverse", "random:b:3"], ["hunter", "ex2", "--ginverse", "perturbation:0,3"]):
        code, out, err = run(capsys, *argv)
        assert code == 0, (argv, out, err)


def test_simulate_agrees_with_operator_value(capsys):
    code, doc = machine(capsys, "simulate", "ex2", "--from", "0", "--to", "1", "--samples", "20000")
    assert code == 0
    assert abs(doc["results"]["z_score"]) <= 4


def test_unbound_parameter_is_named(tmp_path, capsys):
    doc = json.loads((fixture_dir() / "ex2.json").read_text())
    doc["params"] = {}
    path = tmp_path / "noparam.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2
    assert "'p'" in err and "maps[0]" in err


def test_json_syntax_error_reports_position(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "schema": "qmc-model/1",\n  "vertices": 2,,\n}\n')
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2
    assert "line 3" in err and "column" in err


def test_usage_errors_exit_two(capsys):
    assert run(capsys, "hitting", "ex2", "--from", "0", "--to", "7")[0] == 2
    assert run(capsys, "hitting", "ex2", "--from", "0", "--to", "1", "--rho", "bloch:2,0,0")[0] == 2
    assert run(capsys, "hitting", "no-such-model", "--from", "0", "--to", "1")[0] == 2
    assert run(capsys, "hitting", "ex2")[0] == 2


def test_reproduce_paper_passes(capsys):
    code, doc = machine(capsys, "reproduce-paper")
    assert code == 0 and doc["ok"]
    assert all(c["passed"] for c in doc["checks"])
