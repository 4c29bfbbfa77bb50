import csv
import json
import math

import pytest

from ptlgi import cli, soe
from ptlgi.nhq import PTParams


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_evolve_rows_and_columns(tmp_path):
    code, out = run(tmp_path, "evolve", "--gamma", "1.9", "--t-end", "2", "--dt-out", "0.3")
    assert code == 0
    rows = read_csv(out / "trajectory.csv")
    assert rows[0] == ["t", "S_x", "S_y", "S_z", "v", "v1_sq", "v2_sq", "v3_sq"]
    assert len(rows) - 1 == math.floor(2 / 0.3) + 1
    m = manifest(out)
    assert m["status"] == "ok" and "trajectory.csv" in m["outputs"]
    assert raw_digits(rows[2][1]) >= 9


def raw_digits(text):
    return len(text.replace("-", "").replace(".", "").split("e")[0].lstrip("0"))


def test_evolve_hermitian_speed_constant(tmp_path):
    code, out = run(tmp_path, "evolve", "--gamma", "0", "--t-end", "3")
    assert code == 0
    v = [float(r[4]) for r in read_csv(out / "trajectory.csv")[1:]]
    assert max(abs(x - 1.0) for x in v) < 1e-9


def test_soe_scan_matches_library(tmp_path):
    code, out = run(tmp_path, "soe-scan", "--gamma-min", "1", "--gamma-max", "1",
                    "--gamma-steps", "1")
    assert code == 0
    rows = read_csv(out / "soe_scan.csv")
    assert rows[0] == ["gamma", "v_max", "v_min"]
    ext = soe.geodesic_extremes(PTParams(1, 1))
    assert float(rows[1][1]) == pytest.approx(ext.v_max, abs=1e-11)
    assert float(rows[1][2]) == pytest.approx(ext.v_min, abs=1e-11)


def test_k3_audit(tmp_path):
    code, out = run(tmp_path, "k3")
    assert code == 0
    audit = json.loads((out / "k3_audit.json").read_text())
    assert audit["k3"] == pytest.approx(1.5, abs=1e-12)
    assert set(audit["tables"]["12"]) == {"p_uu", "p_ud", "p_du", "p_dd"}


def test_degrees_flag(tmp_path):
    _, a = run(tmp_path, "k3", "--gamma", "1", "--theta", "90", "--phi", "270", "--degrees",
               name="a")
    _, b = run(tmp_path, "k3", "--gamma", "1", name="b")
    ka = json.loads((a / "k3_audit.json").read_text())["k3"]
    kb = json.loads((b / "k3_audit.json").read_text())["k3"]
    assert ka == pytest.approx(kb, abs=1e-12)


def test_scan_requires_seed(tmp_path):
    assert run(tmp_path, "k3-scan", "--gammas", "0.5")[0] == 2
    assert run(tmp_path, "fixed-scan")[0] == 2


def test_k3_scan_deterministic(tmp_path):
    args = ["k3-scan", "--gammas", "0.5,2.5", "--seed", "4", "--n-starts", "3",
            "--broken-starts", "3", "--jobs", "1"]
    code_a, a = run(tmp_path, *args, name="a")
    code_b, b = run(tmp_path, *args, name="b")
    assert code_a == code_b == 0
    assert (a / "k3_scan.csv").read_bytes() == (b / "k3_scan.csv").read_bytes()
    assert manifest(a)["outputs"] == manifest(b)["outputs"]
    assert manifest(a)["seed"] == 4
    rows = read_csv(a / "k3_scan.csv")
    assert rows[0] == ["gamma", "k3_max", "theta", "phi", "theta_m", "phi_m", "t2", "t3"]
    assert len(rows) == 3


def test_domain_error_exit_code(tmp_path):
    code, out = run(tmp_path, "evolve", "--gamma", "-1")
    assert code == 2
    assert manifest(out)["status"] == "config-error"
    assert run(tmp_path, "fixed-scan", "--seed", "1", "--n-theta", "10")[0] == 2


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[evolve]\ngamma = 1.5\nt-end = 1.0\ndt-out = 0.5\n")
    code, out = run(tmp_path, "evolve", "--config", str(cfg), name="a")
    assert code == 0
    assert manifest(out)["config"]["gamma"] == 1.5
    assert len(read_csv(out / "trajectory.csv")) == 4
    code, out = run(tmp_path, "evolve", "--config", str(cfg), "--gamma", "0.5", name="b")
    assert manifest(out)["config"]["gamma"] == 0.5


def test_config_case_insensitive_key(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[k3-scan]\nT-max = 20\nseed = 1\ngammas = 0.5\nn-starts = 1\n")
    code, out = run(tmp_path, "k3-scan", "--config", str(cfg), "--jobs", "1")
    assert code == 0
    assert manifest(out)["config"]["T_max"] == 20.0


@pytest.mark.parametrize("text", ["[evolve]\nbogus = 1\n", "[nope]\na = 1\n",
                                  "[evolve]\ngamma = abc\n"])
def test_config_errors(tmp_path, text):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(text)
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_lindblad_checks(tmp_path):
    code, out = run(tmp_path, "lindblad", "--gamma1", "6", "--check", "e15", name="e15")
    assert code == 0
    rep = json.loads((out / "check_report.json").read_text())
    assert rep["passed"] and rep["max_deviation"] < 1e-7
    code, out = run(tmp_path, "lindblad", "--gamma1", "3", "--theta", "1.0", "--phi", "2.0",
                    "--check", "parametric", name="par")
    assert code == 0
    code, out = run(tmp_path, "lindblad", "--gamma1", "6", "--t-end", "2",
                    "--check", "equivalence", name="eq")
    assert code == 0
    assert json.loads((out / "check_report.json").read_text())["max_deviation"] < 1e-5


def test_lindblad_unitary_ground_constant(tmp_path):
    code, out = run(tmp_path, "lindblad", "--gamma1", "0", "--t-end", "2")
    assert code == 0
    rows = read_csv(out / "lindblad_trajectory.csv")
    i = rows[0].index("re_gg")
    assert all(abs(float(r[i])) < 1e-12 for r in rows[1:])
    assert len(rows[0]) == 19


def test_check_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setitem(cli.CHECK_TOL, "e15", 0.0)
    code, out = run(tmp_path, "lindblad", "--gamma1", "6", "--check", "e15")
    assert code == 4
    assert manifest(out)["status"] == "check-failed"


def test_numeric_failure_exit_code(tmp_path, monkeypatch):
    from ptlgi.errors import StiffnessError

    def boom(*a, **k):
        raise StiffnessError("step underflow")

    monkeypatch.setattr(cli.nhq, "evolve_bloch_numeric", boom)
    assert run(tmp_path, "evolve")[0] == 3


def test_verify_subset_json(tmp_path, capsys):
    code, out = run(tmp_path, "verify", "--criteria", "1,11", "--json")
    assert code == 0
    printed = capsys.readouterr().out
    payload = json.loads((out / "verify.json").read_text())
    assert json.loads(printed[:printed.rindex("]") + 1]) == payload
    assert [r["number"] for r in payload] == [1, 11]
    assert all(r["passed"] for r in payload)


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    from ptlgi import acceptance

    failing = acceptance.CriterionResult(99, "forced", False, {}, 0.0)
    monkeypatch.setattr(acceptance, "run_all", lambda selected, echo=None: [failing])
    assert run(tmp_path, "verify")[0] == 1
