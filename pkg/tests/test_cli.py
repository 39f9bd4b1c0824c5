import csv
import json
import math
import subprocess
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import pytest


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "pohozaev", *args],
                          capture_output=True, text=True, cwd=cwd)


def write_config(tmp_path: Path, name: str, data: dict) -> Path:
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def report_schema():
    with resources.files("pohozaev.schemas").joinpath("report.json").open() as fh:
        return json.load(fh)


BALL_CONST = {"n": 3, "domain": {"type": "ball", "radius": 1.0},
              "problem": {"type": "scalar", "f": "1"}}
PAIR_CONST = {"n": 3, "domain": {"type": "ball", "radius": 1.0},
              "problem": {"type": "pair", "f": "1", "g": "1"}}
RECT_CONST = {"n": 2, "domain": {"type": "rectangle", "half_widths": [0.5, 0.5]},
              "problem": {"type": "scalar", "f": "1"},
              "solver": {"grid_n": 64}}


def test_solve_ball_reports_alpha(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", BALL_CONST)
    out = tmp_path / "run"
    result = run_cli("solve", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 0, result.stderr
    report = json.loads((out / "solve_report.json").read_text())
    assert report["alpha"] == pytest.approx(1 / 6, abs=1e-8)
    assert (out / "solution.csv").exists()
    assert (out / "solution.svg").exists()
    header = (out / "solution.csv").read_text().splitlines()[0]
    assert header == "r,u,du"


def test_solve_rectangle_writes_nodal_csv(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", RECT_CONST)
    out = tmp_path / "run"
    result = run_cli("solve", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 0, result.stderr
    with open(out / "solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "x2", "u"]
    assert len(rows) == 1 + 65 * 65


def test_solve_supercritical_exits_3(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {
        "n": 3, "domain": {"type": "ball", "radius": 1.0},
        "problem": {"type": "scalar", "f": "u^6"}})
    out = tmp_path / "run"
    result = run_cli("solve", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 3
    report = json.loads((out / "solve_report.json").read_text())
    assert report["failure"] == "NoBracketError"
    assert "non-existence" in report["reason"]


def test_malformed_json_exits_2(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"n": 3, "domain": ')
    result = run_cli("solve", "--config", str(cfg))
    assert result.returncode == 2
    assert "line" in result.stderr and "column" in result.stderr


def test_unknown_key_rejected(tmp_path):
    data = dict(BALL_CONST)
    data["surprise"] = 1
    cfg = write_config(tmp_path, "cfg.json", data)
    result = run_cli("solve", "--config", str(cfg))
    assert result.returncode == 2


def test_verify_pair_three_reports(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", PAIR_CONST)
    result = run_cli("verify", "--config", str(cfg), "--a", "0,1,2")
    assert result.returncode == 0, result.stderr
    payload = json.loads(result.stdout)
    jsonschema.validate(payload, report_schema())
    assert len(payload["reports"]) == 3
    for report in payload["reports"]:
        assert report["lhs_total"] == pytest.approx(8 * math.pi / 9, rel=1e-8)
    assert payload["max_rel_residual"] < 1e-8


def test_verify_scalar_cubic_passes_default_gate(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {
        "n": 3, "domain": {"type": "ball", "radius": 1.0},
        "problem": {"type": "scalar", "f": "u^3"}})
    result = run_cli("verify", "--config", str(cfg))
    assert result.returncode == 0, result.stderr


def test_verify_gate_failure_exits_4(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", PAIR_CONST)
    result = run_cli("verify", "--config", str(cfg), "--gate", "1e-16")
    assert result.returncode == 4


def test_verify_supplied_non_solution_exits_5(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", BALL_CONST)
    fake = tmp_path / "fake.csv"
    lines = ["r,u,du"]
    count = 129
    for i in range(count):
        r = 1e-6 + (1.0 - 1e-6) * i / (count - 1)
        u = math.cos(r)
        lines.append(f"{r},{u},{-math.sin(r)}")
    fake.write_text("\n".join(lines) + "\n")
    result = run_cli("verify", "--config", str(cfg), "--solution", str(fake))
    assert result.returncode == 5
    assert "does not solve" in result.stderr


def test_verify_supplied_true_solution_passes(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", BALL_CONST)
    good = tmp_path / "good.csv"
    lines = ["r,u,du"]
    count = 2049
    for i in range(count):
        r = 1e-6 + (1.0 - 1e-6) * i / (count - 1)
        lines.append(f"{r!r},{(1 - r * r) / 6!r},{-r / 3!r}")
    good.write_text("\n".join(lines) + "\n")
    result = run_cli("verify", "--config", str(cfg), "--solution", str(good))
    assert result.returncode == 0, result.stderr


def test_verify_general_decoupled(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {
        "n": 3, "domain": {"type": "ball", "radius": 1.0},
        "problem": {"type": "general", "m": 2,
                    "H": "v1 + u1 + v2^4/4 + u2^4/4",
                    "pairs": [{"f": "1", "g": "1"},
                              {"f": "v^3", "g": "u^3"}]}})
    result = run_cli("verify", "--config", str(cfg))
    assert result.returncode == 0, result.stderr
    payload = json.loads(result.stdout)
    assert len(payload["reports"]) == 1


def test_check_hyperbola_shorthand(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"n": 4, "p": 3, "q": 4})
    result = run_cli("check", "--config", str(cfg))
    assert result.returncode == 0
    payload = json.loads(result.stdout)
    jsonschema.validate(payload, report_schema())
    verdict = payload["verdicts"][0]
    assert verdict["outcome"] == "Nonexistence"
    assert verdict["classification"] == "Supercritical"


def test_check_biharmonic_shorthand(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"n": 5, "biharmonic_q": 10})
    result = run_cli("check", "--config", str(cfg))
    payload = json.loads(result.stdout)
    assert payload["verdicts"][0]["outcome"] == "Nonexistence"


def test_check_vacuous_n2(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {"n": 2, "p": 1, "q": 1})
    result = run_cli("check", "--config", str(cfg))
    assert result.returncode == 0
    payload = json.loads(result.stdout)
    assert payload["verdicts"][0]["outcome"] == "Inconclusive"


def test_check_list_with_expressions(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {
        "n": 3,
        "checks": [
            {"type": "scalar", "p": 6},
            {"type": "mitidieri", "H": "u^7/7 + v^7/7"},
            {"type": "theorem2", "g": "u^6", "p": 6},
        ]})
    result = run_cli("check", "--config", str(cfg))
    assert result.returncode == 0, result.stderr
    payload = json.loads(result.stdout)
    assert [v["outcome"] for v in payload["verdicts"]] == ["Nonexistence"] * 3


def test_sweep_csv_row_count(tmp_path):
    cfg = write_config(tmp_path, "sweep.json", {
        "n": 3, "p_range": [0.5, 8.0], "p_count": 16,
        "q_range": [0.5, 8.0], "q_count": 16})
    out = tmp_path / "run"
    result = run_cli("sweep", "--config", str(cfg), "--out", str(out))
    assert result.returncode == 0, result.stderr
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 257
    assert (out / "sweep.svg").exists()


def test_sweep_overwrite_guard_exits_6(tmp_path):
    cfg = write_config(tmp_path, "sweep.json", {
        "n": 3, "p_range": [1.0, 2.0], "p_count": 2,
        "q_range": [1.0, 2.0], "q_count": 2})
    out = tmp_path / "run"
    first = run_cli("sweep", "--config", str(cfg), "--out", str(out))
    assert first.returncode == 0
    second = run_cli("sweep", "--config", str(cfg), "--out", str(out))
    assert second.returncode == 6
    assert "refusing to overwrite" in second.stderr
    forced = run_cli("sweep", "--config", str(cfg), "--out", str(out), "--force")
    assert forced.returncode == 0


def test_sweep_outputs_are_deterministic(tmp_path):
    cfg = write_config(tmp_path, "sweep.json", {
        "n": 3, "p_range": [0.5, 8.0], "p_count": 6,
        "q_range": [0.5, 8.0], "q_count": 6})
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    run_cli("sweep", "--config", str(cfg), "--out", str(out1))
    run_cli("sweep", "--config", str(cfg), "--out", str(out2))
    assert (out1 / "sweep.csv").read_bytes() == (out2 / "sweep.csv").read_bytes()
    assert (out1 / "sweep.svg").read_bytes() == (out2 / "sweep.svg").read_bytes()


def test_convergence_grid_levels(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", {
        "n": 2, "domain": {"type": "rectangle", "half_widths": [0.5, 0.5]},
        "problem": {"type": "scalar", "f": "1"}})
    out = tmp_path / "run"
    result = run_cli("convergence", "--config", str(cfg),
                     "--levels", "33,65,129", "--out", str(out))
    assert result.returncode == 0, result.stderr
    payload = json.loads(result.stdout)
    assert len(payload["rows"]) == 3
    assert payload["rows"][-1]["order"] >= 1.5
    lines = (out / "convergence.csv").read_text().splitlines()
    assert lines[0] == "level,h,metric,value,order"


def test_convergence_requires_three_levels(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", BALL_CONST)
    out = tmp_path / "run"
    result = run_cli("convergence", "--config", str(cfg),
                     "--levels", "257", "--out", str(out))
    assert result.returncode == 2
    assert "3 refinement levels" in result.stderr


def test_verify_report_file_written(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", PAIR_CONST)
    out = tmp_path / "run"
    result = run_cli("verify", "--config", str(cfg), "--a", "1",
                     "--out", str(out))
    assert result.returncode == 0
    payload = json.loads((out / "verify_report.json").read_text())
    jsonschema.validate(payload, report_schema())


def test_text_format(tmp_path):
    cfg = write_config(tmp_path, "cfg.json", PAIR_CONST)
    result = run_cli("verify", "--config", str(cfg), "--format", "text")
    assert result.returncode == 0
    assert "identity report" in result.stdout
    assert "rel_residual" in result.stdout
