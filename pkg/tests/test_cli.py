import json
import shutil
import subprocess
from pathlib import Path

import pytest

from frontier.cli import main, validate
from frontier.errors import ScenarioError

SCEN = Path(__file__).resolve().parents[1] / "scenarios"


def write(tmp_path, data, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_effort_outputs(tmp_path):
    assert main(["effort", "--scenario", str(SCEN / "effort.json"), "--out", str(tmp_path), "--quiet"]) == 0
    rows = (tmp_path / "effort_table.csv").read_text().splitlines()
    assert rows[0] == "beta,effort,attained_flag" and len(rows) == 21
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert set(man["files"]) == {"effort_table.csv", "report.json"}


def test_eradicate_final_time_and_frames(tmp_path):
    assert main(["eradicate", "--scenario", str(SCEN / "eradicate.json"), "--out", str(tmp_path), "--quiet"]) == 0
    last = (tmp_path / "trajectory.csv").read_text().splitlines()[-1]
    assert float(last.split(",")[0]) == pytest.approx(0.3863, abs=4e-3)
    assert len(list((tmp_path / "frames").glob("*.svg"))) == 6


def test_constrained_verdict(tmp_path):
    assert main(["constrained", "--scenario", str(SCEN / "constrained.json"), "--out", str(tmp_path), "--quiet"]) == 0
    v = json.loads((tmp_path / "verdict.json").read_text())
    assert v["verdict"] == "Indeterminate" and set(v) == {"kappa", "K", "M", "verdict"}
    assert (tmp_path / "invariants.csv").exists() and (tmp_path / "sweep.csv").exists()


def test_runs_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["eradicate", "--scenario", str(SCEN / "eradicate.json"), "--out", str(d), "--quiet"]) == 0
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


@pytest.mark.parametrize("patch, field, word", [
    ({"budget": -1.0}, "budget", "range"),
    ({"initial": {"kind": "square", "radius": 1.0}}, "initial.kind", "enumerated"),
    ({"colour": "red"}, "colour", "schema"),
    ({"schema_version": 2}, "schema_version", "enumerated"),
])
def test_schema_errors_exit_2(tmp_path, capsys, patch, field, word):
    sc = json.loads((SCEN / "eradicate.json").read_text()) | patch
    assert main(["eradicate", "--scenario", str(write(tmp_path, sc)), "--out", str(tmp_path / "o")]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["field"] == field and word in err["message"]
    assert not (tmp_path / "o").exists()


def test_missing_required_field():
    with pytest.raises(ScenarioError) as exc:
        validate({"schema_version": 1, "kind": "constrained", "domain": {"kind": "disc", "radius": 1.0}})
    assert exc.value.field == "budget"


def test_compute_errors_exit_3(tmp_path, capsys):
    sc = {"schema_version": 1, "kind": "eradicate", "initial": {"kind": "circle", "radius": 1.0, "n": 64},
          "budget": 1.0}
    assert main(["eradicate", "--scenario", str(write(tmp_path, sc)), "--out", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "InfeasibleBudget"
    L = [[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]
    sc = {"schema_version": 1, "kind": "constrained", "domain": {"kind": "polygon", "vertices": L}, "budget": 1.0}
    assert main(["constrained", "--scenario", str(write(tmp_path, sc)), "--out", str(tmp_path / "o")]) == 3
    assert json.loads(capsys.readouterr().err)["error"] == "UnsupportedShape"


def test_kind_must_match_subcommand(tmp_path, capsys):
    assert main(["slice", "--scenario", str(SCEN / "effort.json"), "--out", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err)["field"] == "kind"


def test_validate_all_shipped_scenarios(capsys):
    for p in sorted(SCEN.glob("*.json")):
        assert main(["validate", "--scenario", str(p)]) == 0


@pytest.mark.skipif(shutil.which("frontier") is None, reason="console script not installed")
def test_console_script(tmp_path):
    r = subprocess.run(["frontier", "slice", "--scenario", str(SCEN / "slice.json"), "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    rep = json.loads(r.stdout)
    assert rep["cost"] == pytest.approx(rep["kappa_lower_bound"], rel=1e-3)
