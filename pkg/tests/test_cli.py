import json
import subprocess
import sys

import pytest

from stokes_resum import __version__
from stokes_resum.cli import main
from stokes_resum.resummation import AIRY_PRE_GAUGE, airy_model, airy_system, euler_model, euler_system


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, obj in [
        ("euler_sys", euler_system()),
        ("euler_model", euler_model()),
        ("airy_sys", airy_system()),
        ("airy_model", airy_model()),
        ("airy_pre", AIRY_PRE_GAUGE),
    ]:
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj.to_json()))
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


def run(args, capsys):
    code = main(args)
    return code, capsys.readouterr()


def test_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_demo_euler(capsys):
    code, out = run(["demo", "euler", "--degree", "14"], capsys)
    assert code == 0
    data = json.loads(out.out)
    assert data["verdict"]["exact_match"]
    assert data["parameters"] == {"degree": 14, "name": "euler"}


def test_demo_airy(capsys):
    code, out = run(["demo", "airy", "--degree", "6"], capsys)
    assert code == 0
    assert json.loads(out.out)["verdict"]["exact_match"]


def test_check_groupoid(capsys):
    code, out = run(["check-groupoid", "--kind", "pair", "--k", "3", "--degree", "10", "--samples", "20"], capsys)
    assert code == 0
    assert json.loads(out.out)["all_pass"]


def test_resum_airy_from_system(files, capsys):
    args = ["resum", "--system", files["airy_sys"], "--model", files["airy_model"], "--pre-gauge", files["airy_pre"]]
    code, out = run(args + ["--chart", "pair", "--k", "3", "--degree", "6", "--check-degree", "4"], capsys)
    assert code == 0
    data = json.loads(out.out)
    assert data["checks"] == {"identity": True, "multiplicative": True}
    assert set(data["inputs"]) == {"model", "pre_gauge", "system"}
    assert [0, 0, "3", 3, "-7/6", "0/1"] in data["representation"]["coefficients"]


def test_gauge_then_resum(files, capsys):
    gauge = files["dir"] / "gauge.json"
    args = ["--output", str(gauge), "gauge", "--system", files["euler_sys"], "--model", files["euler_model"]]
    code, _ = run(args + ["--degree", "6"], capsys)
    assert code == 0
    args = ["resum", "--gauge", str(gauge), "--model", files["euler_model"], "--chart", "pair", "--k", "2"]
    code, out = run(args + ["--mu-chart", "--degree", "5"], capsys)
    assert code == 0
    assert json.loads(out.out)["checks"]["identity"]


def test_transport(files, capsys):
    code, out = run(["transport", "--system", files["euler_sys"], "--path", "1,0;2,0", "--tol", "1e-10"], capsys)
    assert code == 0
    m = json.loads(out.out)["result"]["matrix"]
    assert abs(m[1][1][0] - 1) < 1e-9


def test_structural_commands(files, capsys):
    for args in (["push", "--n", "2"], ["pull", "--n", "2"], ["stokes-directions"]):
        code, out = run(args + ["--system", files["airy_sys"]], capsys)
        assert code == 0, args
        json.loads(out.out)
    op = files["dir"] / "op.json"
    op.write_text(json.dumps({"pole_order": 3, "coefficients": [[[1, "-1"]], [[2, "-1"]]]}))
    code, out = run(["companion", "--operator", str(op)], capsys)
    assert code == 0
    assert json.loads(out.out)["system"]["rank"] == 2


def test_missing_file_is_input_error(capsys):
    code, out = run(["stokes-directions", "--system", "/nonexistent.json"], capsys)
    assert code == 2
    assert "cannot read" in out.err


def test_bad_json_is_input_error(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{oops")
    assert run(["push", "--system", str(p), "--n", "2"], capsys)[0] == 2


def test_malformed_system_is_input_error(tmp_path, capsys):
    p = tmp_path / "sys.json"
    p.write_text(json.dumps({"rank": 2}))
    assert run(["pull", "--system", str(p), "--n", "2"], capsys)[0] == 2


def test_bad_flags_are_input_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["demo", "euler"])
    assert e.value.code == 2
    assert run(["demo", "euler", "--degree", "-1"], capsys)[0] == 2


def test_path_through_pole_is_input_error(files, capsys):
    assert run(["transport", "--system", files["euler_sys"], "--path", "1,0;-1,0"], capsys)[0] == 2


def test_resonance_is_math_failure(tmp_path, capsys):
    src = {"rank": 2, "pole_order": 1, "entries": [{"residue": ["0"], "q": []}, {"residue": ["1"], "q": []}]}
    tgt = {"rank": 2, "pole_order": 1, "ramification": 1, "matrix": [[[], [[1, "1"]]], [[], [[0, "1"]]]]}
    (tmp_path / "m.json").write_text(json.dumps(src))
    (tmp_path / "s.json").write_text(json.dumps(tgt))
    code, out = run(["gauge", "--system", str(tmp_path / "s.json"), "--model", str(tmp_path / "m.json"), "--degree", "3"], capsys)
    assert code == 3
    assert "ResonanceError" in out.err


def test_leading_mismatch_is_math_failure(files, capsys):
    args = ["resum", "--system", files["airy_sys"], "--model", files["euler_model"], "--chart", "pair", "--k", "2"]
    assert run(args + ["--degree", "3"], capsys)[0] == 3


def test_tolerance_below_floor_rejected(files, capsys):
    assert run(["transport", "--system", files["euler_sys"], "--path", "1,0;2,0", "--tol", "1e-15"], capsys)[0] == 2


def test_numeric_tolerance_failure(capsys):
    code, out = run(["check-groupoid", "--kind", "sto", "--k", "3", "--degree", "4", "--samples", "10", "--tol", "1e-30"], capsys)
    assert code == 4
    assert not json.loads(out.out)["axioms"]["numeric"]["pass"]


def _cli(args, env=None):
    import os

    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "stokes_resum.cli", *args], capture_output=True, env=e, check=True).stdout


def test_byte_stable_across_runs_and_threads():
    args = ["demo", "airy", "--degree", "8"]
    a = _cli(args, {"STOKES_RESUM_THREADS": "1"})
    b = _cli(args, {"STOKES_RESUM_THREADS": "4"})
    c = _cli(args, {"STOKES_RESUM_THREADS": "1", "STOKES_RESUM_PURE": "1"})
    assert a == b == c
    assert a.endswith(b"\n")
