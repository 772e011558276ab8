import json
import subprocess
import sys

import pytest

from immidx import cli
from immidx.specs import EXAMPLES


@pytest.fixture
def manifest(tmp_path):
    def write(name, desc=None):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(desc if desc is not None else EXAMPLES[name]))
        return str(p)
    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_index_curve(capsys, manifest):
    code, out, _ = run(capsys, "index", "--spec", manifest("one_loop_curve"))
    assert code == 0
    d = json.loads(out)
    assert list(d)[0] == "schema" and d["schema"] == 1
    assert d["sign_sum"] == d["whitney_1d"] == -1 and d["agree"] is True


def test_index_trivial_and_parity(capsys, manifest):
    d = json.loads(run(capsys, "index", "--spec", manifest("trivial2"))[1])
    assert d["sign_sum"] == 0 and d["integral"] == 0
    d = json.loads(run(capsys, "index", "--spec", manifest("trivial3"))[1])
    assert d["parity"] == 0 and "integral" not in d


def test_index_is_deterministic(capsys, manifest):
    path = manifest("one_loop_curve")
    a = run(capsys, "index", "--spec", path)[1]
    b = run(capsys, "index", "--spec", path)[1]
    assert a == b


def test_index_ambiguous_exits_2(capsys, manifest):
    code, out, _ = run(capsys, "index", "--spec", manifest("one_loop_curve"), "--tol", "10")
    d = json.loads(out)
    if d["reports"]["whitney-1d"]["ambiguous"]:
        assert code == 2 and "RoundingAmbiguous" in d["error"]
    else:
        assert code == 0


def test_intersections(capsys, manifest):
    code, out, _ = run(capsys, "intersections", "--spec", manifest("one_loop_curve"))
    d = json.loads(out)
    assert code == 0 and d["count"] == 1
    assert d["records"][0]["residual"] < 1e-10
    assert run(capsys, "intersections", "--spec", manifest("one_loop_curve"), "--grid", "1")[0] == 1


def test_check_form(capsys):
    code, out, _ = run(capsys, "check-form", "--n", "2", "--samples", "20", "--seed", "7")
    assert code == 0 and json.loads(out)["pass"] is True
    code, out, _ = run(capsys, "check-form", "--n", "2", "--samples", "20", "--seed", "7",
                       "--perturbed")
    assert code == 2 and json.loads(out)["pass"] is False
    assert run(capsys, "check-form", "--n", "3", "--samples", "1", "--seed", "0")[0] == 1
    code, out, _ = run(capsys, "check-form", "--n", "2", "--samples", "0", "--seed", "0")
    assert code == 0 and json.loads(out)["warnings"]


def test_validate(capsys, manifest):
    code, out, _ = run(capsys, "validate", "--spec", manifest("lifted"), "--samples", "50")
    d = json.loads(out)
    assert code == 0 and d["pass"] and d["max_hessian_dev"] < 1e-5
    code, _, _ = run(capsys, "validate", "--spec", manifest("lifted"), "--threshold", "1e-30")
    assert code == 2


def test_check_laplace_usage(capsys, manifest):
    assert run(capsys, "check-laplace", "--spec", manifest("lifted"), "--lambdas", "a,b")[0] == 1
    assert run(capsys, "check-laplace", "--spec", manifest("lifted"), "--lambdas", "-5")[0] == 1
    assert run(capsys, "check-laplace", "--spec", manifest("one_loop_curve"))[0] == 1


def test_examples(capsys):
    code, out, _ = run(capsys, "examples", "list")
    assert code == 0 and set(json.loads(out)["examples"]) == set(EXAMPLES)
    code, out, _ = run(capsys, "examples", "emit", "lifted")
    d = json.loads(out)
    d.pop("schema")
    assert d == EXAMPLES["lifted"]
    assert run(capsys, "examples", "emit")[0] == 1
    assert run(capsys, "examples", "emit", "nope")[0] == 1


def test_emitted_example_loads(capsys, tmp_path):
    p = tmp_path / "c.json"
    assert cli.main(["examples", "emit", "one_loop_curve", "--out", str(p)]) == 0
    code, out, _ = run(capsys, "intersections", "--spec", str(p))
    assert code == 0 and json.loads(out)["count"] == 1


def test_usage_errors(capsys, manifest, tmp_path):
    assert run(capsys, "index")[0] == 1
    assert run(capsys, "bogus")[0] == 1
    assert run(capsys, "index", "--spec", str(tmp_path / "missing.json"))[0] == 1
    assert run(capsys, "index", "--spec", manifest("bad", {"builder": "nope"}))[0] == 1
    code, _, err = run(capsys, "index", "--spec", manifest("one_loop_curve"), "--tol", "-1")
    assert code == 1 and "tol" in err


def test_threads_env(capsys, manifest, monkeypatch):
    monkeypatch.setenv("IMMIDX_THREADS", "x")
    assert run(capsys, "examples", "list")[0] == 1
    monkeypatch.setenv("IMMIDX_THREADS", "2")
    assert run(capsys, "intersections", "--spec", manifest("one_loop_curve"))[0] == 0


def test_float_format():
    text = cli.dumps({"a": 0.0, "b": 1.0 / 3.0, "c": float("nan"), "d": 2})
    d = json.loads(text)
    assert '"a": 0.0' in text and d["b"] == 1.0 / 3.0 and d["c"] is None and d["d"] == 2


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "immidx.cli", "examples", "list"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "lifted" in r.stdout
