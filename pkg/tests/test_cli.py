import io
import json
import subprocess
import sys

import jsonschema
import pytest

from gpysieve.cli import EXIT_DOMAIN, EXIT_RESOURCE, EXIT_USAGE, dispatch
from gpysieve.report import load_schema


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def run_json(schema, *argv):
    code, out, err = run(*argv)
    assert code == 0, err
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema(schema))
    return doc["report"], doc["provenance"]


def test_singular():
    rep, prov = run_json("singular", "singular", "--set", "0,2")
    assert abs(rep["value"] - 1.320323) < 1e-6
    assert prov["command"] == "singular" and prov["params"]["offsets"] == [0, 2]
    rep, _ = run_json("singular", "singular", "--set", "0,2,6", "--cutoff", "1e5")
    assert rep["cutoff"] == 100000


def test_f2_bound_and_optimize():
    rep, _ = run_json("bound", "f2", "bound", "--lambda", "0.172")
    assert rep["bound"] < 0.17066 and rep["valid"]
    rep, _ = run_json("bound", "f2", "bound", "--lambda", "0.1")
    assert rep["delta_prime"] is None and rep["radicand_negative"]
    rep, _ = run_json("bound", "f2", "optimize", "--from", "0.1716", "--to", "0.20")
    assert abs(rep["bound"] - 0.1707) < 5e-4


def test_f2_positivity():
    rep, _ = run_json(
        "positivity", "f2", "positivity", "--lambda", "0.172", "--delta", "0.007",
        "--k", "10000", "--l", "100", "--use-bound", "--breakdown",
    )
    assert rep["total_sign"] == "-" and rep["use_bound"]
    assert len(rep["breakdown"]) == rep["terms"]


def test_f2_search():
    rep, _ = run_json("search", "f2", "search", "--lambda", "0.3", "--delta", "0.02", "--k-max", "1e4")
    assert rep["found"] and (rep["k"], rep["l"]) == (800, 10)
    code, out, err = run("f2", "search", "--lambda", "0.172", "--delta", "0.01", "--k-max", "400")
    assert code == 0 and "no witness is expected" in err
    rep = json.loads(out)["report"]
    assert rep["futile"] and not rep["found"] and rep["witness"] is None
    jsonschema.validate(json.loads(out), load_schema("search"))


def test_gallagher_json_and_trend_csv():
    rep, _ = run_json("gallagher", "gallagher", "--h", "200", "--part", "0:50:2", "--part", "150:200:1")
    assert rep["tuple_count"] == 65025 and abs(rep["ratio"] - 0.893202302172) < 1e-11
    code, out, _ = run("gallagher-trend", "--template", "0:1:2", "--h", "100,50")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0] == "h,ratio,error_bound"
    assert [l.split(",")[0] for l in lines[1:]] == ["50", "100"]


def test_correlate_json_ladder_and_eq1():
    rep, _ = run_json("correlation", "correlate", "--mode", "prop1", "--N", "1e5", "--tuples", "0,2|0,2")
    assert abs(rep["ratio"] - 0.763277269440) < 1e-11
    rep, _ = run_json("correlation", "correlate", "--mode", "prop2", "--N", "1e4", "--tuples", "2|2", "--theta", "0")
    assert rep["mode"] == "prop2"
    code, out, _ = run("correlate", "--mode", "prop1", "--tuples", "0,2|0,2", "--ladder", "1e4,3e4")
    assert code == 0 and out.splitlines()[0] == "N,empirical,main,ratio" and len(out.splitlines()) == 3
    rep, _ = run_json("eq1", "correlate", "--mode", "eq1", "--N", "3000", "--theta-exp", "0.24",
                      "--tuples", "0,2,6|0,2,8", "--h0", "0", "--h1", "2")
    assert rep["holds"] and rep["checked"] == 3000


def test_domain_errors_exit_2():
    code, _, err = run("correlate", "--mode", "thm1", "--N", "1e4", "--tuples", "0,2|0,2|2|4")
    assert code == EXIT_DOMAIN and "(H1 u H2) n (H3 u H4) = {} must hold" in err
    code, _, err = run("singular", "--set", "0,50", "--cutoff", "10")
    assert code == EXIT_DOMAIN and "minimum 50" in err
    code, _, err = run("correlate", "--mode", "thm1", "--N", "1e4", "--tuples", "0,2|0,2")
    assert code == EXIT_DOMAIN and "does not match" in err
    code, _, err = run("f2", "optimize", "--from", "0.1", "--to", "0.15")
    assert code == EXIT_DOMAIN


def test_resource_errors_exit_3(monkeypatch):
    code, _, err = run("gallagher", "--h", "100", "--part", "0:100:3", "--cap", "10")
    assert code == EXIT_RESOURCE and "cap is 10" in err
    monkeypatch.setenv("GPYSIEVE_TABLE_CAP", "1000")
    code, _, err = run("correlate", "--mode", "prop1", "--N", "1e4", "--tuples", "0,2|0,2")
    assert code == EXIT_RESOURCE and "GPYSIEVE_TABLE_CAP" in err


@pytest.mark.parametrize(
    "argv",
    [["bogus"], [], ["singular"], ["singular", "--set", "2,x"], ["f2"], ["gallagher", "--h", "1.5", "--part", "0:1:1"]],
)
def test_usage_errors_exit_64(argv):
    code, out, err = run(*argv)
    assert code == EXIT_USAGE and out == "" and "usage" in err


def test_byte_identical_across_workers():
    a = run("gallagher", "--h", "80", "--part", "0:40:2", "--part", "50:80:1", "--workers", "1")[1]
    b = run("gallagher", "--h", "80", "--part", "0:40:2", "--part", "50:80:1", "--workers", "4")[1]
    assert a == b
    a = run("correlate", "--mode", "prop1", "--N", "2e5", "--tuples", "0,2|0,2", "--workers", "1")[1]
    b = run("correlate", "--mode", "prop1", "--N", "2e5", "--tuples", "0,2|0,2", "--workers", "3")[1]
    assert a == b


def test_twelve_significant_digits():
    _, out, _ = run("f2", "bound", "--lambda", "0.172")
    assert '"delta_prime": 0.00779401700003' in out


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gpysieve", "singular", "--set", "0,2"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "wall time" in proc.stderr
    assert json.loads(proc.stdout)["provenance"]["tool"] == "gpysieve"
