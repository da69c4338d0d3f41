import io
import json
import subprocess
import sys

import pytest

from dtap.cli import run
from dtap.instance import load_instance
from dtap.oracle import brute_force_opt

from conftest import DATA

GAP = str(DATA / "gap.dtap")


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def ok(*argv):
    code, out, err = call(*argv)
    assert code == 0, err
    env = json.loads(out)
    assert set(env) == {"command", "instance_hash", "result", "timings"}
    return env


def test_solve_exact_and_lp():
    env = ok("solve", "--file", GAP)
    assert env["command"] == "solve" and len(env["instance_hash"]) == 16
    assert env["result"]["cost"] == "3/1"
    assert len(env["result"]["solution"]) == 3
    env = ok("solve", "--lp", "--file", GAP)
    assert env["result"]["lp_value"] == "5/2"
    assert {d["value"] for d in env["result"]["x"]} == {"1/2"}


def test_same_instance_same_hash():
    assert ok("solve", "--file", GAP)["instance_hash"] == ok("viwidth", "--file", GAP)["instance_hash"]


def test_approx_commands():
    env = ok("approx2", "--file", GAP)
    assert env["result"]["lp_lower_bound"] == "5/2"
    env = ok("approx175", "--file", GAP, "--epsilon", "1/4", "--k", "2")
    r = env["result"]
    assert r["cost"] == "3/1" and r["mode"] == "engineering"
    assert r["assertions_checked"] > 0
    full = ok("approx175", "--file", GAP, "--eps", "0.5")["result"]["assertions_checked"]
    env = ok("approx175", "--file", GAP, "--eps", "0.5", "--no-assert-paper-properties")
    assert env["result"]["assertions_checked"] < full


def test_approx_decimals_and_text():
    env = ok("solve", "--lp", "--file", GAP, "--approx-decimals", "3")
    assert env["result"]["lp_value"] == 2.5
    code, out, _ = call("solve", "--lp", "--file", GAP, "--format", "text")
    assert code == 0
    assert out.startswith("command: solve\n") and "lp_value: 5/2" in out


def test_dp_viwidth_willow():
    env = ok("dp", "--file", GAP)
    assert env["result"]["cost"] == "3/1"
    env = ok("dp", "--file", GAP, "--N", "10")
    assert env["result"]["cost"] == "3/1" and env["result"]["N"] == 10
    env = ok("viwidth", "--file", GAP)
    assert env["result"]["viwidth"] == max(max(d.values())
                                           for d in env["result"]["vertices"].values())
    env = ok("check-willow", "--file", str(DATA / "willow_small.dtap"), "--solve")
    inst = load_instance(DATA / "willow_small.dtap")
    assert env["result"]["willow"] is True
    assert env["result"]["cost"] == "%d/1" % brute_force_opt(inst).cost
    env = ok("check-willow", "--file", GAP)
    assert env["result"]["willow"] is False and env["result"]["violator"]


def test_gen(tmp_path, monkeypatch):
    out = tmp_path / "r.dtap"
    env = ok("gen", "--family", "random", "--n", "6", "--seed", "3", "--out", str(out))
    assert env["result"]["seed"] == 3
    assert load_instance(out).n == 6
    monkeypatch.setenv("DTAP_SEED", "11")
    assert ok("gen", "--seed", "3")["result"]["seed"] == 11
    a = ok("gen", "--family", "3dm", "--q", "2")
    assert a["result"]["key"]["target"] == a["result"]["key"]["p"] + 2
    b = ok("gen", "--family", "3dm", "--q", "2", "--unplanted")
    assert b["result"]["key"]["has_perfect_matching"] is False
    monkeypatch.setenv("DTAP_SEED", "x")
    assert call("gen")[0] == 2


def test_reduce(tmp_path):
    src = tmp_path / "t.m2tap"
    src.write_text("edge a b\nedge b c\nlink a c 1\nlink a b 2\n")
    out = tmp_path / "w.dtap"
    env = ok("reduce", "--from", "m2tap", "--file", str(src), "--out", str(out))
    r = env["result"]
    assert set(r["midpoints"].values()) == {"m(a,b)", "m(b,c)"}
    assert {p["from_link"] for p in r["provenance"]} == {0, 1}
    for p in r["provenance"]:
        assert sorted(p["link"]) == sorted(["a", "c"] if p["from_link"] == 0 else ["a", "b"])
    w = load_instance(out)
    assert brute_force_opt(w).cost == 2  # the a-c link in both directions
    src.write_text("edge a b\nnonsense\n")
    assert call("reduce", "--file", str(src))[0] == 2


def test_bench(tmp_path):
    out = tmp_path / "b.csv"
    env = ok("bench", "--trials", "3", "--n", "6", "--solvers", "exact,approx2",
             "--out", str(out))
    assert env["instance_hash"] is None
    assert env["result"]["summary"]["exact"]["max"] == "1/1"
    assert len(out.read_text().splitlines()) == 7
    assert call("bench", "--solvers", "magic")[0] == 2


def test_exit_codes(tmp_path):
    assert call()[0] == 2
    assert call("solve")[0] == 2
    assert call("solve", "--file", str(tmp_path / "missing.dtap"))[0] == 2
    bad = tmp_path / "bad.dtap"
    bad.write_text("root r\narc r\n")
    assert call("solve", "--file", str(bad))[0] == 2
    inf = tmp_path / "inf.dtap"
    inf.write_text("root r\narc r a\n")
    code, _, err = call("solve", "--file", str(inf))
    assert code == 3 and "infeasible" in err
    assert call("approx2", "--file", str(inf))[0] == 3
    assert call("approx175", "--file", GAP, "--eps", "abc")[0] == 2
    assert call("approx175", "--file", GAP, "--mode", "fast")[0] == 2
    code, _, err = call("dp", "--file", GAP, "--budget", "1")
    assert code == 4


def test_console_script():
    res = subprocess.run([sys.executable, "-m", "dtap.cli", "solve", "--file", GAP],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["result"]["cost"] == "3/1"
