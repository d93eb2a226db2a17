import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET
from fractions import Fraction

import pytest

from k3stab.cli import SVG_CUT, SVG_WIDTH, main
from k3stab.flow_engine import FlowTrace
from k3stab.monodromy import GroupElement
from k3stab.period_domain import holes_from_json


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def fail(capsys, *argv):
    with pytest.raises(SystemExit) as exc:
        main(list(argv))
    err = capsys.readouterr().err
    return exc.value.code, json.loads(err)


def test_holes(capsys):
    code, out, _ = run(capsys, "--m", "1", "holes", "--rmax", "5", "--dmax", "5")
    assert code == 0
    obj = json.loads(out)
    pos = {(Fraction(p["num"], p["den"]), p["r"]) for p in obj["positions"]}
    # i, 1+i and 1/2 + i/2
    assert {(Fraction(0), 1), (Fraction(1), 1), (Fraction(1, 2), 2)} <= pos
    hs = holes_from_json(obj)
    assert len(hs) == len(obj["roots"])


def test_roots(capsys):
    _, out, _ = run(capsys, "roots", "--rmax", "1", "--dmax", "1")
    assert json.loads(out) == [{"r": 1, "d": -1, "s": 2}, {"r": 1, "d": 0, "s": 1}, {"r": 1, "d": 1, "s": 2}]


def test_chamber_svg(capsys):
    _, out, _ = run(capsys, "--m", "1", "chamber", "--window", "-2,2,0,1.5")
    root = ET.fromstring(out)
    assert root.get("width") == str(SVG_WIDTH)
    ns = "{http://www.w3.org/2000/svg}"
    cuts = [el for el in root.iter(ns + "line") if el.get("stroke") == SVG_CUT]
    xs = set()
    for el in cuts:
        r, d, s = map(int, el.get("data-root").split(","))
        xs.add(Fraction(d, r))
    assert {Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 2), Fraction(-1, 2)} <= xs
    # the cut of (1,0,1) reaches twice as high as that of (2,1,1)
    by_root = {el.get("data-root"): el for el in cuts}
    h1 = float(by_root["1,0,1"].get("y1")) - float(by_root["1,0,1"].get("y2"))
    h2 = float(by_root["2,1,1"].get("y1")) - float(by_root["2,1,1"].get("y2"))
    assert h1 == pytest.approx(2 * h2, abs=0.02)


def test_chamber_m2_heights(capsys):
    _, out, _ = run(capsys, "--m", "2", "chamber", "--window", "-1,1,0,1", "--rmax", "3")
    root = ET.fromstring(out)
    circles = list(root.iter("{http://www.w3.org/2000/svg}circle"))
    assert circles
    heights = sorted({round(float(c.get("cy")), 1) for c in circles})
    assert len(heights) == 2  # no rank 2 roots at m=2; rank 1 at 1/sqrt2 and rank 3 at 1/(3 sqrt2)
    assert math.isfinite(heights[0])


def test_lift_bundled(capsys):
    _, out, _ = run(capsys, "lift")
    assert json.loads(out) == [{"r": 1, "d": 0, "s": 1, "exp": 1}]


def test_lift_file_and_out(tmp_path, capsys):
    loop = {"base": [0, 2], "vertices": [[0.25, 2], [0.25, 0.6], [-0.25, 0.6], [-0.25, 2]], "closed": True}
    f = tmp_path / "loop.json"
    f.write_text(json.dumps(loop))
    dest = tmp_path / "word.json"
    run(capsys, "lift", "--loop", str(f), "--out", str(dest))
    assert GroupElement.from_json(json.loads(dest.read_text())) == GroupElement.generator((1, 0, 1), -1)


def test_flow_trace_roundtrip(capsys):
    _, out, _ = run(capsys, "flow", "--theta", "0.3")
    tr = FlowTrace.from_jsonl(out)
    assert tr.status == "reached_width_zero"
    assert tr.to_jsonl() == out
    _, out2, _ = run(capsys, "flow", "--theta", "0.3")
    assert out2 == out


def test_flow_from_path(capsys):
    _, out, _ = run(capsys, "flow", "--path", "-0.1,0.5;0.1,0.5")
    assert FlowTrace.from_jsonl(out).ok


def test_retract(capsys):
    _, out, _ = run(capsys, "retract", "--path", "-0.1,0.5;0.1,0.5")
    lines = [json.loads(x) for x in out.splitlines()]
    summary = lines[-1]
    assert summary["type"] == "retract"
    assert summary["word"] == {"shift": 0, "word": [{"r": 1, "d": 0, "s": 1, "exp": 1}]}


@pytest.mark.parametrize("argv,code,kind", [
    (["--m", "0", "roots"], 2, "UsageError"),
    (["roots", "--rmax", "0"], 2, "UsageError"),
    (["--tol", "-1", "roots"], 2, "UsageError"),
    (["chamber", "--window", "1,0,0,1"], 2, "UsageError"),
    (["nosuch"], 2, "UsageError"),
    (["lift", "--loop", "/nonexistent/loop.json"], 1, "FileNotFoundError"),
    (["flow", "--path", "0,0.5;0.1,0.5"], 1, "WallDataError"),
    (["flow", "--path", "-0.1,0.5;0,0.5"], 1, "NonTransverseCrossingError"),
    (["retract", "--path", "0,0.5"], 1, "WallDataError"),
])
def test_errors(capsys, argv, code, kind):
    c, err = fail(capsys, *argv)
    assert c == code
    assert err["error"] == kind and err["message"]


def test_entry_point_subprocess():
    p = subprocess.run([sys.executable, "-m", "k3stab", "lift"], capture_output=True, text=True)
    assert p.returncode == 0
    assert json.loads(p.stdout) == [{"r": 1, "d": 0, "s": 1, "exp": 1}]
    p = subprocess.run([sys.executable, "-m", "k3stab", "holes", "--rmax", "x"], capture_output=True, text=True)
    assert p.returncode == 2 and "error" in json.loads(p.stderr)
