import csv
import io
import json
import math

import pytest

from sptmbqc import cli, serialize
from sptmbqc.errors import SchemaError, ValidationError


def run(*argv):
    out = io.StringIO()
    code = cli.main([str(a) for a in argv], out=out)
    return code, out.getvalue()


@pytest.fixture
def aklt_file(tmp_path):
    path = tmp_path / "aklt.json"
    assert run("build", "--preset", "aklt", "--out", path)[0] == 0
    return path


@pytest.fixture
def haldane_file(tmp_path):
    path = tmp_path / "h.json"
    assert run("build", "--group", "2,2", "--kappa", 2, "--seed", 8, "--out", path)[0] == 0
    return path


# ---------------------------------------------------------------- parsing helpers


@pytest.mark.parametrize("text,value", [
    ("pi", math.pi), ("pi/2", math.pi / 2), ("-pi/4", -math.pi / 4), ("3pi/2", 1.5 * math.pi),
    ("0.5*pi", 0.5 * math.pi), ("0.25", 0.25), ("-pi", -math.pi),
])
def test_parse_angle(text, value):
    assert cli.parse_angle(text) == pytest.approx(value)


def test_parse_angle_bad():
    with pytest.raises(ValidationError):
        cli.parse_angle("tau/2")


def test_parse_ints():
    assert cli.parse_ints("1,5:7, 10:20:5") == [1, 5, 6, 7, 10, 15, 20]
    assert cli.parse_ints("") == []
    with pytest.raises(ValidationError):
        cli.parse_ints("a:b")


def test_parse_characters():
    assert cli.parse_characters("all") == "all"
    assert cli.parse_characters("1,0;1,1") == [[1, 0], [1, 1]]


# ---------------------------------------------------------------- config


def test_config_roundtrip():
    cfg = cli.RunConfig(group=[2, 2], cocycle={"numerators": [[0] * 4] * 4, "denominator": 2},
                        characters=[[1, 0]], kappa=2, seed=3, tolerances={"closure": 1e-8},
                        outputs={"csv": "x.csv"})
    doc = json.loads(json.dumps(cfg.to_dict()))
    again = cli.RunConfig.from_dict(doc)
    assert again == cfg and again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("doc", [
    {"colour": "red"},
    {"tolerances": {"gate": 1e-3}},
    {"outputs": {"plot": "a.png"}},
    {"schema": "sptmbqc.config/2"},
])
def test_config_rejects(doc):
    with pytest.raises(SchemaError):
        cli.RunConfig.from_dict(doc)


def test_config_kappa_validation():
    with pytest.raises(ValidationError):
        cli.RunConfig(kappa=0)


def test_config_file_and_env(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"group": [2, 2], "kappa": 2, "seed": 7}))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run("--config", cfg, "build", "--out", a)[0] == 0
    monkeypatch.setenv(cli.ENV_CONFIG, str(cfg))
    assert run("build", "--out", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert serialize.load_tensor(a).junk_dim == 2


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"group": [2, 2], "kappa": 2, "seed": 7}))
    out = tmp_path / "t.json"
    assert run("--config", cfg, "build", "--kappa", 1, "--out", out)[0] == 0
    assert serialize.load_tensor(out).junk_dim == 1


def test_unreadable_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("--config", bad, "build", "--preset", "aklt", "--out", tmp_path / "t.json")[0] == 2


# ---------------------------------------------------------------- build


def test_build_aklt(aklt_file):
    code, text = run("build", "--preset", "aklt", "--out", aklt_file)
    assert code == 0
    viol = float(text.split("symmetry violation: ")[1].split()[0])
    assert viol <= 1e-10


def test_build_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("build", "--group", "2,2", "--kappa", 2, "--seed", 7, "--out", a)
    run("build", "--group", "2,2", "--kappa", 2, "--seed", 7, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    run("build", "--group", "2,2", "--kappa", 2, "--seed", 6, "--out", c)
    assert a.read_bytes() != c.read_bytes()


def test_build_trivial_cocycle(tmp_path, capsys):
    code, _ = run("build", "--group", "2,2", "--cocycle", "trivial", "--out", tmp_path / "t.json")
    assert code == 2
    assert "NotMNC" in capsys.readouterr().err


def test_build_weyl_preset(tmp_path):
    out = tmp_path / "w.json"
    assert run("build", "--preset", "weyl-3", "--out", out)[0] == 0
    assert serialize.load_tensor(out).logical_dim == 3


@pytest.mark.parametrize("argv", [
    ["build", "--preset", "cluster"],
    ["build"],
    ["build", "--group", "2,2", "--cocycle", "fancy"],
])
def test_build_invalid(tmp_path, argv):
    assert run(*argv, "--out", tmp_path / "t.json")[0] == 2


def test_argparse_usage_error():
    assert run("frobnicate")[0] == 2
    assert run("--version")[0] == 0


# ---------------------------------------------------------------- calibrate


def test_calibrate_aklt(aklt_file, tmp_path):
    csv_path, json_path = tmp_path / "nu.csv", tmp_path / "nu.json"
    assert run("calibrate", aklt_file, "--csv", csv_path, "--json", json_path)[0] == 0
    rows = list(csv.DictReader(csv_path.open()))
    assert tuple(rows[0]) == cli.NU_COLUMNS
    assert len(rows) == 9
    assert all(abs(float(r["modulus"]) - 1 / 3) <= 1e-12 for r in rows)
    doc = json.loads(json_path.read_text())
    assert doc["schema"] == "sptmbqc.report/1" and len(doc["config_hash"]) == 16
    assert all(r["relative_difference"] <= 1e-2 for r in doc["pairs"] if not r["dead"])


def test_calibrate_dead(tmp_path):
    import numpy as np

    from sptmbqc import mps

    b = np.array([1, 0, 1], dtype=complex).reshape(3, 1, 1) / math.sqrt(2)
    path = tmp_path / "dead.json"
    serialize.dump_tensor(mps.spt_tensor(mps.aklt_tensor().ops, b, ("x", "y", "z")), path)
    code, text = run("calibrate", path, "--no-operational")
    assert code == 0
    assert "nu_xy: DEAD" in text
    rows = list(csv.DictReader(io.StringIO("\n".join(ln for ln in text.splitlines() if not ln.startswith("#")))))
    dead = {(r["i"], r["j"]) for r in rows if r["dead"] == "1"}
    assert ("x", "y") in dead and ("x", "z") not in dead


def test_calibrate_missing_file(tmp_path):
    assert run("calibrate", tmp_path / "nope.json")[0] == 2


# ---------------------------------------------------------------- gate


def test_gate_aklt(aklt_file, tmp_path):
    prog, rep = tmp_path / "p.json", tmp_path / "r.json"
    code, text = run("gate", aklt_file, "--theta", "pi/2", "--eps", 1e-2, "--program", prog, "--json", rep)
    assert code == 0
    assert "cost N(m+1)=247" in text
    doc = json.loads(rep.read_text())
    assert doc["error"] <= 3e-2
    assert serialize.program_from_dict(json.loads(prog.read_text())).N == 247


def test_gate_zero_angle(aklt_file, tmp_path):
    rep = tmp_path / "r.json"
    assert run("gate", aklt_file, "--theta", "0", "--json", rep)[0] == 0
    assert json.loads(rep.read_text())["error"] <= 1e-12


def test_gate_cost_ratio(aklt_file, tmp_path):
    costs = []
    for eps in (1e-2, 5e-3):
        rep = tmp_path / f"r{eps}.json"
        run("gate", aklt_file, "--eps", eps, "--json", rep)
        costs.append(json.loads(rep.read_text())["cost"])
    assert costs[1] / costs[0] == pytest.approx(2, rel=0.01)


def test_gate_bad_input(aklt_file):
    assert run("gate", aklt_file, "--input", "cat")[0] == 2


def test_gate_deterministic_reports(haldane_file, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("gate", haldane_file, "--json", a)
    run("gate", haldane_file, "--json", b)
    assert a.read_text() == b.read_text()


# ---------------------------------------------------------------- closure


def test_closure_z2z2():
    code, text = run("closure", "--group", "2,2", "--cocycle", "weyl")
    assert code == 0
    assert "su(2), grid ✓ oracle ✓" in text


def test_closure_z6z6(tmp_path):
    rep = tmp_path / "c.json"
    code, text = run("closure", "--group", "6,6", "--json", rep)
    assert code == 0
    assert "p^m = 2^1: su(2)" in text and "p^m = 3^1: su(3)" in text
    doc = json.loads(rep.read_text())
    assert doc["verdict"] == "su(6)" and sorted(b["oracle_dim"] for b in doc["blocks"]) == [3, 8]


def test_closure_triple_d8():
    code, text = run("closure", "--group", "8,8", "--triple", 1, "--strategy", "paper")
    assert code == 0
    assert "su(8) grid ✓ oracle ✓" in text
    assert "rowcol 1: 28 marked" in text and "hermitian: 51 marked" in text


def test_closure_characters():
    code, text = run("closure", "--group", "2,2", "--characters", "1,0;0,1")
    assert code == 0 and "sub-closure of dimension 1" in text


def test_closure_not_mnc():
    assert run("closure", "--group", "2,2", "--cocycle", "trivial")[0] == 2


def test_closure_inconsistent_is_numerical(monkeypatch):
    from sptmbqc import lie

    monkeypatch.setattr(lie, "fill_grid", lambda g, strategy="saturate": (False, g))
    assert run("closure", "--group", "3,3")[0] == 3


# ---------------------------------------------------------------- scan


def test_scan_aklt_slope(aklt_file):
    code, text = run("scan", aklt_file, "--N", "50,100,200,400")
    assert code == 0
    slope = float(text.split("loglog slope of error vs N: ")[1].split()[0])
    assert slope == pytest.approx(-1, abs=0.15)


def test_scan_m_sweep(haldane_file, tmp_path):
    out = tmp_path / "s.csv"
    assert run("scan", haldane_file, "--N", 100, "--m", "2:30", "--csv", out)[0] == 0
    text = out.read_text()
    foot = text.splitlines()[-1]
    rate = float(foot.split("floor: ")[1].split()[0])
    ref = float(foot.split("= ")[-1].rstrip(")"))
    assert rate == pytest.approx(ref, rel=0.05)
    assert len(list(csv.DictReader(io.StringIO(text.split("#")[0])))) == 29


@pytest.mark.parametrize("n,m", [("", "0"), ("100", "5:2")])
def test_scan_empty(aklt_file, n, m):
    assert run("scan", aklt_file, "--N", n, "--m", m)[0] == 2
