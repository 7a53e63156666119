import json
import re

import pytest

from artifact.cli import RunConfig, main, parse_complex, parse_range
from artifact.errors import BadParameter
from artifact.maass import holomorphic_expansion


def run(capsys, *argv):
    with pytest.raises(SystemExit) as ex:
        main(list(argv))
    out, err = capsys.readouterr()
    return ex.value.code, out, err


def test_lattice_and_counts(capsys):
    code, out, _ = run(capsys, "lattice", "D4", "--count", "3")
    doc = json.loads(out)
    assert code == 0 and doc["signature"] == [4, 0] and doc["discriminant"]["order"] == 4
    assert doc["discriminant"]["invariants"] == [2, 2]
    assert doc["representation_numbers"]["0"] == {"0": 1, "1": 24, "2": 24, "3": 96}


def test_full_precision_floats(capsys):
    code, out, _ = run(capsys, "theta", "A1", "--tau", "0.1+1.3i")
    assert code == 0
    num = re.findall(r"-?\d\.\d+(?:e-?\d+)?", out)
    assert any(len(x.split("e")[0].replace("-", "").replace(".", "")) == 17 for x in num)
    assert json.loads(out)["weight"] == "1/2"


def test_weilrep_residuals(capsys):
    code, out, _ = run(capsys, "weilrep", "2U")
    assert code == 0 and max(json.loads(out)["residuals"].values()) < 1e-12


def test_green_kinds(capsys):
    code, out, _ = run(capsys, "green", "--kind", "kudla", "--lattice", "2U", "--m", "1", "--h2", "0.1+1.1i,0.3+1.7i")
    assert code == 0
    a = json.loads(out)
    code, out, _ = run(capsys, "green", "--kind", "kudla-lift", "--lattice", "2U", "--m", "1",
                       "--h2", "0.1+1.1i,0.3+1.7i")
    b = json.loads(out)
    assert abs(a["value"][0] - b["value"][0]) < 1e-3


def test_usage_errors(capsys):
    assert run(capsys, "lattice", "no-such-lattice")[0] == 2
    assert run(capsys, "theta", "2U", "--tau", "1j")[0] == 2
    assert run(capsys, "theta", "A1", "--tau", "not-a-number")[0] == 2
    assert run(capsys, "poincare", "A1", "--tau", "1j")[0] == 2
    assert run(capsys, "verify", "nonsense")[0] == 2


def test_table_csv_and_figure(tmp_path, capsys):
    out = tmp_path / "theta.csv"
    code, _, _ = run(capsys, "table", "theta", "--input", "D4", "--range", "0..3", "--out", str(out))
    lines = out.read_text().splitlines()
    assert code == 0 and lines[0] == "m,component,re,im,error"
    assert "1,0,24,0,0" in lines and out.with_suffix(".png").exists()
    empty = tmp_path / "empty.csv"
    code, _, _ = run(capsys, "table", "theta", "--input", "D4", "--range", "", "--out", str(empty))
    assert code == 0 and empty.read_text() == "m,component,re,im,error\n"
    assert not empty.with_suffix(".png").exists()


def test_cache_commands(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RLT_CACHE_DIR", str(tmp_path))
    run(capsys, "cache", "clear")
    _, out1, _ = run(capsys, "cache", "warm", "--lattice", "A1A1", "--bound", "4")
    _, out2, _ = run(capsys, "cache", "warm", "--lattice", "A1A1", "--bound", "4")
    assert json.loads(out1)["entries"] == json.loads(out2)["entries"] > 0
    (tmp_path / "enum_cache.json").write_text("{ broken")
    code, _, err = run(capsys, "cache", "stat")
    assert code == 0 and "corrupted" in err
    _, out, _ = run(capsys, "cache", "clear")
    assert json.loads(out)["entries"] == 0


def test_config_round_trip(tmp_path, capsys):
    cfg = RunConfig(C=50, seed=3)
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg
    with pytest.raises(BadParameter):
        RunConfig.from_json({"C": 10, "colour": "red"})
    with pytest.raises(BadParameter):
        RunConfig(C=0)
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"no_such_key": 1}))
    assert run(capsys, "--config", str(p), "lattice", "A1")[0] == 2


def test_parsers():
    assert parse_range("1/4..9/4") == [0.25, 1.25, 2.25]
    assert parse_range("") == [] and parse_range("1,3") == [1, 3]
    assert parse_complex("0.5+2i") == 0.5 + 2j
    with pytest.raises(BadParameter):
        parse_complex("x")


def test_verify_writes_report_and_figure(tmp_path, capsys):
    out = tmp_path / "weilrep.json"
    code, _, err = run(capsys, "verify", "weilrep", "--out", str(out))
    doc = json.loads(out.read_text())
    assert code == 0 and doc["pass"] and len(doc["checks"]) == 4
    assert set(doc["checks"][0]) >= {"test", "target", "computed", "tolerance", "pass"}
    assert out.with_suffix(".png").exists() and err.count("PASS") == 4


def test_mock_and_lsharp_tables(tmp_path, capsys):
    shadow = tmp_path / "f0.json"
    shadow.write_text(holomorphic_expansion(0, False, {0: [1.0]}, 1).dumps())
    code, out, _ = run(capsys, "mock", "--shadow", str(shadow), "--lattice", "2U", "--m", "0..2")
    assert code == 0 and out.splitlines()[0] == "m,component,re,im,error" and len(out.splitlines()) == 4
    code, out, _ = run(capsys, "--C", "10", "lsharp", "--input", "theta:A1A1", "--m", "0..1", "--v", "1",
                       "--declare-empty-cusp-space")
    assert code == 0 and out.splitlines()[0] == "m,component,v,re,im,error"
