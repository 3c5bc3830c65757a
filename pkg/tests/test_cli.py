import json

import numpy as np
import pytest

from oscbnf.cli import ConfigError, compile_expression, main, run, validate
from oscbnf.io import canonical_hash, csv_text, format_value, read_csv


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


def _run(tmp_path, sub, cfg, out="out"):
    code = main([sub, "--config", _write(tmp_path, cfg), "--out", str(tmp_path / out)])
    manifest = json.loads((tmp_path / out / "manifest.json").read_text()) if code in (0, 1) else None
    return code, manifest


def test_bnf_toric_csv(tmp_path):
    code, man = _run(tmp_path, "bnf", {"h2": "H01 - 0.5*H0", "lambdas": [1], "samples": 21})
    assert code == 0 and man["pass"]
    header, rows = read_csv(tmp_path / "out" / "bnf.csv")
    assert header == ["lambda", "s", "F2", "t"]
    s = np.array([float(r[1]) for r in rows])
    F = np.array([float(r[2]) for r in rows])
    assert np.allclose(F, s - 0.5, atol=1e-12)
    assert set(man["outputs"][0]["columns"]) == set(header)
    assert man["inputs_sha256"] == canonical_hash(validate("bnf", {"h2": "H01 - 0.5*H0", "lambdas": [1],
                                                                   "samples": 21}))


def test_rerun_is_byte_identical(tmp_path):
    cfg = {"h2": "X3 + 0.3*X1", "n": [8, 9]}
    _run(tmp_path, "spectrum", cfg, "a")
    _run(tmp_path, "spectrum", cfg, "b")
    a = (tmp_path / "a" / "spectrum.csv").read_bytes()
    assert a == (tmp_path / "b" / "spectrum.csv").read_bytes()
    assert b"\r\n" in a


def test_szego_manifest(tmp_path):
    code, man = _run(tmp_path, "szego", {"h2": "X3 + 0.3*X1", "n": [50, 100, 200]})
    assert code == 0
    ks = {a["name"]: a for a in man["assertions"]}
    assert ks["ks[n=200]"]["value"] < 0.05 and ks["ks[n=200]"]["pass"]
    assert man["versions"]["kernels"] in ("compiled", "python")


def test_failed_assertion_exit_code(tmp_path):
    code, man = _run(tmp_path, "szego", {"h2": "X3 + 0.3*X1", "n": [50],
                                         "tolerances": {"ks": 1e-9}})
    assert code == 1 and not man["pass"]


@pytest.mark.parametrize("sub,cfg", [
    ("invert", {"h2": "X3 + 0.3*X1", "n": 100}),
    ("recover-g", {"G2": "s^2 + s*t", "hbar": 0.01, "u0": 1.0}),
    ("sphere-r", {"M": 20, "f": "x + z^3", "L": 5}),
    ("sphere-mean", {"f": "x*y + z", "r": [0.3, 1.2], "L": 4, "points": 8}),
    ("landau", {"k": [1, 2], "J": 3}),
    ("verify-magnetic", {"phi0": [0.5]}),
])
def test_subcommands_pass(tmp_path, sub, cfg):
    code, man = _run(tmp_path, sub, cfg)
    assert code == 0, man["assertions"]
    for out in man["outputs"]:
        assert (tmp_path / "out" / out["file"]).exists()


def test_landau_rationals(tmp_path):
    _run(tmp_path, "landau", {"k": [2], "J": 1})
    _, rows = read_csv(tmp_path / "out" / "landau.csv")
    assert rows[0][2] == "1" and rows[1][2] == "5"


def test_malformed_literal_names_token(tmp_path, capsys):
    code, _ = _run(tmp_path, "bnf", {"h2": "X3 + $", "lambdas": [1]})
    assert code == 2
    assert "'$'" in capsys.readouterr().err


def test_config_diagnostics(tmp_path, capsys):
    p = _write(tmp_path, '{"h2": "X3",\n  "lambdas": [1,]\n}')
    assert main(["bnf", "--config", p]) == 2
    assert "line 2" in capsys.readouterr().err
    assert _run(tmp_path, "bnf", {"h2": "X3", "lambdas": [1], "extra": 1})[0] == 2
    assert "'extra'" in capsys.readouterr().err
    assert _run(tmp_path, "bnf", {"h2": "X3", "lambdas": "1"})[0] == 2
    assert _run(tmp_path, "bnf", {"h2": "X3"})[0] == 2
    assert _run(tmp_path, "bnf", {"h2": "x1", "lambdas": [1]})[0] == 2
    assert _run(tmp_path, "bnf", {"h2": "X1^2 - X3^2/2", "lambdas": [1]})[0] == 2
    assert "certification" in capsys.readouterr().err
    assert main(["nope", "--config", p]) == 2
    assert main(["bnf", "--config", str(tmp_path / "missing.json")]) == 2


def test_validate_tolerance_keys():
    with pytest.raises(ConfigError, match="tolerances.bogus"):
        validate("szego", {"h2": "X3", "n": [5], "tolerances": {"bogus": 1}})
    with pytest.raises(ConfigError, match="subcommand"):
        validate("szego", {"h2": "X3", "n": [5], "subcommand": "bnf"})


def test_expression_compiler():
    f = compile_expression("s^2 + 2*s*t - sqrt(t)", ("s", "t"), "G2")
    assert f(np.array([1.0]), np.array([4.0]))[0] == pytest.approx(1 + 8 - 2)
    assert compile_expression("3", ("s", "t"), "G2")(np.zeros(3), np.zeros(3)).shape == (3,)
    for bad in ("__import__('os')", "s.real", "q + 1", "s +"):
        with pytest.raises(ConfigError):
            compile_expression(bad, ("s", "t"), "G2")


def test_value_formatting():
    from fractions import Fraction
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(1 / 3)) == 1 / 3
    assert format_value(Fraction(3, 4)) == "3/4"
    assert format_value(True) == "true"
    assert csv_text(["a", "b"], [["x,y", 1]]) == 'a,b\r\n"x,y",1\r\n'


def test_run_api_directly(tmp_path):
    man = run("landau", {"k": [1], "J": 0}, tmp_path)
    assert man["pass"] and man["assertions"] == []
