import csv
import json

import pytest

from fermieq import cli
from fermieq.config import RunSpec, from_mapping, load
from fermieq.lattice import ConfigError


def body(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def rows(path):
    return list(csv.DictReader(body(path)))


def write_toml(tmp_path, text):
    p = tmp_path / "run.toml"
    p.write_text(text)
    return p


def test_unknown_key_is_error(tmp_path):
    p = write_toml(tmp_path, "L = 9\nbogus = 1\n")
    with pytest.raises(ConfigError):
        load(p)
    assert cli.main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_bad_values(tmp_path):
    for text in ("L = 8\n", "engine = 'dense'\n", "initial_state = 'random_fock(1)'\n",
                 "L = 'nine'\n", "[sweep]\nkind = 'nope'\n"):
        p = write_toml(tmp_path, text)
        mode = "sweep" if "sweep" in text else "simulate"
        assert cli.main([mode, "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.toml")]) == 2


def test_spectral_requires_tau():
    with pytest.raises(ConfigError):
        from_mapping({"mode": "spectral"}).validate()


def test_simulate_full_band(tmp_path):
    p = write_toml(tmp_path, "L = 9\nl = 3\nrho_bar = 1.0\nt_max = 3.0\ndt = 0.5\n")
    assert cli.main(["simulate", "--config", str(p), "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "timeseries.csv")
    assert len(r) == 7 * 3
    assert all(float(x["delta_rho_sq"]) == 0.0 for x in r)
    header = (tmp_path / "timeseries.csv").read_text().splitlines()[1]
    assert header.startswith("# spec:") and '"rho_bar": 1.0' in header


def test_simulate_deterministic(tmp_path):
    text = "L = 9\nl = 3\ninitial_state = 'random_slater'\nt_max = 2.0\ntau = 20.0\n"
    p = write_toml(tmp_path, text)
    for out in ("a", "b"):
        assert cli.main(["simulate", "--config", str(p), "--out", str(tmp_path / out),
                         "--seed", "5"]) == 0
    for name in ("timeseries.csv", "fraction.csv"):
        assert body(tmp_path / "a" / name) == body(tmp_path / "b" / name)
    assert rows(tmp_path / "a" / "fraction.csv")[0]["surrogate_flag"] == "true"


def test_capacity_exit_codes(tmp_path):
    ok = write_toml(tmp_path, "L = 15\nl = 5\nrho_bar = 0.4666666666666667\nt_max = 1.0\n")
    assert cli.main(["simulate", "--config", str(ok), "--engine", "fock",
                     "--out", str(tmp_path / "ok")]) == 0
    assert (tmp_path / "ok" / "timeseries.csv").exists()
    big = write_toml(tmp_path, "L = 31\nl = 11\nrho_bar = 0.4838709677419355\n")
    assert cli.main(["simulate", "--config", str(big), "--engine", "fock",
                     "--out", str(tmp_path / "big")]) == 3


def test_spectral_mode(tmp_path):
    p = write_toml(tmp_path, "L = 10001\nl = 2001\ntau = 30003.0\n[sweep]\nm = [1, 2, 5]\n")
    assert cli.main(["spectral", "--config", str(p), "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "spectral.csv")
    assert [x["m"] for x in r] == ["1", "2", "5"]
    assert all(float(x["margin"]) > 0 and x["hypothesis_ok"] == "true" for x in r)


def test_verify(tmp_path):
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["violations"] == 0
    assert all({"name", "lhs", "rhs", "margin", "hypothesis_ok", "parameters"} <= set(r)
               for r in rep["reports"])


def test_sweep_lemma6_and_resume(tmp_path):
    p = write_toml(tmp_path, "[sweep]\nkind = 'lemma6'\nL = [10001]\ntau_ratio = [2.5, 5.0, 10.0]\n"
                             "m = [1, 2, 5, 100, 3333]\n")
    out = tmp_path / "s"
    assert cli.main(["sweep", "--config", str(p), "--out", str(out), "--threads", "2"]) == 0
    path = out / "sweep_lemma6.csv"
    r = rows(path)
    assert len(r) == 15 and all(x["status"] == "ok" and float(x["margin"]) >= 0 for x in r)
    before = body(path)
    # drop two rows and resume: only those are recomputed, order and values unchanged
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    assert cli.main(["sweep", "--config", str(p), "--out", str(out)]) == 0
    assert body(path) == before


def test_sweep_empty_grid(tmp_path):
    p = write_toml(tmp_path, "[sweep]\nkind = 'lemma6'\nL = []\n")
    assert cli.main(["sweep", "--config", str(p), "--out", str(tmp_path)]) == 0
    assert body(tmp_path / "sweep_lemma6.csv") == [",".join(cli.SPECTRAL_COLUMNS + ["status"])]


def test_sweep_records_failures(tmp_path):
    # no odd box side gives n = 4 on L = 9; that row fails, the L = 101 row still runs
    p = write_toml(tmp_path, "[sweep]\nkind = 'chain'\nL = [9, 101]\nn = [4]\ntau_ratio = [2.5]\n")
    assert cli.main(["sweep", "--config", str(p), "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "sweep_chain.csv")
    assert r[0]["status"].startswith("error") and r[1]["status"] == "ok"


def test_sweep_fraction(tmp_path):
    p = write_toml(tmp_path, "[sweep]\nkind = 'fraction'\nL = [31]\nn = [3]\n"
                             "tau_ratio = [2.5, 5.0]\n")
    assert cli.main(["sweep", "--config", str(p), "--out", str(tmp_path), "--dt", "0.05"]) == 0
    r = rows(tmp_path / "sweep_fraction.csv")
    assert len(r) == 2 and all(x["status"] == "ok" for x in r)


def test_runspec_defaults_roundtrip():
    spec = RunSpec()
    assert spec.validate() is spec
    assert from_mapping(spec.to_dict()).to_dict() == spec.to_dict()
