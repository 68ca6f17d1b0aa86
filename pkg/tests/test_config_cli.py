import json
import math

import pytest

from nilskew.cli import main, parse_observable
from nilskew.config import (load_config, parse_alpha, parse_fn, parse_system,
                            write_csv, write_json)
from nilskew.errors import ConfigError
from nilskew.rigidity import CharacterObservable, ConstantObservable, ThetaObservable

GOLDEN = "surd:(-1+1*sqrt(5))/2"


def system_obj(**over):
    obj = {"alpha": GOLDEN,
           "phi": {"trig": {"1": [0.5, 0], "-1": [0.5, 0]}},
           "eta": {"trig": {"1": [0, -0.5], "-1": [0, 0.5]}},
           "psi": {"trig": {"2": [0, -0.5], "-2": [0, 0.5]}},
           "depth": 14}
    obj.update(over)
    return obj


# -- grammar ---------------------------------------------------------------


def test_parse_alpha_rational():
    a = parse_alpha("rational:3/7")
    assert a.is_rational and a.rational_pq == (3, 7)
    # rotation numbers live on the circle, so negatives reduce mod 1
    assert parse_alpha("rational: -2/5 ").as_float == 0.6


def test_parse_alpha_surd():
    a = parse_alpha(GOLDEN)
    assert abs(a.as_float - (math.sqrt(5) - 1) / 2) < 1e-15
    b = parse_alpha("surd:(1-1*sqrt(2))/1")
    assert abs(b.as_float - (2 - math.sqrt(2))) < 1e-15  # reduced mod 1


def test_parse_alpha_stream():
    a = parse_alpha("cf:[2,5,125] repeat:[2]")
    assert a.quotients(5) == [2, 5, 125, 2, 2]
    b = parse_alpha("cf:[1,1,1,1,1,1]")
    assert b.denominators(5) == [1, 1, 2, 3, 5, 8]


@pytest.mark.parametrize("bad", [
    "golden", "rational:1/0x", "surd:(1+sqrt(5))/2", "cf:[1,a]", "cf:2,3",
    "rational:3|7", 5, None,
])
def test_parse_alpha_rejects(bad):
    with pytest.raises(ConfigError):
        parse_alpha(bad)


def test_parse_fn_roundtrip():
    fn = parse_fn({"trig": {"2": [0.25, 0], "-2": [0.25, 0]}, "mean": 1.5})
    assert fn.coeff(2) == 0.25 + 0j
    assert fn.mean == 1.5 + 0j
    assert fn.real_valued


def test_parse_fn_decay_class():
    spec = {"trig": {"4": [0.5, 0], "-4": [0.5, 0]},
            "class": {"r": 2.02, "C": 1.0}}
    with pytest.raises(ConfigError):
        parse_fn(spec)  # 0.5 > 1.0 * 4^-2.02
    ok = dict(spec)
    ok["class"] = {"r": 2.02, "C": 9.0}
    assert parse_fn(ok).decay == (2.02, 9.0)


@pytest.mark.parametrize("bad", [
    ["not", "a", "dict"],
    {"trig": {"x": [1, 0]}},
    {"trig": {"1": "huh"}},
    {"trig": {"0": [1, 0]}},
    {"mean": [1, 2, 3]},
    {"weird": 1},
    {"class": {"r": 2.0}},
])
def test_parse_fn_rejects(bad):
    with pytest.raises(ConfigError):
        parse_fn(bad)


def test_parse_system():
    sys_ = parse_system(system_obj(B=3.0, theta=0.002, K=8))
    assert sys_.B == 3.0
    assert sys_.theta == 0.002
    assert not sys_.alpha.is_rational


def test_parse_system_rejects():
    with pytest.raises(ConfigError):
        parse_system(system_obj(K=1))  # psi carries frequency 2
    with pytest.raises(ConfigError):
        parse_system({"alpha": GOLDEN})
    with pytest.raises(ConfigError):
        parse_system(system_obj(extra=1))
    bad_mean = system_obj()
    bad_mean["phi"] = {"trig": {"1": [0.5, 0], "-1": [0.5, 0]}, "mean": 0.3}
    with pytest.raises(ConfigError):
        parse_system(bad_mean)


def test_parse_observable_kinds():
    assert isinstance(parse_observable(None), CharacterObservable)
    assert isinstance(parse_observable({"kind": "constant", "value": 2}),
                      ConstantObservable)
    th = parse_observable({"kind": "theta", "m": 2, "r": "1/2",
                           "delta": [1, 1]})
    assert isinstance(th, ThetaObservable)
    with pytest.raises(ConfigError):
        parse_observable({"kind": "mystery"})
    with pytest.raises(ConfigError):
        parse_observable({"kind": "theta", "delta": [2, 0]})


# -- artifact writers --------------------------------------------------------


def test_write_csv_atomic(tmp_path):
    out = tmp_path / "t.csv"
    write_csv(out, ("a", "b"), [(1, 0.5), (2, 0.25)])
    text = out.read_text()
    assert text == "a,b\n1,0.5\n2,0.25\n"
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]


def test_write_json_stable(tmp_path):
    out = tmp_path / "t.json"
    write_json(out, {"b": 1, "a": [1, 2]})
    assert out.read_text() == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


def test_load_config_rejects_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(p)
    q = tmp_path / "list.json"
    q.write_text("[1,2]")
    with pytest.raises(ConfigError):
        load_config(q)


# -- CLI end to end -----------------------------------------------------------


def write_cfg(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def test_cli_cf_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": GOLDEN, "depth": 12})
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["cf", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["cf", "--config", cfg, "--out", str(out2)]) == 0
    b1, b2 = out1.read_bytes(), out2.read_bytes()
    assert b1 == b2
    lines = b1.decode().splitlines()
    assert lines[0] == "k,a_k,p_k,q_k,dist"
    qs = [int(row.split(",")[3]) for row in lines[1:]]
    assert qs[:6] == [1, 2, 3, 5, 8, 13]


def test_cli_cf_json_format(tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": "rational:3/7", "format": "json"})
    out = tmp_path / "cf.json"
    assert main(["cf", "--config", cfg, "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["header"] == ["k", "a_k", "p_k", "q_k", "dist"]
    assert data["rows"][-1][3] == 7 and data["rows"][-1][4] == 0.0


def test_cli_flag_overrides_file_format(tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": "rational:1/2", "format": "json"})
    out = tmp_path / "o.csv"
    assert main(["cf", "--config", cfg, "--out", str(out),
                 "--format", "csv"]) == 0
    assert out.read_text().startswith("k,a_k")


def test_cli_stdout_default(capsys, tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": "rational:1/3"})
    assert main(["cf", "--config", cfg]) == 0
    outerr = capsys.readouterr()
    assert outerr.out.startswith("k,a_k,p_k,q_k,dist\n")


def test_cli_orbit(tmp_path):
    cfg = write_cfg(tmp_path, {"system": system_obj(), "n": 8,
                               "point": [0.1, 0.2, 0.3, 0.0]})
    out = tmp_path / "orbit.csv"
    assert main(["orbit", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "j,t,x,y,z"
    assert len(lines) == 9
    assert float(lines[1].split(",")[1]) == 0.1


def test_cli_correlate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, {"system": system_obj(), "N": 2000,
                               "observable": {"kind": "character", "m0": 1}})
    out1, out2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
    assert main(["correlate", "--config", cfg, "--threads", "1",
                 "--out", str(out1)]) == 0
    assert main(["correlate", "--config", cfg, "--threads", "1",
                 "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    lines = out1.read_text().splitlines()
    assert lines[0] == "N_checkpoint,re,im,abs"
    assert [int(r.split(",")[0]) for r in lines[1:]] == [10, 100, 1000, 2000]


def test_cli_rigidity_decay(tmp_path):
    sysobj = system_obj()
    sysobj["eta"] = {"trig": {"1": [0.5, 0], "-1": [0.5, 0]}}
    cfg = write_cfg(tmp_path, {"system": sysobj, "m_range": [2, 6]})
    out = tmp_path / "decay.csv"
    assert main(["rigidity-decay", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("m,q_m,v_m,s_m,n,")
    assert len(lines) == 6


def test_cli_complexity(tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": GOLDEN, "k_range": [8, 12],
                               "tau": 2.0, "epsilon": 1, "L": 2})
    out = tmp_path / "trend.csv"
    assert main(["complexity", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,q_k,n_k,grid_count,s_n_upper,ratio,tau,B"
    ratios = [float(r.split(",")[5]) for r in lines[1:]]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))


def test_cli_oracle_check(tmp_path, capsys):
    out = tmp_path / "oracle.csv"
    assert main(["oracle-check", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "PASS" in printed and "FAIL" not in printed
    lines = out.read_text().splitlines()
    assert lines[0] == "name,status,detail"
    assert all(",PASS," in line for line in lines[1:])


def test_cli_exit_codes(tmp_path):
    # 2: bad config content
    cfg = write_cfg(tmp_path, {"n": 3})
    assert main(["orbit", "--config", cfg]) == 2
    # 2: unknown subcommand (argparse usage error)
    assert main(["frobnicate"]) == 2
    # 3: numeric guard (finite stream exhausted before requested depth)
    cfg3 = write_cfg(tmp_path, {"alpha": "cf:[1,2,3]", "depth": 25})
    assert main(["cf", "--config", cfg3]) == 3
    # 4: missing config file
    assert main(["cf", "--config", str(tmp_path / "nope.json")]) == 4
    # 4: unwritable output path
    cfg4 = write_cfg(tmp_path, {"alpha": "rational:1/2"})
    assert main(["cf", "--config", cfg4,
                 "--out", str(tmp_path / "no" / "dir" / "x.csv")]) == 4


def test_cli_bad_threads(tmp_path):
    cfg = write_cfg(tmp_path, {"alpha": "rational:1/2"})
    assert main(["cf", "--config", cfg, "--threads", "0"]) == 2
