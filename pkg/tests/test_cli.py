import json

import pytest

from kernelquant.cli import main
from kernelquant.config import ConfigError, load_config, parse_config
from kernelquant.report import Record, Report


def test_parse_defaults_and_overrides():
    cfg = parse_config({}, seed=5, tol_scale=2.0)
    assert cfg.kernel == "bidisc" and cfg.seed == 5
    assert cfg.tol("hermitian", 1e-12) == pytest.approx(2e-12)
    cfg = parse_config({"kernel": {"name": "moment", "measure": {"kind": "discrete", "atoms": [-1, 1]}},
                        "flow": {"times": [0.2]}})
    assert cfg.kernel == "moment:discrete" and cfg.times == [0.2]


@pytest.mark.parametrize("bad", [
    {"kernel": "nope"},
    {"tolerances": {"hermitian": -1}},
    {"points": {"grid": 3}},
    {"extra": 1},
    {"kernel": {"name": "moment", "measure": {"kind": "discrete"}}},
])
def test_parse_errors(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_load_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("kernel: moment:gaussian\nseed: 3\npoints:\n  random: {count: 4}\n")
    cfg = load_config(p)
    assert cfg.kernel == "moment:gaussian" and cfg.points == {"random": {"count": 4}}
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_report_rules():
    rep = Report("x")
    rep.add(Record("a", "t", 1e-3, 1e-6))
    rep.add(Record("b", "t", 1.0, 1e-6, kind="discrepancy"))
    with pytest.raises(ValueError):
        rep.add(Record("a", "t", 0.0, 1.0))
    assert not rep.passed
    rep.records[0] = Record("a", "t", 0.0, 1e-6)
    assert rep.passed
    assert rep.payload()["summary"]["flagged_discrepancies"] == 1


def test_example_moment_default(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["example", "moment", "--report", str(out), "--csv", str(tmp_path / "r.csv")]) == 0
    data = json.loads(out.read_text())
    assert data["pass"]
    assert all(r["residual"] < 1e-9 for r in data["records"])
    assert data["environment"]["seed"] == 0
    assert "calibration" in data["conventions"]
    assert (tmp_path / "r.csv").read_text().startswith("check,kind,tag")


def test_corrupted_check_fails(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("corrupt: 1.0e-3\n")
    out = tmp_path / "r.json"
    assert main(["check", "--config", str(cfg), "--report", str(out), "-q"]) == 1
    recs = {r["check"]: r for r in json.loads(out.read_text())["records"]}
    assert not recs["check.bidisc.hermitian"]["pass"]


def test_geometry_gaussian_records_convention(tmp_path):
    cfg = tmp_path / "g.yaml"
    cfg.write_text("kernel: moment:gaussian\n")
    out = tmp_path / "r.json"
    assert main(["geometry", "--config", str(cfg), "--report", str(out), "-q"]) == 0
    data = json.loads(out.read_text())
    ham = next(r for r in data["records"] if r["check"].endswith(".hamiltonian"))
    assert ham["residual"] < 1e-6
    assert data["conventions"]["form_factor"] == 1.0


def test_config_error_exit(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("kernel: unknown\n")
    assert main(["check", "--config", str(cfg)]) == 2


def test_deterministic_payload(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["quantize", "--seed", "7", "--report", str(a), "-q"])
    main(["quantize", "--seed", "7", "--report", str(b), "-q"])
    pa, pb = json.loads(a.read_text()), json.loads(b.read_text())
    pa.pop("timestamp"), pb.pop("timestamp")
    assert pa == pb


def test_tabulated_check(tmp_path, bidisc_k, rng):
    from kernelquant.examples import bidisc
    from kernelquant.kernel_core import save_tabulated_kernel

    path = tmp_path / "k.json"
    save_tabulated_kernel(path, bidisc_k, bidisc.random_points(5, rng))
    cfg = tmp_path / "t.yaml"
    cfg.write_text(f"kernel:\n  name: tabulated\n  params: {{path: '{path}'}}\n")
    assert main(["check", "--config", str(cfg), "-q"]) == 0
    assert main(["geometry", "--config", str(cfg), "-q"]) == 2
