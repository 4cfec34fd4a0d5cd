import json
import os
import re

import numpy as np
import pytest

import fluctsel as fs
from fluctsel import cli_io


GOOD_INI = """\
# comment line
[model]
kind = oscillating_optimum
r = 1.0
g = 1.0          ; inline comment
c = 0.5
b = 6.283185307179586

[grid]
x_lo = -3.0
x_hi = 3.0
nx = 200

[solver]
eps = 0.1

[experiment]
tag = moments
nt = 512
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_parse_ini_full(tmp_path):
    cfg = fs.parse_config(_write(tmp_path, GOOD_INI))
    assert cfg.model == {"kind": "oscillating_optimum", "r": 1.0, "g": 1.0,
                         "c": 0.5, "b": 6.283185307179586}
    assert cfg.grid == {"x_lo": -3.0, "x_hi": 3.0, "nx": 200}
    assert cfg.solver == {"eps": 0.1}
    assert cfg.experiment == "moments"
    assert cfg.extra == {"nt": 512}


@pytest.mark.parametrize("text,lineno,fragment", [
    ("[nosuch]\n", 1, "unknown section"),
    ("[model]\nbad line\n", 2, "expected 'key = value'"),
    ("r = 1.0\n", 1, "outside of any section"),
    ("[model]\nr = 1.0\nr = 2.0\n", 3, "duplicate key"),
    ("[model]\nwhatever = 3\n", 2, "unknown key"),
    ("[grid]\nnx = many\n", 2, "invalid literal"),
    ("[grid]\nnx = 4\n", 2, "nx must be >= 16"),
    ("[model]\nkind = quartic\n", 2, "unknown model kind"),
    ("[experiment]\ntag = frobnicate\n", 2, "unknown experiment tag"),
    ("[model\nr = 1.0\n", 1, "unterminated section"),
])
def test_parse_ini_errors_carry_line_numbers(tmp_path, text, lineno, fragment):
    path = _write(tmp_path, text)
    with pytest.raises(fs.ConfigError) as err:
        fs.parse_config(path)
    assert f"{path}:{lineno}" in str(err.value)
    assert fragment in str(err.value)


def test_parse_ini_cross_constraints(tmp_path):
    path = _write(tmp_path, "[solver]\neps = 0.1\nsigma = 0.01\n")
    with pytest.raises(fs.ConfigError, match="either eps or sigma"):
        fs.parse_config(path)
    path = _write(tmp_path, "[grid]\nx_lo = 2.0\nx_hi = -2.0\n")
    with pytest.raises(fs.ConfigError, match="x_hi must exceed x_lo"):
        fs.parse_config(path)


def test_parse_json(tmp_path):
    data = {"model": {"kind": "oscillating_pressure", "g_mean": 2.0,
                      "g_amp": 1.8},
            "experiment": {"tag": "example2", "radii": [1.0, 2.0]}}
    cfg = fs.parse_config(_write(tmp_path, json.dumps(data), "run.json"))
    assert cfg.model["kind"] == "oscillating_pressure"
    assert cfg.experiment == "example2"
    assert cfg.extra["radii"] == [1.0, 2.0]


def test_parse_json_errors(tmp_path):
    path = _write(tmp_path, '{\n  "model": {\n', "bad.json")
    with pytest.raises(fs.ConfigError, match=re.escape(f"{path}:")):
        fs.parse_config(path)
    path = _write(tmp_path, '{"weird": {}}', "bad2.json")
    with pytest.raises(fs.ConfigError, match="unknown section"):
        fs.parse_config(path)
    path = _write(tmp_path, '{"model": 5}', "bad3.json")
    with pytest.raises(fs.ConfigError, match="must be an object"):
        fs.parse_config(path)
    path = _write(tmp_path, '{"grid": {"nx": 40.5}}', "bad4.json")
    with pytest.raises(fs.ConfigError, match="not an integer"):
        fs.parse_config(path)


def test_overrides():
    cfg = fs.RunConfig()
    cli_io.apply_override(cfg, "model.r=2.5")
    cli_io.apply_override(cfg, "experiment.tag=moments")
    cli_io.apply_override(cfg, "experiment.radii=1.0, 2.0")
    assert cfg.model["r"] == 2.5
    assert cfg.experiment == "moments"
    assert cfg.extra["radii"] == [1.0, 2.0]
    with pytest.raises(fs.ConfigError, match="unknown key"):
        cli_io.apply_override(cfg, "model.zeta=1")
    with pytest.raises(fs.ConfigError, match="section.key=value"):
        cli_io.apply_override(cfg, "just-a-string")
    with pytest.raises(fs.ConfigError, match="section.key=value"):
        cli_io.apply_override(cfg, "noequals")
    # overrides re-check cross constraints against the merged config
    cfg2 = fs.RunConfig(solver={"eps": 0.1})
    with pytest.raises(fs.ConfigError, match="either eps or sigma"):
        cli_io.apply_override(cfg2, "solver.sigma=0.01")


def test_resolve_config_defaults():
    cfg = cli_io.resolve_config(fs.RunConfig(experiment="example1"))
    assert cfg.model["kind"] == "oscillating_optimum"
    assert cfg.grid["nx"] == 800
    assert cfg.solver["eps"] == 0.05
    # user sigma displaces the default eps
    cfg = cli_io.resolve_config(fs.RunConfig(experiment="example1",
                                             solver={"sigma": 0.01}))
    assert "eps" not in cfg.solver and cfg.solver["sigma"] == 0.01
    # a user kind replaces the default model block wholesale
    cfg = cli_io.resolve_config(fs.RunConfig(
        experiment="example1", model={"kind": "oscillating_pressure"}))
    assert cfg.model == {"kind": "oscillating_pressure"}
    with pytest.raises(fs.ConfigError, match="unknown experiment tag"):
        cli_io.resolve_config(fs.RunConfig(experiment="bogus"))


def test_build_model_kinds(tmp_path):
    model = cli_io.build_model({"kind": "oscillating_optimum", "r": 2.0}, {})
    assert model.analytic_info["params"]["r"] == 2.0
    model = cli_io.build_model({"kind": "oscillating_pressure", "g_mean": 3.0,
                                "g_amp": 1.0}, {})
    assert model.analytic_info["params"]["g_bar"] == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(fs.ConfigError, match="needs a 'kind'"):
        cli_io.build_model({}, {})
    with pytest.raises(fs.ConfigError, match="needs a 'path'"):
        cli_io.build_model({"kind": "tabulated"}, {})
    with pytest.raises(fs.ConfigError, match="x_lo/x_hi"):
        cli_io.build_model({"kind": "tabulated", "path": "x"}, {})
    table = tmp_path / "tab.txt"
    table.write_text("1.0 3 2\n0 1 0\n0 2 0\n", encoding="utf-8")
    model = cli_io.build_model({"kind": "tabulated", "path": str(table)},
                               {"x_lo": -1.0, "x_hi": 1.0})
    assert model.kind == "tabulated"
    assert float(model.rate(0.0, np.array([0.0]))[0]) == pytest.approx(1.0)


def test_build_grid_records_resolved_dt():
    cfg = fs.RunConfig(grid={"x_lo": -2.0, "x_hi": 2.0, "nx": 100},
                       solver={"eps": 0.1, "steps_per_period": 200})
    grid = cli_io.build_grid(cfg, period=1.0)
    assert grid.dt == pytest.approx(1.0 / 200)
    assert cfg.grid["dt"] == pytest.approx(1.0 / 200)
    assert grid.sigma == pytest.approx(0.01)


FAST_SWEEP = ["experiment.radii=1.0 1.4", "experiment.points_per_unit=40",
              "solver.steps_per_period=512", "solver.eigen_tol=1e-8",
              "solver.eps=0.3"]


def _fast_sweep_config():
    cfg = fs.RunConfig(experiment="floquet-sweep")
    for text in FAST_SWEEP:
        cli_io.apply_override(cfg, text)
    return cfg


def test_run_experiment_roundtrip_and_determinism(tmp_path):
    bundle1 = fs.run_experiment(_fast_sweep_config())
    cfg2 = cli_io.config_from_manifest(bundle1.manifest)
    bundle2 = fs.run_experiment(cfg2)
    assert bundle2.summary == bundle1.summary
    assert bundle2.manifest["config"] == bundle1.manifest["config"]

    dir1, dir2 = tmp_path / "a", tmp_path / "b"
    fs.emit_bundle(bundle1, dir1)
    fs.emit_bundle(bundle2, dir2)
    for name in ("summary.json", "eigenreport.csv"):
        assert (dir1 / name).read_bytes() == (dir2 / name).read_bytes()
    man1 = json.loads((dir1 / "manifest.json").read_text())
    man2 = json.loads((dir2 / "manifest.json").read_text())
    man1.pop("timing"), man2.pop("timing")
    assert man1 == man2


def test_emitted_files_and_format(tmp_path):
    bundle = fs.run_experiment(_fast_sweep_config())
    written = fs.emit_bundle(bundle, tmp_path / "out")
    names = sorted(os.path.basename(p) for p in written)
    assert names == ["eigenreport.csv", "manifest.json", "summary.json"]
    lines = (tmp_path / "out" / "eigenreport.csv").read_text().splitlines()
    assert lines[0] == "R,sigma,lambda,identity_residual,iterations"
    cell = re.compile(r"^-?\d\.\d{12}e[+-]\d{2,3}$")
    for line in lines[1:]:
        for token in line.split(","):
            assert cell.match(token), token
    assert len(lines) == 3


def test_emit_empty_bundle_writes_manifest_only(tmp_path):
    bundle = fs.ResultBundle(manifest={"version": fs.__version__}, tables={},
                             summary={})
    written = fs.emit_bundle(bundle, tmp_path / "empty")
    assert [os.path.basename(p) for p in written] == ["manifest.json"]


def test_main_success(tmp_path, capsys):
    out = tmp_path / "run"
    argv = ["floquet-sweep", "--out", str(out)]
    for text in FAST_SWEEP:
        argv += ["--override", text]
    assert cli_io.main(argv) == 0
    listed = capsys.readouterr().out.splitlines()
    assert str(out / "manifest.json") in listed
    assert (out / "eigenreport.csv").exists()


def test_main_uses_config_file(tmp_path, capsys):
    ini = "\n".join(["[experiment]",
                     "radii = 1.0 1.4",
                     "points_per_unit = 40",
                     "[solver]",
                     "steps_per_period = 512",
                     "eigen_tol = 1e-8",
                     "eps = 0.3",
                     ""])
    path = _write(tmp_path, ini)
    out = tmp_path / "run2"
    assert cli_io.main(["floquet-sweep", "--config", path,
                        "--out", str(out)]) == 0
    capsys.readouterr()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["experiment"] == "floquet-sweep"
    assert manifest["config"]["extra"]["points_per_unit"] == 40


def test_main_config_error(tmp_path, capsys):
    assert cli_io.main(["moments", "--override", "model.nope=1"]) == 2
    assert "config error" in capsys.readouterr().err
    path = _write(tmp_path, "[grid]\nnx = 4\n")
    assert cli_io.main(["moments", "--config", path]) == 2
    assert "nx must be >= 16" in capsys.readouterr().err


def test_main_numerical_error(tmp_path, capsys):
    out = tmp_path / "doomed"
    argv = ["moments", "--out", str(out), "--override", "model.r=-9",
            "--override", "solver.steps_per_period=512",
            "--override", "grid.nx=200"]
    assert cli_io.main(argv) == 3
    assert "numerical failure" in capsys.readouterr().err


def test_main_rejects_unknown_tag():
    with pytest.raises(SystemExit) as err:
        cli_io.main(["definitely-not-a-tag"])
    assert err.value.code == 2
