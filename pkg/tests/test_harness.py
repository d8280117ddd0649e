import math

import pytest
from click.testing import CliRunner

from condwalk.cli import cli, main
from condwalk.config import parse_config, parse_settings
from condwalk.errors import ConfigError
from condwalk.harness import HEADER, PredictionReport, emit, make_row, parse, run_config, run_experiment

CONFIG = """
law = ssrw
seed = 3
[persist]
experiment = persistence
n = 1024, 256
x = 0
[dual]
experiment = duality
law = skipfree
n = 8, 32
x = 0, 1, 2, 3
y = 0, 1, 2, 3
[local]
experiment = local
n = 64
x = 0
y = 0, 1, 2
"""


def test_parse_config_defaults_inherited():
    cfgs = parse_config(CONFIG)
    assert [c.name for c in cfgs] == ["persist", "dual", "local"]
    assert cfgs[0].law == "ssrw" and cfgs[1].law == "skipfree"
    assert cfgs[0].seed == 3 and cfgs[0].n == (1024, 256)


def test_config_errors():
    with pytest.raises(ConfigError):
        parse_config("[a]\nexperiment = nope\n")
    with pytest.raises(ConfigError):
        parse_config("[a]\nexperiment = local\nbogus = 1\n")
    with pytest.raises(ConfigError):
        parse_config("[a]\nexperiment = local\nq = 0.5\n")
    assert parse_settings("x = 1, 2").x == (1.0, 2.0)


def test_persistence_rows_sorted():
    rep = run_experiment(parse_config(CONFIG)[0])
    assert [r.n for r in rep.rows] == [256, 1024]
    assert all(abs(r.ratio - 1) < 1e-3 for r in rep.rows)


def test_duality_rows_exact():
    rep = run_experiment(parse_config(CONFIG)[1])
    assert rep.rows
    assert all(abs(r.oracle - r.predictor) <= 1e-12 for r in rep.rows)


def test_inadmissible_cells_both_zero():
    rep = run_experiment(parse_config(CONFIG)[2])
    odd = [r for r in rep.rows if r.y == 1.0]
    assert odd and odd[0].ratio == "both-zero"


def test_empty_grid():
    cfg = parse_config("[e]\nexperiment = persistence\nn =\n")[0]
    assert len(run_experiment(cfg)) == 0


def test_emit_round_trip():
    rep = run_config(parse_config(CONFIG))
    data = emit(rep)
    assert data.splitlines()[0].decode() == ",".join(HEADER)
    assert parse(data).rows == rep.rows
    assert parse(emit(rep, "json"), "json").rows == rep.rows
    assert emit(parse(data)) == data


def test_row_conventions():
    r = make_row("x", 2, 0, 0, None, 0.0, 0.0, 1.0)
    assert r.ratio == "both-zero" and r.envelope_ratio == 0.0
    r = make_row("x", 2, 0, 0, None, 1.0, 0.0)
    assert r.ratio == math.inf
    r = make_row("x", 2, 0, 0, None, 0.3, 0.1, 0.1)
    assert r.ratio == pytest.approx(3.0) and r.envelope_ratio == pytest.approx(2.0)
    assert emit(PredictionReport([r])).count(b"\n") == 2


def test_thread_count_does_not_change_bytes():
    text = CONFIG + "\n[mc]\nexperiment = fuk-nagaev\nlaw = uniform\nn = 100\nu = 8\nv = 2, 4\npaths = 20000\n"
    cfgs = parse_config(text)
    assert emit(run_config(cfgs, threads=1)) == emit(run_config(cfgs, threads=3))


def test_cli_run_and_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(CONFIG)
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--threads", "2"]) == 0
    assert out.read_bytes() == emit(run_config(parse_config(CONFIG)))
    bad = tmp_path / "bad.cfg"
    bad.write_text("[a]\nexperiment = nope\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert main(["run"]) == 1


def test_cli_figure_commands(tmp_path):
    cfg = tmp_path / "k.cfg"
    cfg.write_text("law = ssrw\nx = 0, 1\ny = 0.5\nu = 0.1\nn = 6\n")
    runner = CliRunner()
    res = runner.invoke(cli, ["kernel-table", "--config", str(cfg)])
    assert res.exit_code == 0 and res.output.splitlines()[0] == "x,y,p,ell,psi"
    assert runner.invoke(cli, ["level-sets", "--config", str(cfg)]).output.startswith("alpha,x,y,inside")
    assert runner.invoke(cli, ["l-curve", "--config", str(cfg)]).output.startswith("x,L")
    assert runner.invoke(cli, ["exit-pmf", "--config", str(cfg)]).output.splitlines()[1] == "1,0.5"
    assert runner.invoke(cli, ["oracle", "--config", str(cfg)]).output.startswith("y,prob")
    assert runner.invoke(cli, ["persistence", "--config", str(cfg)]).output.startswith("n,x,prob")
    assert runner.invoke(cli, ["harmonic", "--config", str(cfg)]).output.startswith("x,V,err,method")
    assert runner.invoke(cli, ["predict", "--config", str(cfg)]).output.startswith("n,x,y,predictor,value")
