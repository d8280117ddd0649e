"""Command line interface: ``condwalk <subcommand> --config FILE [--out PATH] [--threads N]``.

Exit codes: 0 on success, 2 when an acceptance check fails, 1 on any error.
"""

from __future__ import annotations

import csv
import io
import sys
from pathlib import Path

import click
import numpy as np

from . import acceptance, harness, kernel, montecarlo, oracle, predict
from .config import load_config, load_settings
from .errors import CondWalkError
from .harmonic import build_table
from .increments import load_law, snap
from .renewal import identity_report

EXIT_OK, EXIT_ERROR, EXIT_ACCEPTANCE = 0, 1, 2


def _fmt(a) -> str:
    if isinstance(a, (bool, np.bool_)):
        return str(int(a))
    if isinstance(a, (int, np.integer)):
        return str(int(a))
    if isinstance(a, (float, np.floating)):
        return "%.17g" % a
    return str(a)


def _write_csv(header, rows, out: str | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(a) for a in r])
    _write_bytes(buf.getvalue().encode(), out)


def _write_bytes(data: bytes, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


def _common(required: bool = False):
    def deco(f):
        f = click.option("--threads", type=click.IntRange(min=1), default=None, help="Worker threads.")(f)
        f = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (default stdout).")(f)
        f = click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), required=required,
                         help="Configuration file.")(f)
        return f
    return deco


@click.group()
def cli():
    """Heat-kernel predictors and exact oracles for random walks killed below zero."""


@cli.command()
@_common(required=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
def run(config, out, threads, fmt):
    """Run every experiment in the config and emit one report."""
    configs = load_config(config)
    report = harness.PredictionReport()
    for cfg in configs:
        part = harness.run_experiment(cfg, threads)
        if cfg.output and out is None:
            Path(cfg.output).write_bytes(harness.emit(part, fmt))
        else:
            report.extend(part)
    if report.rows or out is not None or not any(c.output for c in configs):
        _write_bytes(harness.emit(report, fmt), out)


@cli.command("acceptance")
@_common()
@click.option("--only", type=int, multiple=True, help="Run only these criterion numbers.")
def acceptance_cmd(config, out, threads, only):
    """Run the acceptance suite; exit code 2 if any criterion fails."""
    lines, ok = [], True
    for res in acceptance.run_all(set(only) if only else None):
        click.echo(res.line())
        lines.append(res.line())
        ok &= res.passed
    if out:
        Path(out).write_text("\n".join(lines) + "\n")
    if not ok:
        sys.exit(EXIT_ACCEPTANCE)


@cli.command("kernel-table")
@_common()
def kernel_table(config, out, threads):
    """CSV x,y,p,ell,psi on the config's x and y grid."""
    s = load_settings(config)
    rows = [(x, y, kernel.p_kernel(x, y), kernel.ell(x, y), kernel.psi(x, y)) for x in s.x for y in s.y]
    _write_csv(("x", "y", "p", "ell", "psi"), rows, out)


@cli.command("level-sets")
@_common()
def level_sets(config, out, threads):
    """CSV alpha,x,y,inside for the superlevel sets of p; alpha values come from key u."""
    s = load_settings(config)
    rows = [(a, x, y, bool(kernel.superlevel_member(a, x, y))) for a in s.u for x in s.x for y in s.y]
    _write_csv(("alpha", "x", "y", "inside"), rows, out)


@cli.command("l-curve")
@_common()
def l_curve(config, out, threads):
    """CSV x,L on the config's x grid."""
    s = load_settings(config)
    _write_csv(("x", "L"), [(x, kernel.bigL(x)) for x in s.x], out)


@cli.command()
@_common()
@click.option("--reversed", "rev", is_flag=True, help="Tabulate V-check instead of V.")
def harmonic(config, out, threads, rev):
    """CSV x,V,err,method on [0, xmax]."""
    s = load_settings(config)
    law = load_law(s.law, s.delta)
    tab = build_table(law, s.xmax, "reversed" if rev else "forward", n_cap=s.n_cap, paths=s.table_paths,
                      seed=s.seed, threads=threads or s.threads)
    _write_csv(("x", "V", "err", "method"), tab.rows(), out)


def _first(values, what):
    if not values:
        raise CondWalkError(f"config needs at least one value for {what!r}")
    return values[0]


@cli.command("oracle")
@_common()
@click.option("--constraint", type=click.Choice(["n-1", "n", "none"]), default="n-1")
def oracle_cmd(config, out, threads, constraint):
    """CSV y,prob: exact law of x + S_n on survival, for the first x and n of the config."""
    s = load_settings(config)
    law = load_law(s.law, s.delta)
    t = oracle.joint_law(law, _first(s.x, "x"), _first(s.n, "n"), constraint)
    _write_csv(("y", "prob"), zip(t.positions, t.masses), out)


@cli.command("exit-pmf")
@_common()
def exit_pmf(config, out, threads):
    """CSV k,prob: P(tau_x = k) for k <= n (first x and n of the config)."""
    s = load_settings(config)
    pmf = oracle.exit_pmf(load_law(s.law, s.delta), _first(s.x, "x"), _first(s.n, "n"))
    _write_csv(("k", "prob"), sorted(pmf.items()), out)


@cli.command()
@_common()
def persistence(config, out, threads):
    """CSV n,x,prob: exact P(tau_x > n) over the grid."""
    s = load_settings(config)
    law = load_law(s.law, s.delta)
    _write_csv(("n", "x", "prob"), [(n, x, oracle.persistence(law, x, n)) for n in s.n for x in s.x], out)


@cli.command("predict")
@_common()
def predict_cmd(config, out, threads):
    """CSV n,x,y,predictor,value for every predictor that applies to the law."""
    s = load_settings(config)
    law = load_law(s.law, s.delta)
    xmax = max([*s.x, *(y + max(s.v, default=0.0) for y in s.y), law.max_up, law.max_down])
    kw = dict(n_cap=s.n_cap, paths=s.table_paths, seed=s.seed, threads=threads or s.threads)
    inp = predict.PredictorInputs.from_tables(law, build_table(law, xmax, "forward", **kw),
                                              build_table(law, xmax, "reversed", **kw))
    rows = []
    for n in s.n:
        for x in s.x:
            rows.append((n, x, "", "persistence", predict.persistence_pred(inp, x, n)))
            if law.is_lattice:
                rows.append((n, x, "", "exit", predict.exit_pred_lattice(inp, law, x, n)))
                for y in s.y:
                    if law.lattice.contains(snap(y) - snap(x), n):
                        rows.append((n, x, y, "local", predict.local_pred(inp, x, y, n)))
                        rows.append((n, x, y, "caravenna", predict.caravenna_pred(inp, x, y, n)))
            else:
                rows.append((n, x, "", "exit", predict.exit_pred_nonlattice(inp, x, n)))
                v = _first(s.v, "v")
                for y in s.y:
                    rows.append((n, x, y, "interval", predict.interval_pred(inp, x, y, v, n)))
    _write_csv(("n", "x", "y", "predictor", "value"), rows, out)


@cli.command()
@_common()
def mc(config, out, threads):
    """CSV n,x,estimate,stderr,paths,seed: simulated P(tau_x > n) over the grid."""
    s = load_settings(config)
    law = load_law(s.law, s.delta)
    rows = []
    for n in s.n:
        for x in s.x:
            e = montecarlo.mc_persistence(law, x, n, s.paths, s.seed, threads or s.threads)
            rows.append((n, x, e.value, e.stderr, e.paths, e.seed))
    _write_csv(("n", "x", "estimate", "stderr", "paths", "seed"), rows, out)


@cli.command()
@_common()
def renewal(config, out, threads):
    """CSV identity,x,y,lhs,rhs,tolerance,passed for the renewal identities."""
    s = load_settings(config)
    rep = identity_report(load_law(s.law, s.delta), K_spitzer=max(s.K, 1000), K_renewal=min(s.K, 20_000),
                          xmax=s.xmax)
    rows = [(c.identity, c.x, c.y, c.lhs, c.rhs, c.tolerance, c.passed) for c in rep.checks]
    _write_csv(("identity", "x", "y", "lhs", "rhs", "tolerance", "passed"), rows, out)
    if not rep.passed:
        sys.exit(EXIT_ACCEPTANCE)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="condwalk", standalone_mode=False)
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.exceptions.Abort:
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except (CondWalkError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
