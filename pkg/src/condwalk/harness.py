"""Config-driven experiments comparing exact or simulated oracles with predictors."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

from . import kernel, montecarlo, oracle, predict
from .config import ExperimentConfig
from .errors import CondWalkError, ConfigError, UnsupportedLaw
from .harmonic import build_table
from .increments import IncrementLaw, load_law, reverse, snap
from .oracle import Constraint
from .renewal import identity_report
from .rng import derive_seed

HEADER = ("experiment", "n", "x", "y", "v", "oracle", "predictor", "ratio", "envelope", "envelope_ratio", "regimes")
BOTH_ZERO = "both-zero"
TABLE_STREAM = 1 << 40  # seed counter reserved for V tables, disjoint from cell indices


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    n: int
    x: float | None
    y: float | None
    v: float | None
    oracle: float
    predictor: float
    ratio: float | str
    envelope: float | None
    envelope_ratio: float | None
    regimes: tuple[str, ...] = ()


def make_row(experiment: str, n: int, x, y, v, oracle_value: float, predictor_value: float,
             envelope: float | None = None, regimes: Iterable[str] = ()) -> ReportRow:
    o, p = float(oracle_value), float(predictor_value)
    if o == 0.0 and p == 0.0:
        ratio: float | str = BOTH_ZERO
    elif p == 0.0:
        ratio = math.copysign(math.inf, o)
    else:
        ratio = o / p
    env_ratio = None
    if envelope is not None:
        diff = abs(o - p)
        env_ratio = diff / envelope if envelope > 0 else (0.0 if diff == 0 else math.inf)
    f = lambda a: None if a is None else float(a)
    return ReportRow(experiment, int(n), f(x), f(y), f(v), o, p, ratio, f(envelope), env_ratio, tuple(sorted(regimes)))


@dataclass
class PredictionReport:
    rows: list[ReportRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def extend(self, other: "PredictionReport") -> None:
        self.rows.extend(other.rows)


def _sort_key(r: ReportRow):
    k = lambda a: -math.inf if a is None else a
    return (r.n, k(r.x), k(r.y))


# ---------------------------------------------------------------------------
# serialization

def _fmt(a) -> str:
    if a is None:
        return ""
    if isinstance(a, str):
        return a
    if isinstance(a, int):
        return str(a)
    return "%.17g" % a


def _cells(r: ReportRow) -> list[str]:
    return [r.experiment, _fmt(r.n), _fmt(r.x), _fmt(r.y), _fmt(r.v), _fmt(r.oracle), _fmt(r.predictor),
            _fmt(r.ratio), _fmt(r.envelope), _fmt(r.envelope_ratio), ";".join(r.regimes)]


def emit(report: PredictionReport, fmt: str = "csv") -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        for r in report.rows:
            w.writerow(_cells(r))
        return buf.getvalue().encode()
    if fmt == "json":
        return (json.dumps([dict(zip(HEADER, _cells(r))) for r in report.rows], indent=1) + "\n").encode()
    raise ConfigError(f"unknown output format {fmt!r}")


def _opt(s: str) -> float | None:
    return None if s == "" else float(s)


def _row_from_cells(c: list[str]) -> ReportRow:
    ratio = c[7] if c[7] == BOTH_ZERO else float(c[7])
    regimes = tuple(c[10].split(";")) if c[10] else ()
    return ReportRow(c[0], int(c[1]), _opt(c[2]), _opt(c[3]), _opt(c[4]), float(c[5]), float(c[6]), ratio,
                     _opt(c[8]), _opt(c[9]), regimes)


def parse(data: bytes, fmt: str = "csv") -> PredictionReport:
    """Inverse of emit."""
    text = data.decode()
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != HEADER:
            raise ConfigError("report header mismatch")
        return PredictionReport([_row_from_cells(c) for c in rows[1:]])
    if fmt == "json":
        return PredictionReport([_row_from_cells([d[h] for h in HEADER]) for d in json.loads(text)])
    raise ConfigError(f"unknown output format {fmt!r}")


# ---------------------------------------------------------------------------
# experiments

@dataclass
class _Context:
    cfg: ExperimentConfig
    law: IncrementLaw
    inputs: predict.PredictorInputs | None = None


NEEDS_TABLES = {"persistence", "local", "caravenna", "exit", "interval", "cdf"}
LATTICE_ONLY = {"local", "caravenna", "duality", "renewal", "llt-rate"}


def _table_range(cfg: ExperimentConfig, law: IncrementLaw) -> float:
    reach = max(law.max_up, law.max_down)
    need = max([0.0, *cfg.x, *cfg.y])
    if cfg.experiment == "interval":
        need = max(need, max(cfg.y, default=0.0) + max(cfg.v, default=0.0))
    return max(reach, need)


def _context(cfg: ExperimentConfig, threads: int) -> _Context:
    law = load_law(cfg.law, cfg.delta)
    if cfg.experiment in LATTICE_ONLY and not law.is_lattice:
        raise UnsupportedLaw(f"experiment {cfg.experiment!r} needs a lattice law")
    if cfg.experiment == "interval" and law.is_lattice:
        raise UnsupportedLaw("experiment 'interval' needs a non-lattice law")
    ctx = _Context(cfg, law)
    if cfg.experiment in NEEDS_TABLES and cfg.n:
        xmax = _table_range(cfg, law)
        kw = dict(n_cap=cfg.n_cap, paths=cfg.table_paths, threads=threads)
        V = build_table(law, xmax, "forward", seed=derive_seed(cfg.seed, TABLE_STREAM, 0), **kw)
        Vc = build_table(law, xmax, "reversed", seed=derive_seed(cfg.seed, TABLE_STREAM, 1), **kw)
        ctx.inputs = predict.PredictorInputs.from_tables(law, V, Vc)
    return ctx


def _regimes(ctx: _Context, x, y, n, v=0.0):
    inp = ctx.inputs
    return predict.classify_regime(float(x), float(y), n, ctx.cfg.q, inp.sigma, inp.hbar, float(v))


def _persistence(ctx, n, x, seed):
    cfg, law, inp = ctx.cfg, ctx.law, ctx.inputs
    if law.is_lattice:
        o = oracle.persistence(law, x, n)
    else:
        o = montecarlo.mc_persistence(law, x, n, cfg.paths, seed).value
    env = predict.rate_Rn(inp, x, n) / math.sqrt(n)
    return [make_row("persistence", n, x, None, None, o, predict.persistence_pred(inp, x, n), env)]


def _local(ctx, n, x, seed, caravenna=False):
    law, inp = ctx.law, ctx.inputs
    constraint = Constraint.SURVIVE_N if caravenna else Constraint.SURVIVE_N_MINUS_1
    table = oracle.joint_law(law, x, n, constraint)
    rows = []
    for y in ctx.cfg.y:
        if law.lattice.contains(snap(y) - snap(x), n):
            p = predict.caravenna_pred(inp, x, y, n) if caravenna else predict.local_pred(inp, x, y, n)
        else:
            p = 0.0
        env = predict.caravenna_envelope(inp, x, n) if caravenna else predict.error_envelope(inp, x, y, n).value
        name = "caravenna" if caravenna else "local"
        rows.append(make_row(name, n, x, y, None, table.prob_at(y), p, env, _regimes(ctx, x, y, n)))
    return rows


def _exit(ctx, n, x, seed):
    cfg, law, inp = ctx.cfg, ctx.law, ctx.inputs
    if law.is_lattice:
        # lattice statement concerns tau = n+1
        o = oracle.exit_pmf(law, x, n + 1)[n + 1]
        p = predict.exit_pred_lattice(inp, law, x, n)
    else:
        est = montecarlo.mc_exit_pmf(law, x, n, cfg.paths, seed)
        o = est.counts[n] / est.paths
        p = predict.exit_pred_nonlattice(inp, x, n)
    return [make_row("exit", n, x, None, None, o, p, predict.exit_envelope(inp, x, n))]


def _interval(ctx, n, x, seed):
    cfg, law, inp = ctx.cfg, ctx.law, ctx.inputs
    rows = []
    k = 0
    for y in cfg.y:
        for v in cfg.v:
            est = montecarlo.mc_joint_interval(law, x, y, v, n, cfg.paths, derive_seed(seed, k))
            k += 1
            p = predict.interval_pred(inp, x, y, v, n)
            env = predict.interval_envelope(inp, x, y, v, n)
            rows.append(make_row("interval", n, x, y, v, est.value, p, env, _regimes(ctx, x, y, n, v)))
    return rows


def _cdf(ctx, n, x, seed):
    cfg, law, inp = ctx.cfg, ctx.law, ctx.inputs
    scale = law.sigma * math.sqrt(n)
    env = predict.rate_Rn(inp, x, n) / math.sqrt(n)
    if not law.is_lattice:
        final = montecarlo.simulate(law, x, n, n, cfg.paths, seed).final
    rows = []
    for u in cfg.u:
        if law.is_lattice:
            o = oracle.conditional_cdf(law, x, n, u)
        else:
            o = float((final <= u * scale).sum()) / cfg.paths
        rows.append(make_row("cdf", n, x, u * scale, u, o, predict.cdf_pred(inp, x, u, n), env))
    return rows


def _duality(ctx, n, x, seed):
    law = ctx.law
    fwd = oracle.joint_law(law, x, n)
    rev = reverse(law)
    rows = []
    for y in ctx.cfg.y:
        if not law.lattice.contains(snap(y) - snap(x), n):
            continue
        bwd = oracle.joint_law(rev, y, n)
        env = max(fwd.float_error_bound, bwd.float_error_bound)
        rows.append(make_row("duality", n, x, y, None, fwd.prob_at(y), bwd.prob_at(x), env))
    return rows


def _llt(ctx, n, x, seed):
    d1 = ctx.law.moments.delta1
    return [make_row("llt-rate", n, None, None, None, oracle.llt_sup_error(ctx.law, n), n ** (-(1 + d1) / 2))]


def _fuk_nagaev(ctx, n, x, seed):
    cfg, law = ctx.cfg, ctx.law
    rows = []
    k = 0
    for u in cfg.u:
        for v in cfg.v:
            bound = oracle.fuk_nagaev_bound(law, n, u, v)
            if law.is_lattice:
                o = oracle.fuk_nagaev_check(law, n, u, v).exact_prob
            else:
                o = montecarlo.mc_max_abs(law, n, u, cfg.paths, derive_seed(seed, k)).value
            k += 1
            rows.append(make_row("fuk-nagaev", n, 0.0, u, v, o, bound))
    return rows


PER_N_X: dict[str, Callable] = {
    "persistence": _persistence,
    "local": _local,
    "caravenna": lambda ctx, n, x, seed: _local(ctx, n, x, seed, caravenna=True),
    "exit": _exit,
    "interval": _interval,
    "cdf": _cdf,
    "duality": _duality,
    "fuk-nagaev": _fuk_nagaev,
}

KERNEL_TOLERANCES = {"p00": 1e-12, "ell-normalization": 1e-10, "p-symmetry": 1e-13, "psi-odd": 1e-13,
                     "diagonal": 1e-6}


DIAGONAL_FROM = 8.0


def _kernel_rows(cfg: ExperimentConfig) -> list[ReportRow]:
    tol = KERNEL_TOLERANCES
    rows = [make_row("kernel-identities", 0, 0.0, 0.0, None, kernel.p_kernel(0.0, 0.0),
                     math.sqrt(2 * math.pi) / 2, tol["p00"], ("p00",))]
    for x in cfg.x:
        rows.append(make_row("kernel-identities", 0, x, None, None, kernel.ell_normalization(abs(x)), 1.0,
                             tol["ell-normalization"], ("ell-normalization",)))
        for y in cfg.y:
            rows.append(make_row("kernel-identities", 0, x, y, None, kernel.p_kernel(x, y), kernel.p_kernel(y, x),
                                 tol["p-symmetry"], ("p-symmetry",)))
            rows.append(make_row("kernel-identities", 0, x, y, None, kernel.psi(-x, y), -kernel.psi(x, y),
                                 tol["psi-odd"], ("psi-odd",)))
            if x < DIAGONAL_FROM:
                continue
            # far from the boundary p(x, x - h) approaches phi(h); y plays the role of h
            rows.append(make_row("kernel-identities", 0, x, x - y, y, kernel.p_kernel(x, x - y),
                                 kernel.gaussian_pdf(1.0, y), tol["diagonal"], ("diagonal",)))
    return rows


def _renewal_rows(ctx: _Context) -> list[ReportRow]:
    cfg = ctx.cfg
    rep = identity_report(ctx.law, K_spitzer=cfg.K, K_renewal=min(cfg.K, 20_000), xmax=cfg.xmax)
    return [make_row("renewal", cfg.K, c.x, c.y, None, c.lhs, c.rhs, c.tolerance, (c.identity,)) for c in rep.checks]


def _level_rows(cfg: ExperimentConfig) -> list[ReportRow]:
    rows = []
    for alpha in cfg.u:
        for x in cfg.x:
            for y in cfg.y:
                inside = bool(kernel.superlevel_member(alpha, x, y))
                rows.append(make_row("level-sets", 0, x, y, alpha, kernel.p_kernel(x, y), alpha, None,
                                     ("inside" if inside else "outside",)))
    return rows


def _annotate(exc: CondWalkError, where: str) -> CondWalkError:
    try:
        return type(exc)(f"{where}: {exc}")
    except TypeError:
        return exc


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> PredictionReport:
    """Evaluate every grid cell of one experiment; rows are sorted by (n, x, y)."""
    threads = cfg.threads if threads is None else threads
    if threads < 1:
        raise ConfigError("threads must be positive")
    exp = cfg.experiment
    if not exp:
        raise ConfigError(f"[{cfg.name}] missing 'experiment'")
    if exp == "kernel-identities":
        rows = _kernel_rows(cfg)
    elif exp == "level-sets":
        rows = _level_rows(cfg)
    else:
        ns = cfg.n
        if not ns and exp != "renewal":
            return PredictionReport()
        if any(n < 2 for n in ns):
            raise ConfigError(f"[{cfg.name}] n values must be at least 2 for predictor comparisons")
        ctx = _context(cfg, threads)
        if exp == "renewal":
            rows = _renewal_rows(ctx)
        elif exp == "llt-rate":
            rows = [r for n in ns for r in _llt(ctx, n, None, 0)]
        else:
            fn = PER_N_X[exp]
            xs = (0.0,) if exp == "fuk-nagaev" else cfg.x
            cells = [(n, x) for n in ns for x in xs]

            def work(i_cell):
                i, (n, x) = i_cell
                try:
                    return fn(ctx, n, x, derive_seed(cfg.seed, i))
                except CondWalkError as exc:
                    raise _annotate(exc, f"[{cfg.name}] cell n={n}, x={x}") from exc

            if threads == 1 or len(cells) == 1:
                parts = [work(c) for c in enumerate(cells)]
            else:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    parts = list(pool.map(work, enumerate(cells)))
            rows = [r for part in parts for r in part]
    return PredictionReport(sorted(rows, key=_sort_key))


def run_config(configs: Iterable[ExperimentConfig], threads: int | None = None) -> PredictionReport:
    out = PredictionReport()
    for cfg in configs:
        out.extend(run_experiment(cfg, threads))
    return out
