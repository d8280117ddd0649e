"""Desk-scale acceptance suite: one check per numbered criterion."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import kernel, oracle, predict
from .config import parse_config
from .harmonic import (DEFAULT_LADDER, build_table, harmonicity_residual, skipfree_table, v_extrapolated,
                       v_skipfree)
from .harness import emit, run_config
from .increments import load_law, reverse
from .montecarlo import mc_joint_interval, mc_max_abs
from .renewal import FORWARD_RATIO_IDENTITIES, identity_report, spitzer_constants


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.number:>2} {self.name}: {self.detail} ({self.seconds:.1f}s / {self.budget:.0f}s)"


def _tables(law, xmax, **kw):
    V = build_table(law, xmax, "forward", **kw)
    Vc = build_table(law, xmax, "reversed", **kw)
    return predict.PredictorInputs.from_tables(law, V, Vc)


def _decreasing(seq) -> bool:
    return all(b < a for a, b in zip(seq, seq[1:]))


def _nearest_admissible(law, x, y, n: int) -> int:
    for d in range(law.lattice.span_exact.numerator * 4 + 4):
        for m in (n - d, n + d):
            if m >= 2 and law.lattice.contains(Fraction(y) - Fraction(x), m):
                return m
    raise ValueError("no admissible n nearby")


# ---------------------------------------------------------------------------

def kernel_identities(seed: int = 1) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = {}
    worst["p00"] = abs(kernel.p_kernel(0.0, 0.0) - math.sqrt(2 * math.pi) / 2)
    worst["ell_norm"] = max(abs(kernel.ell_normalization(x) - 1.0) for x in (0.0, 0.5, 1.0, 3.0, 8.0))
    res = []
    for _ in range(20):
        s, t = rng.uniform(0.1, 2.0, 2)
        x, y = rng.uniform(0.0, 3.0, 2)
        v = rng.uniform(0.05, 0.95)
        res += [kernel.semigroup_residual(s, t, x, y), kernel.gaussian_product_residual(s, t, x, y),
                kernel.convolution_residual(v, x, y), kernel.convolution_residual(v, x, y, normalized=True)]
    worst["semigroup_conv"] = max(res)
    x, y = rng.uniform(-6.0, 6.0, (2, 1000))
    sym = [np.abs(kernel.p_kernel(x, y) - kernel.p_kernel(y, x)),
           np.abs(kernel.psi(-x, y) + kernel.psi(x, y)),
           np.abs(kernel.psi(x, -y) + kernel.psi(x, y)),
           np.abs(kernel.psi(x, y) - kernel.psi(y, x)),
           np.abs(kernel.p_kernel(-x, y) - kernel.p_kernel(x, y))]
    worst["symmetry"] = float(max(a.max() for a in sym))
    worst["diagonal"] = max(abs(kernel.p_kernel(8.0, 8.0 - h) - kernel.gaussian_pdf(1.0, h)) for h in range(-2, 3))
    tol = {"p00": 1e-12, "ell_norm": 1e-10, "semigroup_conv": 1e-8, "symmetry": 1e-13, "diagonal": 1e-6}
    ok = all(worst[k] <= tol[k] for k in tol)
    return ok, ", ".join(f"{k}={worst[k]:.2e}" for k in tol)


def duality() -> tuple[bool, str]:
    worst = 0.0
    for name in ("ssrw", "trinomial", "skipfree"):
        law = load_law(name)
        g = float(law.lattice.grid)
        pts = [k * g for k in range(int(20 / g) + 1)]
        for n in (8, 32, 64):
            r, _ = oracle.duality_sweep(law, pts, pts, n)
            worst = max(worst, r)
    return worst <= 1e-12, f"max residual {worst:.2e}"


def persistence() -> tuple[bool, str]:
    law = load_law("ssrw")
    inp = _tables(law, 2.0)
    ok, parts = True, []
    for n in (256, 1024, 4096):
        o = oracle.persistence(law, 0, n)
        exact = float(Fraction(math.comb(n, n // 2), 2**n))
        dev = abs(o / predict.persistence_pred(inp, 0, n) - 1)
        ok &= abs(o - exact) <= 1e-12 and dev <= 1 / (4 * n) + 1e-4
        parts.append(f"n={n}: |ratio-1|={dev:.3e}, exact diff={abs(o - exact):.1e}")
    return ok, "; ".join(parts)


def local_limit() -> tuple[bool, str]:
    ns = (256, 1024, 4096)
    law = load_law("ssrw")
    inp = _tables(law, 2.0)
    devs = [abs(oracle.joint_law(law, 0, n).prob_at(0) / predict.local_pred(inp, 0, 0, n) - 1) for n in ns]
    ok = devs[-1] <= 0.05 and _decreasing(devs)
    parts = ["ssrw " + ",".join(f"{d:.2e}" for d in devs)]
    law = load_law("skipfree")
    inp = _tables(law, 6.0)
    for x, y in ((0, 0), (3, 0), (0, 3), (5, 5)):
        ms = [_nearest_admissible(law, x, y, n) for n in ns]
        d = [abs(oracle.joint_law(law, x, m).prob_at(y) / predict.local_pred(inp, x, y, m) - 1) for m in ms]
        ok &= _decreasing(d)
        parts.append(f"skipfree({x},{y}) n={ms[0]}.. " + ",".join(f"{v:.2e}" for v in d))
    return ok, "; ".join(parts)


def _first_passage(m: int) -> Fraction:
    """P(tau_0 = m) for the simple walk: (1/m) C(m, (m-1)/2) 2^{-m} for odd m."""
    if m % 2 == 0:
        return Fraction(0)
    return Fraction(math.comb(m, (m - 1) // 2), m * 2**m)


def exit_time() -> tuple[bool, str]:
    law = load_law("ssrw")
    inp = _tables(law, 2.0)
    ns = (256, 1024, 4096)
    pmf = oracle.exit_pmf(law, 0, ns[-1] + 1)
    devs, cross = [], 0.0
    for n in ns:
        o = pmf[n + 1]
        cross = max(cross, abs(o - float(_first_passage(n + 1))))
        devs.append(abs(o / predict.exit_pred_lattice(inp, law, 0, n) - 1))
    zero_ok = True
    for x, n in ((1, 256), (1, 1024), (0, 255), (3, 64)):
        o = oracle.exit_pmf(law, x, n + 1)[n + 1]
        zero_ok &= o == 0.0 and predict.exit_pred_lattice(inp, law, x, n) == 0.0
    ok = cross <= 1e-12 and devs[-1] <= 0.02 and _decreasing(devs) and zero_ok
    return ok, f"|ratio-1| {','.join(f'{d:.2e}' for d in devs)}; closed-form diff {cross:.1e}; odd parity zero={zero_ok}"


def harmonic() -> tuple[bool, str]:
    law = load_law("skipfree")
    g = float(law.lattice.grid)
    exact_ok = all(v_skipfree(law, x) == x + g for x in range(11))
    ext = max(abs(v_extrapolated(law, x)[0] - (x + g)) for x in range(11))
    harm = harmonicity_residual(skipfree_table(law, 12.0), closed_only=True)
    ssrw = load_law("ssrw")
    pm = oracle.partial_means(ssrw, 10, DEFAULT_LADDER)
    bracket_ok = True
    for n, (W, P) in pm.items():
        V = np.arange(len(W)) + 1.0
        bracket_ok &= bool(np.all(W <= V + 1e-12) and np.all(V <= W + ssrw.max_down * P + 1e-12))
    ok = exact_ok and ext <= 1e-2 and harm <= 1e-9 and bracket_ok
    return ok, f"closed form={exact_ok}, extrapolated diff={ext:.2e}, harmonicity={harm:.1e}, bracket={bracket_ok}"


def renewal() -> tuple[bool, str]:
    law = load_law("ssrw")
    sc = spitzer_constants(law, 100_000)
    V = build_table(law, 10.0, "forward")
    Vc = build_table(law, 10.0, "reversed")
    v0 = V.value(0)
    target = law.sigma * math.exp(-sc.c_minus) / math.sqrt(2)
    rep = identity_report(law, xmax=10.0, V=V, Vcheck=Vc, constants=sc)
    ratio_checks = [c for c in rep.checks if c.identity in FORWARD_RATIO_IDENTITIES]
    ok = (abs(sc.c_minus + math.log(2) / 2) <= 1e-3 and sc.sum_residual <= 3 * sc.tail_estimate
          and abs(v0 / target - 1) <= 5e-3 and all(c.passed for c in ratio_checks))
    return ok, (f"c-={sc.c_minus:.7f}, |sum|={sc.sum_residual:.1e} vs 3*tail={3 * sc.tail_estimate:.1e}, "
                f"V(0) rel={abs(v0 / target - 1):.1e}, ratio identities {sum(c.passed for c in ratio_checks)}/{len(ratio_checks)}")


def llt_rate() -> tuple[bool, str]:
    law = load_law("trinomial")
    errs = {n: oracle.llt_sup_error(law, n) for n in (512, 1024, 2048, 4096)}
    ratios = [errs[2 * n] / errs[n] for n in (512, 1024, 2048)]
    return all(0.4 <= r <= 0.65 for r in ratios), "ratios " + ",".join(f"{r:.3f}" for r in ratios)


def fuk_nagaev(seed: int = 3) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    n = 1000
    fixed = (n, math.sqrt(n * math.log(n)), math.sqrt(n))
    triples = [fixed] + [(int(rng.integers(20, 1001)), float(rng.uniform(1.0, 60.0)), float(rng.uniform(0.5, 20.0)))
                         for _ in range(10)]
    ok, worst = True, -math.inf
    for name in ("ssrw", "trinomial"):
        law = load_law(name)
        for t in triples:
            r = oracle.fuk_nagaev_check(law, *t)
            ok &= r.holds
            worst = max(worst, r.exact_prob - r.bound)
    law = load_law("uniform")
    est = mc_max_abs(law, *fixed[:2], paths=100_000, seed=seed)
    bound = oracle.fuk_nagaev_bound(law, *fixed)
    ok &= est.value <= bound + 4 * est.stderr
    return ok, f"max(prob - bound)={worst:.3g}; uniform MC {est.value:.4g} vs bound {bound:.4g}"


def _uniform_inputs(seed: int):
    law = load_law("uniform")
    return law, _tables(law, 1.0, paths=100_000, seed=seed)


def interval(seed: int = 5, paths: int = 10**7) -> tuple[bool, str]:
    law, inp = _uniform_inputs(seed)
    est = mc_joint_interval(law, 0.0, 0.0, 1.0, 512, paths, seed)
    pred, unc = predict.interval_pred_with_uncertainty(inp, 0.0, 0.0, 1.0, 512)
    gap = abs(est.value - pred)
    lim = 3 * (est.stderr + unc)
    return gap <= lim, f"mc={est.value:.5g}+-{est.stderr:.2g}, pred={pred:.5g}+-{unc:.2g}, gap={gap:.2g} <= {lim:.2g}"


def kappa(seed: int = 5) -> tuple[bool, str]:
    _, inp = _uniform_inputs(seed)
    forms = predict.kappa_forms(inp)
    ok = forms.rel_diff <= 0.02
    rng = np.random.default_rng(seed)
    mism = 0
    for name in ("ssrw", "trinomial", "skipfree"):
        law = load_law(name)
        linp = _tables(law, float(law.max_up + law.max_down))
        lat = law.lattice
        for _ in range(1000 // 3 + 1):
            x = Fraction(int(rng.integers(-40, 41)), 2)
            n = int(rng.integers(1, 5000))
            u = lat.residue(x + n * lat.shift_exact)
            mism += predict.varkappa_n(linp, law, x, n) != predict.varkappa_u(linp, law, u)
    ok &= mism == 0
    return ok, f"kappa forms rel diff={forms.rel_diff:.2e}; lattice mismatches={mism}"


DETERMINISM_CONFIG = """
seed = 11
table_paths = 20000
paths = 20000
[persistence-mc]
experiment = persistence
law = uniform
n = 64, 256
x = 0, 0.5
[exit-mc]
experiment = exit
law = uniform
n = 64
x = 0, 0.5
[fn-mc]
experiment = fuk-nagaev
law = uniform
n = 200
u = 10, 20
v = 2, 5
[local]
experiment = local
law = ssrw
n = 64, 128
x = 0, 2
y = 0, 2, 4
"""


def determinism() -> tuple[bool, str]:
    cfg = parse_config(DETERMINISM_CONFIG)
    a = emit(run_config(cfg, threads=1))
    b = emit(run_config(cfg, threads=4))
    return a == b, f"{len(a)} bytes, identical={a == b}"


CRITERIA: list[tuple[int, str, Callable[[], tuple[bool, str]], float]] = [
    (1, "kernel identities", kernel_identities, 5),
    (2, "duality", duality, 10),
    (3, "persistence", persistence, 10),
    (4, "local limit", local_limit, 60),
    (5, "exit time", exit_time, 30),
    (6, "harmonic functions", harmonic, 30),
    (7, "renewal identities", renewal, 120),
    (8, "LLT rate", llt_rate, 20),
    (9, "Fuk-Nagaev", fuk_nagaev, 30),
    (10, "non-lattice interval", interval, 180),
    (11, "kappa consistency", kappa, 60),
    (12, "determinism", determinism, 60),
]


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn, budget in CRITERIA:
        if num == number:
            t = time.perf_counter()
            ok, detail = fn()
            return CriterionResult(num, name, bool(ok), detail, time.perf_counter() - t, budget)
    raise KeyError(number)


def run_all(numbers=None) -> list[CriterionResult]:
    return [run_criterion(num) for num, *_ in CRITERIA if numbers is None or num in numbers]
