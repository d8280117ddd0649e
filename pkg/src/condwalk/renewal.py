"""Spitzer-type series and ladder renewal functions for lattice walks.

Series terms decay like k^{-3/2}. Partial sums are computed exactly up to
K by the unconditioned (or killed) DP and the remainder is estimated by
fitting the amplitude of alpha * k^{-3/2} on the last part of the run and
summing the model tail with the Hurwitz zeta function. The error of the
remainder is the disagreement between fits on two windows plus the size
of the neglected next-order term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import SlowDecay, UnsupportedLaw
from .harmonic import HarmonicTable, build_table
from .increments import IncrementLaw, reverse
from .oracle import killed_walk_masses, sign_probabilities

MAX_EXPONENT = -1.2


@dataclass(frozen=True)
class TailFit:
    partial: float
    tail: float
    tail_error: float
    exponent: float

    @property
    def total(self) -> float:
        return self.partial + self.tail


def _amplitude(k: np.ndarray, t: np.ndarray) -> float:
    w = k**-1.5
    return float(np.dot(t, w) / np.dot(w, w))


def fit_tail(terms: np.ndarray, check: bool = True) -> TailFit:
    """Sum terms[k-1] for k = 1..K and extrapolate the remainder with alpha k^{-3/2}."""
    K = len(terms)
    k = np.arange(1, K + 1, dtype=float)
    partial = math.fsum(terms)
    hz = float(special.zeta(1.5, K + 1))
    late = slice(K // 2, K)
    early = slice(K // 10, K // 2)
    tail = _amplitude(k[late], terms[late]) * hz
    tail_alt = _amplitude(k[early], terms[early]) * hz
    window = np.abs(terms[K // 10 :])
    # lattice periodicity makes some terms vanish; ignore those at roundoff level
    nz = np.flatnonzero(window > 1e-6 * window.max(initial=0.0)) + K // 10
    if len(nz) >= 2:
        exponent = float(np.polyfit(np.log(k[nz]), np.log(np.abs(terms[nz])), 1)[0])
    else:
        exponent = -math.inf
    if check and exponent > MAX_EXPONENT:
        raise SlowDecay(f"fitted term exponent {exponent:.3f} exceeds {MAX_EXPONENT}")
    # next-order corrections are a factor O(k^{-1/2}) smaller than the model
    return TailFit(partial, tail, abs(tail - tail_alt) + abs(tail) / math.sqrt(K), exponent)


@dataclass(frozen=True)
class SpitzerConstants:
    c_plus: float
    c_minus: float
    c_zero: float
    terms_used: int
    tail_estimate: float
    errors: tuple[float, float, float] = (0.0, 0.0, 0.0)
    exponents: tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def sum_residual(self) -> float:
        return abs(self.c_plus + self.c_minus + self.c_zero)


def spitzer_constants(law: IncrementLaw, K: int = 100_000) -> SpitzerConstants:
    """c+ = sum (P(S_k>0) - 1/2)/k, c- = sum (P(S_k<0) - 1/2)/k, c0 = sum P(S_k=0)/k."""
    if not law.is_lattice:
        raise UnsupportedLaw("lattice law required")
    if K < 1000:
        raise ValueError("K must be at least 1000")
    pos, neg, zero, dp_err = sign_probabilities(law, K)
    k = np.arange(1, K + 1, dtype=float)
    fits = [fit_tail((pos - 0.5) / k), fit_tail((neg - 0.5) / k), fit_tail(zero / k)]
    dp_sum_err = dp_err * (math.log(K) + 1.0)
    tail_estimate = max(abs(f.tail) for f in fits) + max(f.tail_error for f in fits)
    return SpitzerConstants(
        c_plus=fits[0].total,
        c_minus=fits[1].total,
        c_zero=fits[2].total,
        terms_used=K,
        tail_estimate=tail_estimate,
        errors=tuple(f.tail_error + dp_sum_err for f in fits),
        exponents=tuple(f.exponent for f in fits),
    )


# ---------------------------------------------------------------------------
# renewal functions

@dataclass(frozen=True)
class RenewalTable:
    name: str
    states: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    remainders: np.ndarray


_KINDS = {
    # name: (kill region, sign applied to the threshold)
    "U_D": ("le0", 1),  # 1{x>=0} + sum_k P(S_k <= x, S_1..S_k > 0)
    "V_D": ("gt0", -1),  # 1{x>=0} + sum_k P(S_k >= -x, S_1..S_k <= 0)
    "U_K": ("ge0", -1),  # 1{x>=0} + sum_k P(S_k >= -x, S_1..S_k < 0)
}


def _renewal(law: IncrementLaw, kind: str, units: np.ndarray, K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kill, sign = _KINDS[kind]
    terms = np.zeros((K, len(units)))
    err = 0.0
    last = 0
    for k, masses, e in killed_walk_masses(law, K, kill, sign * units):
        terms[k - 1] = masses
        err, last = e, k
    vals, errs, rems = [], [], []
    for i in range(len(units)):
        f = fit_tail(terms[:, i], check=False) if last == K else TailFit(math.fsum(terms[:, i]), 0.0, 0.0, -math.inf)
        vals.append(1.0 + f.total)
        rems.append(f.tail)
        errs.append(f.tail_error + err * K)
    return np.array(vals), np.array(errs), np.array(rems)


def renewal_functions(law: IncrementLaw, x_max: float, K: int = 20_000) -> dict[str, RenewalTable]:
    """U_D, V_D, U_K and their reversed counterparts (suffix 'r') on the mesh points of [0, x_max]."""
    if not law.is_lattice:
        raise UnsupportedLaw("lattice law required")
    out = {}
    for tag, lw in (("", law), ("r", reverse(law))):
        g = float(lw.lattice.grid)
        units = np.arange(int(math.floor(x_max / g + 1e-12)) + 1)
        for kind in _KINDS:
            vals, errs, rems = _renewal(lw, kind, units, K)
            out[kind + tag] = RenewalTable(kind + tag, units * g, vals, errs, rems)
    return out


# ---------------------------------------------------------------------------
# identity report

@dataclass(frozen=True)
class IdentityCheck:
    identity: str
    x: float
    y: float
    lhs: float
    rhs: float
    tolerance: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass(frozen=True)
class IdentityReport:
    law_name: str
    constants: SpitzerConstants
    checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def by_identity(self, name: str) -> list[IdentityCheck]:
        return [c for c in self.checks if c.identity == name]

    def worst(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for c in self.checks:
            out[c.identity] = max(out.get(c.identity, 0.0), c.residual)
        return out


FLOOR = 1e-9


FORWARD_RATIO_IDENTITIES = ("ratio-U_D", "ratio-rU_K", "ratio-V_D")


def identity_report(law: IncrementLaw, K_spitzer: int = 100_000, K_renewal: int = 20_000, xmax: float = 10.0,
                    product_max: float = 5.0, V: HarmonicTable | None = None,
                    Vcheck: HarmonicTable | None = None, constants: SpitzerConstants | None = None) -> IdentityReport:
    """Residuals of the Spitzer-constant and renewal identities on a state grid."""
    sc = constants or spitzer_constants(law, K_spitzer)
    V = V or build_table(law, xmax, "forward")
    Vc = Vcheck or build_table(law, xmax, "reversed")
    R = renewal_functions(law, xmax, K_renewal)
    sigma = law.sigma
    ec0 = math.exp(-sc.c_zero)
    e_p, e_m, e_0 = sc.errors
    checks = [IdentityCheck("constants-sum", 0, 0, sc.c_plus + sc.c_minus + sc.c_zero, 0.0, 3 * sc.tail_estimate + 1e-10)]

    v0, ev0 = V.lookup(0)
    vc0, evc0 = Vc.lookup(0)
    r = sigma * math.exp(-sc.c_minus) / math.sqrt(2)
    checks.append(IdentityCheck("V0-constant", 0, 0, v0, r, ev0 + r * e_m + FLOOR))
    r = sigma * math.exp(-sc.c_plus) / math.sqrt(2)
    checks.append(IdentityCheck("rV0-constant", 0, 0, vc0, r, evc0 + r * e_p + FLOOR))

    def ratio(tab, x, base, ebase):
        v, e = tab.lookup(x)
        return v / base, (e + v / base * ebase) / base

    def table_at(name, x):
        t = R[name]
        i = int(np.argmin(np.abs(t.states - x)))
        return float(t.values[i]), float(t.errors[i])

    for i, x in enumerate(R["U_D"].states):
        x = float(x)
        # forward law: U_D = rU_K = Vcheck/Vcheck(0); V/V(0) = e^{-c0} V_D
        rv, re = ratio(Vc, x, vc0, evc0)
        for name, ident in (("U_D", "ratio-U_D"), ("U_Kr", "ratio-rU_K")):
            if x in R[name].states:
                lv, le = table_at(name, x)
                checks.append(IdentityCheck(ident, x, 0, lv, rv, le + re + FLOOR))
        if x in R["V_D"].states:
            rv2, re2 = ratio(V, x, v0, ev0)
            lv, le = table_at("V_D", x)
            checks.append(IdentityCheck("ratio-V_D", x, 0, rv2, ec0 * lv, re2 + ec0 * (le + lv * e_0) + FLOOR))

    for x in R["U_Dr"].states:
        x = float(x)
        # companion: rU_D = U_K = V/V(0); Vcheck/Vcheck(0) = e^{-c0} rV_D
        rv, re = ratio(V, x, v0, ev0)
        for name, ident in (("U_Dr", "ratio-rU_D"), ("U_K", "ratio-U_K")):
            if x in R[name].states:
                lv, le = table_at(name, x)
                checks.append(IdentityCheck(ident, x, 0, lv, rv, le + re + FLOOR))
        if x in R["V_Dr"].states:
            rv2, re2 = ratio(Vc, x, vc0, evc0)
            lv, le = table_at("V_Dr", x)
            checks.append(IdentityCheck("ratio-rV_D", x, 0, rv2, ec0 * lv, re2 + ec0 * (le + lv * e_0) + FLOOR))

    xs = [float(s) for s in R["U_Dr"].states if s <= product_max and s in R["V_D"].states]
    ys = [float(s) for s in R["U_D"].states if s <= product_max and s in R["V_Dr"].states]
    s2 = sigma**2 / 2
    for x in xs:
        vx, evx = V.lookup(x)
        for y in ys:
            vy, evy = Vc.lookup(y)
            lhs, elhs = vx * vy, evx * vy + vx * evy
            a, ea = table_at("U_Dr", x)
            b, eb = table_at("U_D", y)
            c = s2 * math.exp(sc.c_zero)
            checks.append(IdentityCheck("product-U", x, y, lhs, a * b * c, elhs + c * (ea * b + a * eb + a * b * e_0) + FLOOR))
            a, ea = table_at("V_D", x)
            checks.append(IdentityCheck("product-V_D", x, y, lhs, a * b * s2, elhs + s2 * (ea * b + a * eb) + FLOOR))
            a, ea = table_at("U_Dr", x)
            b, eb = table_at("V_Dr", y)
            checks.append(IdentityCheck("product-rV_D", x, y, lhs, a * b * s2, elhs + s2 * (ea * b + a * eb) + FLOOR))
    return IdentityReport(law.name, sc, checks)
