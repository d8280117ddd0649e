"""Leading-order predictors for killed-walk probabilities and their error envelopes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import kernel
from .errors import DomainError, KappaDisagreement, LatticeMismatch, TableCoverage, UnsupportedLaw
from .harmonic import HarmonicTable, v_negative
from .increments import IncrementLaw, snap


@dataclass(frozen=True, eq=False)
class PredictorInputs:
    law: IncrementLaw
    V: HarmonicTable
    Vcheck: HarmonicTable
    sigma: float
    hbar: float  # 0 for non-lattice laws
    delta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.V.direction != "forward" or self.Vcheck.direction != "reversed":
            raise DomainError("expected a forward V table and a reversed V-check table")

    @classmethod
    def from_tables(cls, law: IncrementLaw, V: HarmonicTable, Vcheck: HarmonicTable) -> "PredictorInputs":
        hbar = law.lattice.span if law.is_lattice else 0.0
        return cls(law, V, Vcheck, law.sigma, hbar, law.moments.delta)

    def Vn(self, x, n: int) -> float:
        return self.V.value(x) * kernel.bigL(float(x) / (self.sigma * math.sqrt(n)))

    def Vcheck_n(self, y, n: int) -> float:
        return self.Vcheck.value(y) * kernel.bigL(float(y) / (self.sigma * math.sqrt(n)))


def _scale(inp: PredictorInputs, n: int) -> float:
    return inp.sigma * math.sqrt(n)


def persistence_pred(inp: PredictorInputs, x, n: int) -> float:
    """V_n(x) / (sigma sqrt n)."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return inp.Vn(x, n) / _scale(inp, n)


def cdf_pred(inp: PredictorInputs, x, u: float, n: int) -> float:
    """V_n(x)/(sigma sqrt n) * int_0^u ell(x/(sigma sqrt n), z) dz."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    return persistence_pred(inp, x, n) * kernel.int_ell(float(x) / _scale(inp, n), u)


def _require_admissible(inp: PredictorInputs, x, y, n: int) -> None:
    if not inp.law.is_lattice:
        raise UnsupportedLaw("lattice law required")
    if not inp.law.lattice.contains(snap(y) - snap(x), n):
        raise LatticeMismatch(f"y - x = {float(y) - float(x)!r} is not reachable in {n} steps")


def local_pred(inp: PredictorInputs, x, y, n: int) -> float:
    """hbar V_n(x) V-check_n(y) p(x/(sigma sqrt n), y/(sigma sqrt n)) / (sigma^3 n^{3/2})."""
    _require_admissible(inp, x, y, n)
    s = _scale(inp, n)
    return inp.hbar * inp.Vn(x, n) * inp.Vcheck_n(y, n) * kernel.p_kernel(float(x) / s, float(y) / s) / s**3


def caravenna_pred(inp: PredictorInputs, x, y, n: int) -> float:
    """hbar V_n(x) ell(x/(sigma sqrt n), y/(sigma sqrt n)) / (sigma^2 n)."""
    _require_admissible(inp, x, y, n)
    s = _scale(inp, n)
    return inp.hbar * inp.Vn(x, n) * kernel.ell(float(x) / s, float(y) / s) / s**2


# ---------------------------------------------------------------------------
# exit time

def _kappa_sum(inp: PredictorInputs, law: IncrementLaw, u: Fraction) -> float:
    """sum_{k>=0} V-check(hbar k + u) P(X < -hbar k - u), evaluated in a fixed order."""
    h = law.lattice.span_exact
    reach = -law.exact_values[0]  # P(X < -y) = 0 once y >= max downward step
    total = 0.0
    y = u
    while y < reach:
        p = float(sum((q for v, q in zip(law.exact_values, law.exact_probs) if v < -y), Fraction(0)))
        total += inp.Vcheck.value(y) * p
        y += h
    return total


def varkappa_u(inp: PredictorInputs, law: IncrementLaw, u) -> float:
    u = snap(u)
    if not 0 <= u < law.lattice.span_exact:
        raise DomainError("u must lie in [0, span)")
    return _kappa_sum(inp, law, u)


def varkappa_n(inp: PredictorInputs, law: IncrementLaw, x, n: int) -> float:
    """sum over y >= 0 with y - x in hbar Z + n a of V-check(y) P(X < -y).

    The admissible y >= 0 are exactly {na + x}_hbar + hbar k, k >= 0, so the
    sum is evaluated through the same routine as varkappa_u.
    """
    lat = law.lattice
    return _kappa_sum(inp, law, lat.residue(snap(x) + n * lat.shift_exact))


def exit_pred_lattice(inp: PredictorInputs, law: IncrementLaw, x, n: int) -> float:
    """hbar phi(x/(sigma sqrt n)) 2 V(x) kappa_n(x) / (sigma^3 n^{3/2}); approximates P(tau_x = n+1)."""
    s = _scale(inp, n)
    phi = kernel.gaussian_pdf(1.0, float(x) / s)
    return inp.hbar * phi * 2.0 * inp.V.value(x) * varkappa_n(inp, law, x, n) / s**3


@dataclass(frozen=True)
class KappaForms:
    negative_side: float  # integral of V-check over (-inf, 0)
    tail_form: float  # integral of V-check(y) P(rX > y) over (0, inf)
    error: float

    @property
    def value(self) -> float:
        return 0.5 * (self.negative_side + self.tail_form)

    @property
    def rel_diff(self) -> float:
        return abs(self.negative_side - self.tail_form) / max(abs(self.value), 1e-300)


def kappa_forms(inp: PredictorInputs) -> KappaForms:
    """Both integral forms of the non-lattice exit constant."""
    law = inp.law
    if law.is_lattice:
        raise UnsupportedLaw("non-lattice law required")
    rlaw = inp.Vcheck.law
    d = rlaw.max_up  # V-check vanishes below -max(rX)
    tab = inp.Vcheck
    if d > tab.xmax * (1 + 1e-12):
        raise TableCoverage(f"V-check table must cover [0, {d!r}]")
    nodes = [float(t) for t in tab.states if 0 < t < d]
    neg, e1 = integrate.quad(lambda y: v_negative(rlaw, tab, y), -d, 0.0,
                             points=[-t for t in nodes][:100] or None, limit=400, epsabs=1e-10, epsrel=1e-9)
    tail, e2 = integrate.quad(lambda y: tab.value(y) * rlaw.prob_above(y), 0.0, d,
                              points=nodes[:100] or None, limit=400, epsabs=1e-12, epsrel=1e-11)
    err_tab, _ = integrate.quad(lambda y: tab.error(y) * rlaw.prob_above(y), 0.0, d, limit=200)
    return KappaForms(neg, tail, err_tab + e1 + e2)


def kappa_nonlattice(inp: PredictorInputs, rtol: float = 0.02) -> float:
    forms = kappa_forms(inp)
    if forms.rel_diff > rtol:
        raise KappaDisagreement(f"kappa forms differ: {forms.negative_side!r} vs {forms.tail_form!r}")
    return forms.value


def exit_pred_nonlattice(inp: PredictorInputs, x, n: int, kappa: float | None = None) -> float:
    """phi(x/(sigma sqrt n)) 2 V(x) kappa / (sigma^3 n^{3/2}); approximates P(tau_x = n)."""
    kappa = kappa_nonlattice(inp) if kappa is None else kappa
    s = _scale(inp, n)
    return kernel.gaussian_pdf(1.0, float(x) / s) * 2.0 * inp.V.value(x) * kappa / s**3


# ---------------------------------------------------------------------------
# non-lattice interval

def _simpson(f, a: float, b: float, h_max: float) -> float:
    m = max(2, 2 * math.ceil((b - a) / (2 * h_max)))
    z = np.linspace(a, b, m + 1)
    w = np.ones(m + 1)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return float(np.dot(w, f(z)) * (b - a) / (3 * m))


def interval_pred_with_uncertainty(inp: PredictorInputs, x, y: float, v: float, n: int,
                                   h_max: float = 1e-2) -> tuple[float, float]:
    """Prediction for P(x+S_n in [y, y+v), tau_x > n-1) and an uncertainty.

    The uncertainty combines the V and V-check table errors (propagated
    through the same integral) with the Simpson refinement difference.
    """
    if v < 0:
        raise DomainError("v must be nonnegative")
    if v == 0:
        return 0.0, 0.0
    if y < 0 or y + v > inp.Vcheck.xmax * (1 + 1e-12):
        raise TableCoverage(f"[{y}, {y + v}] is not covered by the V-check table")
    s = _scale(inp, n)
    xs = float(x) / s
    Lz = lambda z: np.asarray(kernel.bigL(z / s))
    pz = lambda z: np.asarray(kernel.p_kernel(xs, z / s))
    f = lambda z: inp.Vcheck.values_at(z) * Lz(z) * pz(z)
    fe = lambda z: inp.Vcheck.errors_at(z) * Lz(z) * pz(z)
    I = _simpson(f, y, y + v, h_max)
    I_coarse = _simpson(f, y, y + v, 2 * h_max)
    Ie = _simpson(fe, y, y + v, h_max)
    Vx, eVx = inp.V.lookup(x)
    Lx = kernel.bigL(xs)
    pre = Lx / s**3
    value = Vx * pre * I
    unc = pre * (eVx * I + Vx * Ie + Vx * abs(I - I_coarse))
    return value, unc


def interval_pred(inp: PredictorInputs, x, y: float, v: float, n: int) -> float:
    """V_n(x)/(sigma^3 n^{3/2}) int_y^{y+v} V-check_n(z) p(x/(sigma sqrt n), z/(sigma sqrt n)) dz."""
    return interval_pred_with_uncertainty(inp, x, y, v, n)[0]


# ---------------------------------------------------------------------------
# envelopes and regimes

@dataclass(frozen=True)
class ErrorEnvelope:
    n: int
    x: float
    y: float
    value: float


def error_envelope(inp: PredictorInputs, x, y, n: int) -> ErrorEnvelope:
    """(n^{-d/8} + V_n(x))(n^{-d/8} + V-check_n(y)) n^{-d/(8(3+d))} log n / n^{3/2}."""
    if n < 2:
        raise DomainError("n must be at least 2")
    d = inp.delta
    a = n ** (-d / 8)
    val = (a + inp.Vn(x, n)) * (a + inp.Vcheck_n(y, n)) * n ** (-d / (8 * (3 + d))) * math.log(n) / n**1.5
    return ErrorEnvelope(n, float(x), float(y), val)


def rate_Rn(inp: PredictorInputs, x, n: int) -> float:
    """n^{-d/4} + V_n(x) n^{-d/(4(3+d))} log n."""
    if n < 2:
        raise DomainError("n must be at least 2")
    d = inp.delta
    return n ** (-d / 4) + inp.Vn(x, n) * n ** (-d / (4 * (3 + d))) * math.log(n)


def _log_rate(inp: PredictorInputs, n: int) -> float:
    if n < 2:
        raise DomainError("n must be at least 2")
    return n ** (-inp.delta / (8 * (3 + inp.delta))) * math.log(n)


def caravenna_envelope(inp: PredictorInputs, x, n: int) -> float:
    """(n^{-d/6} + V_n(x) n^{-d/(8(3+d))} log n) / n."""
    return (n ** (-inp.delta / 6) + inp.Vn(x, n) * _log_rate(inp, n)) / n


def exit_envelope(inp: PredictorInputs, x, n: int) -> float:
    """(n^{-d/8} + V_n(x)) n^{-d/(8(3+d))} log n / n^{3/2}."""
    return (n ** (-inp.delta / 8) + inp.Vn(x, n)) * _log_rate(inp, n) / n**1.5


def interval_envelope(inp: PredictorInputs, x, y: float, v: float, n: int) -> float:
    """(n^{-d/8} + V_n(x)) (int_y^{y+v} V-check_n + v n^{-d/4}) n^{-d/(8(3+d))} log n / n^{3/2}."""
    s = _scale(inp, n)
    iv = _simpson(lambda z: inp.Vcheck.values_at(z) * np.asarray(kernel.bigL(z / s)), y, y + v, 1e-2) if v > 0 else 0.0
    d = inp.delta
    return (n ** (-d / 8) + inp.Vn(x, n)) * (iv + v * n ** (-d / 4)) * _log_rate(inp, n) / n**1.5


REGIME_TAGS = ("Q_member", "a1", "a2", "a3", "a4", "a5", "a6", "a7", "b1", "b2", "b3")


def classify_regime(x: float, y: float, n: int, q: float, sigma: float, hbar: float = 1.0,
                    v: float = 0.0) -> frozenset[str]:
    """Scenario tags with alpha_n = n^{-1/4} and beta_n = n^{1/4}.

    Lattice tags a1-a7 are produced when hbar > 0, non-lattice tags b1-b3
    when hbar == 0; Q_member is the superlevel test p >= n^{-q}.
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    alpha, beta = n ** -0.25, n**0.25
    rn = math.sqrt(n)
    band = sigma * math.sqrt(2 * q * n * math.log(n)) if q > 0 else 0.0
    s = sigma * rn
    tags = set()
    if kernel.p_kernel(x / s, y / s) >= n ** (-q):
        tags.add("Q_member")
    small_x = abs(x) / rn <= alpha
    small_y = abs(y) / rn <= alpha
    small_xy = abs(x * y) / n <= alpha
    if hbar > 0:
        if small_x and small_xy and y <= band:
            tags.add("a1")
        if small_y and small_xy and x <= band:
            tags.add("a2")
        if x >= beta and y >= beta and abs(y - x) <= band:
            tags.add("a3")
            if x * y / n >= beta:
                tags.add("a7")
        if small_x and small_y:
            tags.add("a4")
        if small_x and alpha <= y / rn <= 1 / alpha:
            tags.add("a5")
        if small_x and small_xy and band > 0 and abs(y / band - 1) <= alpha:
            tags.add("a6")
    else:
        near = abs(x - y) + v <= band
        if x / rn <= alpha and (abs(x * y) + abs(x * v)) / n <= alpha and near:
            tags.add("b1")
        if (abs(y) + abs(v)) / rn <= alpha and (abs(x * y) + abs(x * v)) / n <= alpha and near:
            tags.add("b2")
        if x >= beta and y >= beta and near:
            tags.add("b3")
    return frozenset(tags) if tags else frozenset({"none"})
