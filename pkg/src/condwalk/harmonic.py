"""Harmonic functions V (and, via the reversed law, V-check) of the killed walk.

Three estimators are provided:

* ``skipfree_exact`` - when the only downward step is the mesh g, the
  undershoot below 0 is always g and V(x) = x + g.
* ``extrapolated`` - the partial means W_n(x) = E(x+S_n; tau_x>n) increase
  to V(x) with a gap of order n^{-1/2}; a Richardson step on a geometric
  ladder removes the leading term, and the rigorous bracket
  W_n <= V <= W_n + (max downward step) P(tau_x > n) clips the result.
* ``monte_carlo`` - the same bracket estimated by simulation (non-lattice laws).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate

from . import kernel
from .errors import DomainError, InsufficientTable, NonMonotone, NotSkipFree, OffLattice, TableCoverage
from .increments import IncrementLaw, reverse, snap
from .montecarlo import mc_partial_mean
from .oracle import Constraint, joint_law, partial_means
from .rng import derive_seed

DEFAULT_LADDER = (1024, 4096, 16384)
ROUNDOFF = 1e-12


@dataclass(frozen=True, eq=False)
class HarmonicTable:
    """Tabulated V on nonnegative states with per-entry error bounds.

    Lattice tables hold the mesh points 0, g, 2g, ...; V is constant on
    [kg, (k+1)g) because the walk from x only sees x through the mesh.
    Non-lattice tables are interpolated linearly between nodes.
    """

    law: IncrementLaw = field(repr=False)
    direction: str
    states: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    method: str

    @property
    def law_id(self) -> str:
        return self.law.name

    @property
    def mesh(self) -> Fraction | None:
        return self.law.lattice.grid if self.law.is_lattice else None

    @property
    def xmax(self) -> float:
        return float(self.states[-1])

    def _lattice_index(self, x) -> int:
        g = self.mesh
        return math.floor(snap(x) / g)

    def value(self, x) -> float:
        return self.lookup(x)[0]

    __call__ = value

    def error(self, x) -> float:
        return self.lookup(x)[1]

    def lookup(self, x) -> tuple[float, float]:
        """(V(x), error bound)."""
        x = float(x) if not isinstance(x, Fraction) else x
        if x < 0:
            return v_negative(self.law, self, x), _negative_error(self.law, self, x)
        if self.law.is_lattice:
            i = self._lattice_index(x)
            if self.method == "skipfree_exact":
                g = float(self.mesh)
                return (i + 1) * g, 0.0
            if i >= len(self.values):
                raise InsufficientTable(f"state {float(x)!r} beyond table (max {self.xmax!r})")
            return float(self.values[i]), float(self.errors[i])
        if x > self.states[-1] * (1 + 1e-12):
            raise TableCoverage(f"state {x!r} beyond table (max {self.xmax!r})")
        return float(np.interp(x, self.states, self.values)), float(np.interp(x, self.states, self.errors))

    def values_at(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if not self.law.is_lattice and np.all(xs >= 0):
            if xs.size and xs.max() > self.states[-1] * (1 + 1e-12):
                raise TableCoverage(f"state {float(xs.max())!r} beyond table (max {self.xmax!r})")
            return np.interp(xs, self.states, self.values)
        return np.array([self.value(x) for x in xs.ravel()]).reshape(xs.shape)

    def errors_at(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if not self.law.is_lattice and np.all(xs >= 0):
            return np.interp(xs, self.states, self.errors)
        return np.array([self.error(x) for x in xs.ravel()]).reshape(xs.shape)

    def rows(self) -> list[tuple[float, float, float, str]]:
        return [(float(s), float(v), float(e), self.method) for s, v, e in zip(self.states, self.values, self.errors)]

    def growth_constant(self) -> float:
        """max V(x)/(1+x) over the table (diagnostic only)."""
        return float(np.max(self.values / (1.0 + self.states)))


# ---------------------------------------------------------------------------
# lattice estimators

def _check_state(law: IncrementLaw, x) -> Fraction:
    if not law.is_lattice:
        raise DomainError("lattice law required")
    xe = snap(x)
    if xe < 0:
        raise DomainError("state must be nonnegative")
    if (xe / law.lattice.grid).denominator != 1:
        raise OffLattice(f"state {float(x)!r} is not on the reachable mesh {law.lattice.grid}")
    return xe


def v_partial(law: IncrementLaw, x, n: int) -> tuple[float, float]:
    """(W_n(x), bias bound) with W_n(x) <= V(x) <= W_n(x) + bias bound."""
    if n < 1:
        raise DomainError("n must be at least 1")
    _check_state(law, x)
    t = joint_law(law, x, n, Constraint.SURVIVE_N)
    return t.mean_position(), law.max_down * t.persistence


def _richardson(ns: Sequence[int], W: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Remove a c n^{-1/2} term from consecutive ladder pairs; return (last, previous) extrapolants."""
    ext = []
    for (n1, w1), (n2, w2) in zip(zip(ns, W), zip(ns[1:], W[1:])):
        r = math.sqrt(n2 / n1)
        ext.append((r * w2 - w1) / (r - 1.0))
    last = ext[-1]
    prev = ext[-2] if len(ext) > 1 else W[-1]
    return last, prev


def _extrapolate(law: IncrementLaw, xmax_units: int, ladder: Sequence[int]):
    ladder = sorted({int(n) for n in ladder})
    if len(ladder) < 2:
        raise DomainError("ladder needs at least two entries")
    g = float(law.lattice.grid)
    pm = partial_means(law, xmax_units, ladder)
    W = [pm[n][0] * g for n in ladder]
    P = [pm[n][1] for n in ladder]
    for w1, w2 in zip(W, W[1:]):
        if np.any(w2 < w1 - ROUNDOFF * np.maximum(1.0, np.abs(w1))):
            raise NonMonotone("partial means decreased along the ladder")
    lo = W[-1]
    hi = W[-1] + law.max_down * P[-1]
    last, prev = _richardson(ladder, W)
    floor = ROUNDOFF * np.maximum(1.0, np.abs(lo))
    value = np.clip(last, lo, hi)
    err = np.minimum(np.abs(last - prev) + np.abs(value - last) + floor, hi - lo + floor)
    return value, err, lo, hi


def v_extrapolated(law: IncrementLaw, x, ladder: Sequence[int] = DEFAULT_LADDER) -> tuple[float, float]:
    """Richardson-accelerated limit of W_n(x), clipped into the bracket at the largest n."""
    xe = _check_state(law, x)
    i = int(xe / law.lattice.grid)
    value, err, _, _ = _extrapolate(law, i, ladder)
    return float(value[i]), float(err[i])


def extrapolated_table(law: IncrementLaw, xmax: float, ladder=DEFAULT_LADDER, direction: str = "forward") -> HarmonicTable:
    g = law.lattice.grid
    units = math.floor(snap(xmax) / g)
    value, err, _, _ = _extrapolate(law, units, ladder)
    states = np.arange(units + 1) * float(g)
    return HarmonicTable(law, direction, states, value, err, "extrapolated")


def is_skipfree(law: IncrementLaw) -> bool:
    """Only one negative support point, equal to minus the reachable mesh."""
    if not law.is_lattice:
        return False
    neg = [v for v in law.exact_values if v < 0]
    return len(neg) == 1 and -neg[0] == law.lattice.grid


def v_skipfree(law: IncrementLaw, x) -> float:
    """x + g for downward skip-free walks (undershoot is always g)."""
    if not is_skipfree(law):
        raise NotSkipFree(f"law {law.name!r} is not downward skip-free")
    xe = _check_state(law, x)
    return float(xe + law.lattice.grid)


def skipfree_table(law: IncrementLaw, xmax: float, direction: str = "forward") -> HarmonicTable:
    if not is_skipfree(law):
        raise NotSkipFree(f"law {law.name!r} is not downward skip-free")
    g = law.lattice.grid
    units = math.floor(snap(xmax) / g)
    states = np.arange(units + 1) * float(g)
    return HarmonicTable(law, direction, states, states + float(g), np.zeros(units + 1), "skipfree_exact")


def v_negative(law: IncrementLaw, table: HarmonicTable, x: float) -> float:
    """V(x) = E[V(x + X); x + X >= 0] for x < 0 (zero outside the support of V)."""
    if x >= 0:
        return table.value(x)
    if law.is_lattice:
        total = 0.0
        for v, p in zip(law.exact_values, law.probs):
            z = snap(x) + v
            if z >= 0:
                total += p * table.value(z)
        return total
    lo, hi = law.support
    a, b = max(lo, -x), hi
    if a >= b:
        return 0.0
    if x + b > table.xmax * (1 + 1e-12):
        raise InsufficientTable(f"table must cover [0, {x + b!r}]")
    nodes = [t - x for t in table.states if a < t - x < b]
    val, _ = integrate.quad(lambda t: float(law.density(t)) * table.value(x + t), a, b,
                            points=nodes[:100] or None, limit=400, epsabs=1e-12, epsrel=1e-10)
    return val


def _negative_error(law, table, x) -> float:
    if law.is_lattice:
        return sum(p * table.error(snap(x) + v) for v, p in zip(law.exact_values, law.probs) if snap(x) + v >= 0)
    lo, hi = law.support
    a, b = max(lo, -x), hi
    if a >= b:
        return 0.0
    val, _ = integrate.quad(lambda t: float(law.density(t)) * table.error(x + t), a, b, limit=200)
    return val


# ---------------------------------------------------------------------------
# Monte Carlo

def v_mc(law: IncrementLaw, x: float, n_cap: int, paths: int, seed: int, threads: int = 1) -> tuple[float, float, float]:
    """(W_{n_cap}(x) estimate, its standard error, bias bound (max down step) * P(tau > n_cap))."""
    if paths < 10_000:
        raise DomainError("at least 10^4 paths are required")
    if x < 0:
        raise DomainError("state must be nonnegative")
    est = mc_partial_mean(law, x, n_cap, paths, seed, threads)
    surv = est.survival
    bias = law.max_down * (surv.value + 2.0 * surv.stderr)
    return est.value, est.stderr, bias


def mc_table(law: IncrementLaw, states, n_cap: int = 4096, paths: int = 100_000, seed: int = 0,
             direction: str = "forward", threads: int = 1) -> HarmonicTable:
    """MC table: value = bracket midpoint, error = half bracket + one standard error."""
    states = np.sort(np.asarray(states, dtype=float))
    vals, errs = [], []
    for i, x in enumerate(states):
        w, se, bias = v_mc(law, float(x), n_cap, paths, derive_seed(seed, i), threads)
        vals.append(w + bias / 2.0)
        errs.append(bias / 2.0 + se)
    return HarmonicTable(law, direction, states, np.array(vals), np.array(errs), "monte_carlo")


# ---------------------------------------------------------------------------
# dispatch and diagnostics

def build_table(law: IncrementLaw, xmax: float, direction: str = "forward", method: str = "auto",
                ladder=DEFAULT_LADDER, step: float = 0.125, n_cap: int = 4096, paths: int = 100_000,
                seed: int = 0, threads: int = 1) -> HarmonicTable:
    """V (direction 'forward') or V-check (direction 'reversed') on [0, xmax]."""
    if direction not in ("forward", "reversed"):
        raise DomainError(f"unknown direction {direction!r}")
    target = reverse(law) if direction == "reversed" else law
    if method == "auto":
        method = ("skipfree_exact" if is_skipfree(target) else "extrapolated") if target.is_lattice else "monte_carlo"
    if method == "skipfree_exact":
        return skipfree_table(target, xmax, direction)
    if method == "extrapolated":
        return extrapolated_table(target, xmax, ladder, direction)
    if method == "monte_carlo":
        states = np.linspace(0.0, xmax, int(round(xmax / step)) + 1)
        return mc_table(target, states, n_cap, paths, seed, direction, threads)
    raise DomainError(f"unknown method {method!r}")


def harmonicity_residual(table: HarmonicTable, closed_only: bool = False) -> float:
    """max |E[V(x+X); x+X>=0] - V(x)| over lattice states whose successors are in the table."""
    law = table.law
    up = law.max_up
    worst = 0.0
    for x in table.states:
        if closed_only and x < up:
            continue
        if x + up > table.xmax and table.method != "skipfree_exact":
            continue
        lhs = sum(p * table.value(snap(x) + v) for v, p in zip(law.exact_values, law.probs) if snap(x) + v >= 0)
        worst = max(worst, abs(lhs - table.value(x)))
    return worst


def vn(table: HarmonicTable, x, n: int, sigma: float | None = None) -> float:
    """V_n(x) = V(x) L(x / (sigma sqrt n))."""
    sigma = table.law.sigma if sigma is None else sigma
    return table.value(x) * kernel.bigL(float(x) / (sigma * math.sqrt(n)))
