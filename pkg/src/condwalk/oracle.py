"""Exact finite-n laws of lattice walks by dynamic programming.

States are stored in units of the reachable mesh g = gcd(span, shift):
after k steps the walk started at x sits at x + g*s with s = k*A + H*j,
where A = shift/g, H = span/g and j runs over a contiguous index range.
Killing thresholds are therefore integer comparisons, computed once from
an exact rational copy of x, and no state is ever truncated (except for
optional trimming of tail entries below a stated absolute level, whose
total is added to the error bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import DomainError, LatticeMismatch, UnsupportedLaw
from .increments import IncrementLaw, reverse, snap

EPS = np.finfo(float).eps


class Constraint(Enum):
    """How many of the first steps must keep the walk in [0, inf)."""

    SURVIVE_N_MINUS_1 = "n-1"
    SURVIVE_N = "n"
    NONE = "none"

    def constrained_steps(self, n: int) -> int:
        return {"n-1": n - 1, "n": n, "none": 0}[self.value]

    @classmethod
    def parse(cls, text: str | "Constraint") -> "Constraint":
        if isinstance(text, cls):
            return text
        aliases = {"n-1": cls.SURVIVE_N_MINUS_1, "survive_through(n-1)": cls.SURVIVE_N_MINUS_1,
                   "n": cls.SURVIVE_N, "survive_through(n)": cls.SURVIVE_N, "none": cls.NONE}
        try:
            return aliases[str(text).strip().lower()]
        except KeyError:
            raise DomainError(f"unknown constraint {text!r}") from None


# ---------------------------------------------------------------------------
# DP core

class _Walk:
    """Float DP over the integer state s = k*A + H*j (units of the mesh g)."""

    def __init__(self, law: IncrementLaw, trim: float = 0.0):
        if not law.is_lattice:
            raise UnsupportedLaw(f"law {law.name!r} is not a lattice law")
        lat = law.lattice
        g = lat.grid
        self.g = g
        self.A = int(lat.shift_exact / g)
        self.H = int(lat.span_exact / g)
        self.m = law.steps
        self.mmin = int(self.m.min())
        self.width = int(self.m.max()) - self.mmin + 1
        self.pm = np.asarray(law.probs, dtype=float)
        self.trim = trim
        self.k = 0
        self.j0 = 0
        self.p = np.ones(1)
        self.err = 0.0
        self.trimmed = 0.0

    def s_values(self) -> np.ndarray:
        return self.k * self.A + self.H * (self.j0 + np.arange(len(self.p)))

    def step(self) -> None:
        old = self.p
        new = np.zeros(len(old) + self.width - 1)
        for mi, pi in zip(self.m, self.pm):
            off = int(mi) - self.mmin
            new[off : off + len(old)] += pi * old
        self.p = new
        self.j0 += self.mmin
        self.k += 1
        self.err += (self.width + 1) * EPS * float(new.sum())
        if len(new):
            self._trim()

    def _trim(self) -> None:
        p = self.p
        keep = np.flatnonzero(p > self.trim)
        if len(keep) == 0:
            self.trimmed += float(p.sum())
            self.p = p[:0]
            return
        lo, hi = keep[0], keep[-1] + 1
        if lo or hi < len(p):
            self.trimmed += float(p[:lo].sum() + p[hi:].sum())
            self.p = p[lo:hi]
            self.j0 += int(lo)

    def kill_le(self, T: int) -> float:
        """Remove states with s <= T; return the removed mass."""
        cut = math.floor((T - self.k * self.A) / self.H) - self.j0 + 1
        if cut <= 0:
            return 0.0
        cut = min(cut, len(self.p))
        killed = float(self.p[:cut].sum())
        self.p = self.p[cut:]
        self.j0 += cut
        return killed

    def kill_ge(self, T: int) -> float:
        """Remove states with s >= T; return the removed mass."""
        cut = math.ceil((T - self.k * self.A) / self.H) - self.j0
        if cut >= len(self.p):
            return 0.0
        cut = max(cut, 0)
        killed = float(self.p[cut:].sum())
        self.p = self.p[:cut]
        return killed

    def mass_at(self, s: int) -> float:
        q, r = divmod(s - self.k * self.A, self.H)
        i = q - self.j0
        return float(self.p[i]) if r == 0 and 0 <= i < len(self.p) else 0.0

    def mass_le(self, T: int) -> float:
        cut = math.floor((T - self.k * self.A) / self.H) - self.j0 + 1
        return float(self.p[: max(0, min(cut, len(self.p)))].sum())

    def mass_ge(self, T: int) -> float:
        cut = math.ceil((T - self.k * self.A) / self.H) - self.j0
        return float(self.p[max(0, min(cut, len(self.p))) :].sum())


def _below_zero_threshold(x: Fraction, g: Fraction) -> int:
    """Largest integer s with x + g*s < 0."""
    return math.ceil(-x / g) - 1


# ---------------------------------------------------------------------------
# tables

@dataclass(frozen=True, eq=False)
class ConditionedLawTable:
    """Exact-support joint law of the end point of a (possibly killed) walk."""

    law_name: str
    x: float
    n: int
    constraint: Constraint
    positions: np.ndarray
    masses: np.ndarray
    killed: np.ndarray  # killed[k-1] = P(tau = k) for the constrained steps
    float_error_bound: float
    exact_masses: tuple[Fraction, ...] | None = None
    _x_exact: Fraction = field(default=Fraction(0), repr=False)
    _g: Fraction = field(default=Fraction(1), repr=False)
    _s0: int = field(default=0, repr=False)
    _H: int = field(default=1, repr=False)

    @property
    def persistence(self) -> float:
        """Total surviving mass, P(tau > m) with m the number of constrained steps."""
        return float(self.masses.sum())

    @property
    def mass(self) -> dict[float, float]:
        return {float(y): float(p) for y, p in zip(self.positions, self.masses)}

    def index_of(self, y) -> int | None:
        s = (snap(y) - self._x_exact) / self._g
        if s.denominator != 1:
            return None
        q, r = divmod(int(s) - self._s0, self._H)
        if r or not 0 <= q < len(self.masses):
            return None
        return q

    def prob_at(self, y) -> float:
        i = self.index_of(y)
        return 0.0 if i is None else float(self.masses[i])

    def exact_prob_at(self, y) -> Fraction:
        if self.exact_masses is None:
            raise DomainError("table was not computed in exact mode")
        i = self.index_of(y)
        return Fraction(0) if i is None else self.exact_masses[i]

    def mean_position(self) -> float:
        """E(x + S_n; survival), summed in order."""
        return float(np.dot(self.positions, self.masses))


def joint_law(
    law: IncrementLaw,
    x: float = 0.0,
    n: int = 1,
    constraint: Constraint | str = Constraint.SURVIVE_N_MINUS_1,
    exact: bool = False,
) -> ConditionedLawTable:
    """Law of x + S_n on the event that the walk stays in [0, inf) for the constrained steps."""
    if n < 1:
        raise DomainError("n must be at least 1")
    constraint = Constraint.parse(constraint)
    if exact:
        return _joint_law_exact(law, x, n, constraint)
    walk = _Walk(law)
    xe = snap(x)
    T = _below_zero_threshold(xe, walk.g)
    m = constraint.constrained_steps(n)
    killed = np.zeros(m)
    for k in range(1, n + 1):
        walk.step()
        if k <= m:
            killed[k - 1] = walk.kill_le(T)
    return _table(law, x, n, constraint, walk, killed, xe)


def _table(law, x, n, constraint, walk: _Walk, killed, xe, exact_masses=None) -> ConditionedLawTable:
    s = walk.s_values()
    positions = float(xe) + float(walk.g) * s.astype(float)
    err = walk.err + len(walk.p) * EPS * float(walk.p.sum()) + walk.trimmed
    return ConditionedLawTable(
        law_name=law.name,
        x=float(x),
        n=n,
        constraint=constraint,
        positions=positions,
        masses=walk.p,
        killed=killed,
        float_error_bound=err,
        exact_masses=exact_masses,
        _x_exact=xe,
        _g=walk.g,
        _s0=int(s[0]) if len(s) else 0,
        _H=walk.H,
    )


def _joint_law_exact(law, x, n, constraint) -> ConditionedLawTable:
    """Same recursion over rationals; intended for certifying float results at small n."""
    if n > 256:
        raise DomainError("exact mode is limited to n <= 256")
    walk = _Walk(law)
    xe = snap(x)
    T = _below_zero_threshold(xe, walk.g)
    m_con = constraint.constrained_steps(n)
    probs = law.exact_probs
    steps = [int(v) for v in law.steps]
    dist: dict[int, Fraction] = {0: Fraction(1)}  # keyed by j
    killed = []
    A, H = walk.A, walk.H
    for k in range(1, n + 1):
        new: dict[int, Fraction] = {}
        for j, pj in dist.items():
            for mi, pi in zip(steps, probs):
                new[j + mi] = new.get(j + mi, Fraction(0)) + pj * pi
        if k <= m_con:
            dead = [j for j in new if k * A + H * j <= T]
            killed.append(sum((new.pop(j) for j in dead), Fraction(0)))
        dist = new
    js = sorted(j for j, p in dist.items())
    # contiguous index range so lookups match the float table layout
    if js:
        js = list(range(js[0], js[-1] + 1))
    exact_masses = tuple(dist.get(j, Fraction(0)) for j in js)
    walk.k = n
    walk.j0 = js[0] if js else 0
    walk.p = np.array([float(p) for p in exact_masses])
    walk.err = 0.0
    return _table(law, x, n, constraint, walk, np.array([float(k) for k in killed]), xe, exact_masses)


# ---------------------------------------------------------------------------
# derived quantities

def persistence(law: IncrementLaw, x: float, n: int) -> float:
    """P(tau_x > n)."""
    return joint_law(law, x, n, Constraint.SURVIVE_N).persistence


def exit_pmf(law: IncrementLaw, x: float, n_max: int) -> dict[int, float]:
    """{k: P(tau_x = k)} for k = 1..n_max, from the mass killed at each step."""
    t = joint_law(law, x, n_max, Constraint.SURVIVE_N)
    return {k: float(t.killed[k - 1]) for k in range(1, n_max + 1)}


def survival_curve(law: IncrementLaw, x: float, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(P(tau_x > k) for k = 0..n_max, P(tau_x = k) for k = 1..n_max) from one DP pass."""
    t = joint_law(law, x, n_max, Constraint.SURVIVE_N)
    tail = np.concatenate([np.cumsum(t.killed[::-1])[::-1], [0.0]]) + t.persistence
    return tail, t.killed


def conditional_cdf(law: IncrementLaw, x: float, n: int, u: float) -> float:
    """P(x + S_n <= u sigma sqrt(n), tau_x > n)."""
    if u < 0:
        raise DomainError("u must be nonnegative")
    t = joint_law(law, x, n, Constraint.SURVIVE_N)
    limit = u * law.sigma * math.sqrt(n)
    return float(t.masses[t.positions <= limit * (1 + 1e-12) + 1e-12].sum())


def unconditioned_law(law: IncrementLaw, n: int) -> ConditionedLawTable:
    """Law of S_n without killing."""
    return joint_law(law, 0.0, n, Constraint.NONE)


def llt_sup_error(law: IncrementLaw, n: int) -> float:
    """sup over the support lattice of |P(S_n = z) - span * phi_{sigma^2 n}(z)|."""
    t = unconditioned_law(law, n)
    var = law.moments.variance * n
    gauss = law.lattice.span * np.exp(-t.positions**2 / (2 * var)) / math.sqrt(2 * math.pi * var)
    # lattice points just outside the reachable range have P = 0
    edge = law.lattice.span * math.exp(-((abs(t.positions).max() + law.lattice.span) ** 2) / (2 * var))
    return float(max(np.abs(t.masses - gauss).max(), edge / math.sqrt(2 * math.pi * var)))


def check_admissible(law: IncrementLaw, x, y, n: int) -> None:
    if not law.lattice.contains(snap(y) - snap(x), n):
        raise LatticeMismatch(f"y - x = {float(y) - float(x)!r} is not in span*Z + {n}*shift")


def duality_residual(law: IncrementLaw, x: float, y: float, n: int) -> float:
    """|P(x+S_n=y, tau_x>n-1) - P(y+rS_n=x, rtau_y>n-1)| with rS the reversed walk."""
    check_admissible(law, x, y, n)
    fwd = joint_law(law, x, n).prob_at(y)
    bwd = joint_law(reverse(law), y, n).prob_at(x)
    return abs(fwd - bwd)


def duality_sweep(law: IncrementLaw, xs, ys, n: int) -> tuple[float, float]:
    """Max duality residual over admissible pairs of the grids, reusing one DP per start.

    Returns (max residual, max float error bound)."""
    rev = reverse(law)
    fwd = {x: joint_law(law, x, n) for x in xs}
    bwd = {y: joint_law(rev, y, n) for y in ys}
    worst, bound = 0.0, 0.0
    for x in xs:
        for y in ys:
            if not law.lattice.contains(snap(y) - snap(x), n):
                continue
            worst = max(worst, abs(fwd[x].prob_at(y) - bwd[y].prob_at(x)))
            bound = max(bound, fwd[x].float_error_bound, bwd[y].float_error_bound)
    return worst, bound


@dataclass(frozen=True)
class FukNagaevResult:
    exact_prob: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.exact_prob <= self.bound


def fuk_nagaev_bound(law: IncrementLaw, n: int, u: float, v: float) -> float:
    """2 exp[(u/v)(1 + log(n/(uv)))] + n P(|X| > v)."""
    if not (u > 0 and v > 0):
        raise DomainError("u and v must be positive")
    tail = law.prob_above(v) + law.prob_below(-v)
    return 2.0 * math.exp((u / v) * (1.0 + math.log(n / (u * v)))) + n * tail


def fuk_nagaev_check(law: IncrementLaw, n: int, u: float, v: float) -> FukNagaevResult:
    """Exact P(max_{k<=n} |S_k| > u) by DP with absorbing barriers, with the bound."""
    bound = fuk_nagaev_bound(law, n, u, v)
    walk = _Walk(law)
    g = walk.g
    hi = math.floor(snap(u) / g) + 1  # s >= hi means S > u
    lo = math.ceil(-snap(u) / g) - 1  # s <= lo means S < -u
    out = 0.0
    for _ in range(n):
        walk.step()
        out += walk.kill_ge(hi) + walk.kill_le(lo)
        if len(walk.p) == 0:
            break
    return FukNagaevResult(out, bound)


def sign_probabilities(law: IncrementLaw, K: int, trim: float = 1e-30) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """P(S_k > 0), P(S_k < 0), P(S_k = 0) for k = 1..K, plus an error bound.

    Tail entries below ``trim`` are dropped to keep the state count at
    O(sqrt k); the dropped mass is included in the returned bound.
    """
    walk = _Walk(law, trim=trim)
    pos, neg, zero = np.zeros(K), np.zeros(K), np.zeros(K)
    for k in range(K):
        walk.step()
        neg[k] = walk.mass_le(-1)
        pos[k] = walk.mass_ge(1)
        zero[k] = walk.mass_at(0)
    return pos, neg, zero, walk.err + walk.trimmed


def killed_walk_masses(
    law: IncrementLaw, K: int, kill: str, thresholds, trim: float = 1e-30
) -> Iterator[tuple[int, np.ndarray, float]]:
    """Walks from 0 killed when S_k enters the region ``kill`` in {'le0','lt0','ge0','gt0'}.

    Yields (k, masses, error) for k = 1..K where masses[i] is P(S_k <= t_i)
    for kill in {'le0','lt0'} and P(S_k >= t_i) otherwise, with t_i the
    given thresholds in units of the mesh, and error the accumulated bound.
    """
    walk = _Walk(law, trim=trim)
    t = np.asarray(thresholds, dtype=np.int64)
    lower = kill in ("le0", "lt0")
    for k in range(1, K + 1):
        walk.step()
        if kill == "le0":
            walk.kill_le(0)
        elif kill == "lt0":
            walk.kill_le(-1)
        elif kill == "ge0":
            walk.kill_ge(0)
        elif kill == "gt0":
            walk.kill_ge(1)
        else:
            raise DomainError(f"unknown kill region {kill!r}")
        L = len(walk.p)
        cum = np.concatenate([[0.0], np.cumsum(walk.p)])
        base = k * walk.A
        if lower:
            # number of entries with s <= t
            cnt = np.clip(np.floor_divide(t - base, walk.H) - walk.j0 + 1, 0, L)
            masses = cum[cnt]
        else:
            start = np.clip(-np.floor_divide(-(t - base), walk.H) - walk.j0, 0, L)
            masses = cum[L] - cum[start]
        yield k, masses, walk.err + walk.trimmed
        if L == 0:
            return


# ---------------------------------------------------------------------------
# backward recursion for partial means

def partial_means(law: IncrementLaw, xmax_units: int, ladder) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """W_n(x) = E(x + S_n; tau_x > n) and P(tau_x > n) on the mesh points 0..xmax_units.

    Backward recursion W_{k+1}(x) = sum_s p_s W_k(x+s) 1{x+s >= 0}, closed
    above by W_k(x) = x, P_k(x) = 1 for x >= k * (largest downward step),
    where no path can be killed within k steps. Values are in mesh units.
    """
    if not law.is_lattice:
        raise UnsupportedLaw(f"law {law.name!r} is not a lattice law")
    ladder = sorted({int(n) for n in ladder})
    if not ladder or ladder[0] < 1:
        raise DomainError("ladder entries must be positive")
    steps = law.grid_steps
    probs = law.probs
    down = max(0, -int(steps.min()))
    up = max(0, int(steps.max()))
    W = np.arange(xmax_units + 1, dtype=float)
    P = np.ones(xmax_units + 1)
    out = {}
    for k in range(1, ladder[-1] + 1):
        size = max(xmax_units, k * down) + 1
        # extend the previous arrays by their closed form up to size + up
        ext_len = size + up
        prevW = np.arange(ext_len, dtype=float)
        prevP = np.ones(ext_len)
        prevW[: len(W)] = W
        prevP[: len(P)] = P
        newW = np.zeros(size)
        newP = np.zeros(size)
        for s, p in zip(steps, probs):
            s = int(s)
            lo = max(0, -s)  # x + s >= 0
            if lo >= size:
                continue
            newW[lo:] += p * prevW[lo + s : size + s]
            newP[lo:] += p * prevP[lo + s : size + s]
        W, P = newW, newP
        if k in ladder:
            out[k] = (W[: xmax_units + 1].copy(), P[: xmax_units + 1].copy())
    return out
