"""Increment laws: lattice pmfs, non-lattice densities, moments and the reversed walk."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .errors import (
    BadProbabilities,
    DegenerateLaw,
    LawError,
    NonZeroMean,
    NotLattice,
    UnsupportedLaw,
)

SNAP = 10**12  # lattice detection works on a 1e-12 grid


@dataclass(frozen=True)
class LatticeSpec:
    """Minimal span and shift with P(X in span*Z + shift) = 1."""

    span_exact: Fraction
    shift_exact: Fraction

    def __post_init__(self):
        if self.span_exact <= 0 or not (0 <= self.shift_exact < self.span_exact):
            raise LawError(f"invalid lattice ({self.span_exact}, {self.shift_exact})")

    @property
    def span(self) -> float:
        return float(self.span_exact)

    @property
    def shift(self) -> float:
        return float(self.shift_exact)

    @property
    def grid(self) -> Fraction:
        """Mesh of the set reachable from 0: gcd(span, shift)."""
        return _frac_gcd([self.span_exact, self.shift_exact])

    def contains(self, z, n: int = 1) -> bool:
        """True when z lies in span*Z + n*shift."""
        q = (snap(z) - n * self.shift_exact) / self.span_exact
        return q.denominator == 1

    def residue(self, z) -> Fraction:
        """{z}_span: the unique u in [0, span) with z = m*span + u."""
        z = snap(z)
        return z - self.span_exact * math.floor(z / self.span_exact)


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    delta: float
    abs_moment: float
    delta1: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True, eq=False)
class IncrementLaw:
    """A centred step distribution.

    Lattice laws carry a finite pmf (``values``/``probs``, sorted by value, plus
    exact rational copies); non-lattice laws carry a density, a quantile
    function used for sampling and a bounded support.
    """

    name: str
    moments: MomentSummary
    lattice: LatticeSpec | None = None
    values: np.ndarray | None = None
    probs: np.ndarray | None = None
    exact_values: tuple[Fraction, ...] = ()
    exact_probs: tuple[Fraction, ...] = ()
    density: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    quantile_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    cdf_fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    support: tuple[float, float] = (0.0, 0.0)

    @property
    def is_lattice(self) -> bool:
        return self.lattice is not None

    @property
    def sigma(self) -> float:
        return self.moments.sigma

    @property
    def max_down(self) -> float:
        """Largest downward jump, max(-X)."""
        return max(0.0, -self.support[0])

    @property
    def max_up(self) -> float:
        return max(0.0, self.support[1])

    @property
    def steps(self) -> np.ndarray:
        """Integer offsets m_i with value_i = shift + span*m_i."""
        lat = self._require_lattice()
        return np.array([int((v - lat.shift_exact) / lat.span_exact) for v in self.exact_values])

    @property
    def grid_steps(self) -> np.ndarray:
        """Values in units of the reachable mesh gcd(span, shift)."""
        g = self._require_lattice().grid
        return np.array([int(v / g) for v in self.exact_values])

    def _require_lattice(self) -> LatticeSpec:
        if self.lattice is None:
            raise UnsupportedLaw(f"law {self.name!r} is not a lattice law")
        return self.lattice

    def prob_below(self, t: float) -> float:
        """P(X < t)."""
        if self.is_lattice:
            return float(self.probs[self.values < t].sum())
        return float(self.cdf(np.asarray(t, dtype=float)))

    def prob_above(self, t: float) -> float:
        """P(X > t)."""
        if self.is_lattice:
            return float(self.probs[self.values > t].sum())
        return float(1.0 - self.cdf(np.asarray(t, dtype=float)))

    def cdf(self, t):
        if self.is_lattice:
            cum = np.concatenate([[0.0], np.cumsum(self.probs)])
            return cum[np.searchsorted(self.values, np.asarray(t, dtype=float), side="right")]
        if self.cdf_fn is not None:
            return self.cdf_fn(np.asarray(t, dtype=float))
        lo, hi = self.support
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([
            0.0 if s <= lo else 1.0 if s >= hi else integrate.quad(self.density, lo, s)[0]
            for s in t
        ])
        return out if out.size > 1 else out[0]

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms in (0, 1) to increments."""
        if self.is_lattice:
            cum = np.cumsum(self.probs)
            cum[-1] = 1.0
            idx = np.searchsorted(cum, u, side="right")
            return self.values[np.minimum(idx, len(self.values) - 1)]
        return self.quantile_fn(u)

    def same_pmf(self, other: "IncrementLaw") -> bool:
        return (
            self.is_lattice
            and other.is_lattice
            and self.exact_values == other.exact_values
            and self.exact_probs == other.exact_probs
        )


def snap(v) -> Fraction:
    """Exact rational on the 1e-12 grid (Fractions and ints pass through)."""
    if isinstance(v, (Fraction, int, np.integer)):
        return Fraction(int(v)) if isinstance(v, np.integer) else Fraction(v)
    return Fraction(round(float(v) * SNAP), SNAP)


def _frac_gcd(values: Iterable[Fraction]) -> Fraction:
    values = [Fraction(v) for v in values if v != 0]
    if not values:
        return Fraction(0)
    den = reduce(math.lcm, (v.denominator for v in values))
    num = reduce(math.gcd, (abs(int(v * den)) for v in values))
    return Fraction(num, den)


def detect_lattice(points: Sequence) -> LatticeSpec:
    """Coarsest (span, shift) lattice supporting the given values.

    ``points`` may hold bare values or ``(value, prob)`` pairs.
    """
    vals = sorted({snap(p[0] if isinstance(p, (tuple, list)) else p) for p in points})
    if len(vals) < 2:
        raise NotLattice("need at least two distinct support points")
    span = _frac_gcd([v - vals[0] for v in vals[1:]])
    if span / (vals[-1] - vals[0]) < Fraction(1, 10**9):
        raise NotLattice("support differences share no usable rational span")
    shift = vals[0] - span * math.floor(vals[0] / span)
    return LatticeSpec(span, shift)


def _parse_number(s) -> Fraction:
    if isinstance(s, str):
        return Fraction(s.strip())
    return snap(s) if isinstance(s, float) else Fraction(s)


def make_lattice_law(points, delta: float = 1.0, name: str = "custom") -> IncrementLaw:
    """Validate a finite pmf and attach its lattice and moments.

    ``points`` is a mapping value -> prob or a sequence of (value, prob) pairs.
    Float probabilities are matched to nearby small-denominator rationals;
    the float pmf is rounded from that exact copy.
    """
    items = list(points.items()) if isinstance(points, dict) else list(points)
    if len(items) < 2:
        raise DegenerateLaw("a lattice law needs at least two support points")
    raw_p = np.array([float(p) for _, p in items])
    if np.any(raw_p <= 0) or abs(raw_p.sum() - 1.0) > 1e-12:
        raise BadProbabilities(f"probabilities must be positive and sum to 1 (sum={raw_p.sum()!r})")

    merged: dict[Fraction, Fraction] = {}
    for v, p in items:
        fv = _parse_number(v)
        fp = p if isinstance(p, Fraction) else _parse_number(p).limit_denominator(10**9)
        merged[fv] = merged.get(fv, Fraction(0)) + fp
    total = sum(merged.values())
    exact_values = tuple(sorted(merged))
    exact_probs = tuple(merged[v] / total for v in exact_values)

    values = np.array([float(v) for v in exact_values])
    probs = np.array([float(p) for p in exact_probs])
    mean = float(np.dot(values, probs))
    if abs(mean) > 1e-10:
        raise NonZeroMean(f"mean {mean!r} is not zero")
    variance = float(np.dot(values**2, probs) - mean**2)
    if variance <= 0:
        raise DegenerateLaw("variance is zero")
    moments = MomentSummary(
        mean=mean,
        variance=variance,
        delta=float(delta),
        abs_moment=float(np.dot(np.abs(values) ** (2 + delta), probs)),
        delta1=min(1.0, float(delta)),
    )
    return IncrementLaw(
        name=name,
        moments=moments,
        lattice=detect_lattice(exact_values),
        values=values,
        probs=probs,
        exact_values=exact_values,
        exact_probs=exact_probs,
        support=(float(values[0]), float(values[-1])),
    )


def make_continuous_law(
    density: Callable,
    quantile: Callable,
    support: tuple[float, float],
    delta: float = 1.0,
    name: str = "custom",
    cdf: Callable | None = None,
    check_samples: int = 100_000,
    seed: int = 0,
) -> IncrementLaw:
    """Non-lattice law on a bounded support, checked by quadrature.

    The sampler (``quantile``) is validated against the density only through
    moment agreement: sample mean and variance must sit within five standard
    errors of their quadrature values.
    """
    lo, hi = map(float, support)

    def moment(f):
        val, _ = integrate.quad(lambda t: f(t) * float(density(t)), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    mass = moment(lambda t: 1.0)
    if abs(mass - 1.0) > 1e-8:
        raise BadProbabilities(f"density integrates to {mass!r}")
    mean = moment(lambda t: t)
    if abs(mean) > 1e-10:
        raise NonZeroMean(f"mean {mean!r} is not zero")
    variance = moment(lambda t: t * t) - mean**2
    if variance <= 0:
        raise DegenerateLaw("variance is zero")
    abs_moment = moment(lambda t: abs(t) ** (2 + delta))
    if not math.isfinite(abs_moment):
        raise LawError("E|X|^(2+delta) is not finite")

    if check_samples:
        from .rng import uniforms

        x = np.asarray(quantile(uniforms(seed, np.arange(check_samples, dtype=np.uint64), 0)), dtype=float)
        se_mean = math.sqrt(variance / check_samples)
        m4 = moment(lambda t: t**4)
        se_var = math.sqrt(max(m4 - variance**2, 0.0) / check_samples)
        if abs(x.mean() - mean) > 5 * se_mean or abs(x.var() - variance) > 5 * se_var:
            raise LawError("sampler moments disagree with the density")

    moments = MomentSummary(mean, variance, float(delta), abs_moment, min(1.0, float(delta)))
    return IncrementLaw(
        name=name,
        moments=moments,
        density=density,
        quantile_fn=quantile,
        cdf_fn=cdf,
        support=(lo, hi),
    )


def reverse(law: IncrementLaw) -> IncrementLaw:
    """Law of -X."""
    name = law.name[len("reverse(") : -1] if law.name.startswith("reverse(") else f"reverse({law.name})"
    if law.is_lattice:
        exact_values = tuple(-v for v in reversed(law.exact_values))
        exact_probs = tuple(reversed(law.exact_probs))
        return IncrementLaw(
            name=name,
            moments=MomentSummary(-law.moments.mean + 0.0, *_tail(law.moments)),
            lattice=detect_lattice(exact_values),
            values=-law.values[::-1],
            probs=law.probs[::-1].copy(),
            exact_values=exact_values,
            exact_probs=exact_probs,
            support=(-law.support[1], -law.support[0]),
        )
    density, quantile, cdf = law.density, law.quantile_fn, law.cdf_fn
    return IncrementLaw(
        name=name,
        moments=MomentSummary(-law.moments.mean + 0.0, *_tail(law.moments)),
        density=lambda t: density(-np.asarray(t)),
        quantile_fn=lambda u: -quantile(1.0 - np.asarray(u)),
        cdf_fn=None if cdf is None else (lambda t: 1.0 - cdf(-np.asarray(t))),
        support=(-law.support[1], -law.support[0]),
    )


def _tail(m: MomentSummary):
    return (m.variance, m.delta, m.abs_moment, m.delta1)


# ---------------------------------------------------------------------------
# built-ins and law files

def _uniform() -> IncrementLaw:
    return make_continuous_law(
        density=lambda t: np.where(np.abs(np.asarray(t)) <= 1.0, 0.5, 0.0),
        quantile=lambda u: 2.0 * np.asarray(u) - 1.0,
        cdf=lambda t: np.clip((np.asarray(t) + 1.0) / 2.0, 0.0, 1.0),
        support=(-1.0, 1.0),
        name="uniform",
    )


BUILTIN_LAWS: dict[str, Callable[[], IncrementLaw]] = {
    "ssrw": lambda: make_lattice_law({-1: Fraction(1, 2), 1: Fraction(1, 2)}, name="ssrw"),
    "trinomial": lambda: make_lattice_law(
        {-1: Fraction(1, 4), 0: Fraction(1, 2), 1: Fraction(1, 4)}, name="trinomial"
    ),
    "skipfree": lambda: make_lattice_law({-1: Fraction(2, 3), 2: Fraction(1, 3)}, name="skipfree"),
    "uniform": _uniform,
}


def parse_law_text(text: str, delta: float = 1.0, name: str = "custom") -> IncrementLaw:
    """Parse line-based ``value prob`` pairs; ``#`` starts a comment."""
    points = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise LawError(f"line {lineno}: expected 'value prob', got {line!r}")
        points.append((Fraction(parts[0]), Fraction(parts[1])))
    return make_lattice_law(points, delta=delta, name=name)


def load_law(ref: str | IncrementLaw, delta: float = 1.0) -> IncrementLaw:
    """Resolve a built-in name or a law-definition file path."""
    if isinstance(ref, IncrementLaw):
        return ref
    if ref in BUILTIN_LAWS:
        return BUILTIN_LAWS[ref]()
    path = Path(ref)
    if not path.exists():
        raise LawError(f"unknown law {ref!r} (not a built-in and no such file)")
    return parse_law_text(path.read_text(), delta=delta, name=path.stem)
