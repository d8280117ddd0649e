"""Gaussian heat kernel on the half-line and its normalisations.

All functions broadcast over numpy arrays and return a float for scalar
input. Cancellation-prone differences go through expm1, and the
removable singularities at the axes are evaluated by short Taylor series.
Symmetries are imposed by evaluating on (|x|, |y|) and restoring signs,
so parity identities hold bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DomainError, QuadratureFailure

SQRT_2PI = math.sqrt(2.0 * math.pi)
L0 = 2.0 / SQRT_2PI  # L(0)
P00 = SQRT_2PI / 2.0  # p(0, 0)

_L_SERIES_CUT = 1e-3
_S_SERIES_CUT = 1e-8


def _ret(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _phi(x):
    return np.exp(-0.5 * np.square(x)) / SQRT_2PI


def gaussian_pdf(t: float, x):
    """phi_t(x), the N(0, t) density."""
    if not t > 0:
        raise DomainError(f"variance must be positive, got {t!r}")
    x = np.asarray(x, dtype=float)
    return _ret(np.exp(-np.square(x) / (2.0 * t)) / math.sqrt(2.0 * math.pi * t))


def gaussian_cdf(x, t: float = 1.0):
    """Phi_t(x); scipy's ndtr is accurate to a few ulp over the real line."""
    if not t > 0:
        raise DomainError(f"variance must be positive, got {t!r}")
    return _ret(special.ndtr(np.asarray(x, dtype=float) / math.sqrt(t)))


def _s(u):
    """(1 - exp(-u)) / u for u >= 0, with s(0) = 1."""
    u = np.asarray(u, dtype=float)
    small = u < _S_SERIES_CUT
    safe = np.where(small, 1.0, u)
    series = 1.0 - u / 2.0 + u * u / 6.0 - u**3 / 24.0
    return np.where(small, series, -np.expm1(-safe) / safe)


def psi(x, y):
    """Heat kernel phi(x - y) - phi(x + y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, ay = np.abs(x), np.abs(y)
    val = -_phi(ax - ay) * np.expm1(-2.0 * ax * ay)
    return _ret(np.sign(x) * np.sign(y) * val)


def psi_t(t: float, x, y):
    """psi_t(x, y) = t^{-1/2} psi(x / sqrt t, y / sqrt t)."""
    if not t > 0:
        raise DomainError(f"time must be positive, got {t!r}")
    r = math.sqrt(t)
    return _ret(np.asarray(psi(np.asarray(x) / r, np.asarray(y) / r)) / r)


def bigH(x):
    """H(x) = 2 Phi(x) - 1, computed as erf(x / sqrt 2)."""
    return _ret(special.erf(np.asarray(x, dtype=float) / math.sqrt(2.0)))


def bigL(x):
    """L(x) = H(x) / x, even, with L(0) = 2 / sqrt(2 pi)."""
    x = np.abs(np.asarray(x, dtype=float))
    small = x < _L_SERIES_CUT
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = L0 * (1.0 - x2 / 6.0 + x2 * x2 / 40.0 - x2**3 / 336.0)
    return _ret(np.where(small, series, special.erf(safe / math.sqrt(2.0)) / safe))


def ell(x, y):
    """One-sided normalised kernel psi(x, y) / H(x); ell(0, y) = y exp(-y^2/2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, ay = np.abs(x), np.abs(y)
    val = _phi(ax - ay) * 2.0 * ay * _s(2.0 * ax * ay) / np.asarray(bigL(ax))
    return _ret(np.sign(y) * val)


def ell_v(v: float, x, y):
    """psi_v(x, y) / H(x) for v in (0, 1]."""
    if not 0 < v <= 1:
        raise DomainError(f"v must lie in (0, 1], got {v!r}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax, ay = np.abs(x), np.abs(y)
    r = math.sqrt(v)
    val = _phi((ax - ay) / r) * (2.0 * ay / v) * _s(2.0 * ax * ay / v) / (r * np.asarray(bigL(ax)))
    return _ret(np.sign(y) * val)


def p_kernel(x, y):
    """Two-sided normalised kernel psi(x, y) / (H(x) H(y))."""
    ax = np.abs(np.asarray(x, dtype=float))
    ay = np.abs(np.asarray(y, dtype=float))
    val = 2.0 * _phi(ax - ay) * _s(2.0 * ax * ay) / (np.asarray(bigL(ax)) * np.asarray(bigL(ay)))
    return _ret(val)


def phi_L(y):
    """exp(-y^2/2) / L(y), the x -> 0 limit of p(x, y)."""
    y = np.asarray(y, dtype=float)
    return _ret(np.exp(-0.5 * y * y) / np.asarray(bigL(y)))


def int_ell(x, u):
    """Integral of ell(x, z) over z in [0, u]: 1 + (Phi(u - x) - Phi(u + x)) / H(x)."""
    x = np.abs(np.asarray(x, dtype=float))
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("upper limit must be nonnegative")
    small = x < _L_SERIES_CUT
    xs = np.where(small, 1.0, x)
    # Phi(u+x) - Phi(u-x) via upper tails keeps accuracy for large u
    band = special.ndtr(-(u - xs)) - special.ndtr(-(u + xs))
    general = 1.0 - band / np.asarray(bigH(xs))
    # small x: band / H(x) = 2 x phi(u) [1 + x^2 (u^2-1)/6 + x^4 (u^4-6u^2+3)/120] / (x L(x))
    u2 = u * u
    x2 = x * x
    series_band = 2.0 * _phi(u) * (1.0 + x2 * (u2 - 1.0) / 6.0 + x2 * x2 * (u2 * u2 - 6.0 * u2 + 3.0) / 120.0)
    near0 = np.where(x == 0.0, -np.expm1(-0.5 * u2), 1.0 - series_band / np.asarray(bigL(x)))
    return _ret(np.where(small, near0, general))


def q_alpha(alpha: float) -> float:
    """Half-width of the diagonal band inside the superlevel set at level alpha."""
    if not 0 < alpha <= 1.0 / SQRT_2PI:
        raise DomainError(f"alpha must lie in (0, 1/sqrt(2 pi)], got {alpha!r}")
    return math.sqrt(max(0.0, -2.0 * math.log(SQRT_2PI * alpha)))


def superlevel_member(alpha: float, x, y):
    """p(x, y) >= alpha."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    res = np.asarray(p_kernel(x, y)) >= alpha
    return bool(res) if res.ndim == 0 else res


# ---------------------------------------------------------------------------
# integral identities used as oracles

def _quad(f: Callable[[float], float], a: float, b: float, points: Sequence[float], tol: float) -> float:
    pts = sorted({p for p in points if a < p < b})
    val, err = integrate.quad(f, a, b, points=pts or None, epsabs=tol / 10.0, epsrel=1e-13, limit=400)
    if err > tol:
        raise QuadratureFailure(f"quadrature error estimate {err:.3g} exceeds {tol:.3g}")
    return val


def semigroup_residual(s: float, t: float, x: float, y: float, tol: float = 1e-10) -> float:
    """|int_0^inf psi_s(x, z) psi_t(z, y) dz - psi_{s+t}(x, y)|."""
    if not (s > 0 and t > 0):
        raise DomainError("s and t must be positive")
    cut = max(abs(x), abs(y)) + 12.0 * math.sqrt(max(s, t))
    lhs = _quad(lambda z: psi_t(s, x, z) * psi_t(t, z, y), 0.0, cut, [abs(x), abs(y)], tol)
    return abs(lhs - psi_t(s + t, x, y))


def gaussian_product_residual(s: float, t: float, x: float, y: float, tol: float = 1e-10) -> float:
    """|int_0^inf phi_s(z - x) phi_t(z - y) dz - phi_{s+t}(x - y) Phi_{st/(s+t)}((tx + sy)/(s+t))|."""
    if not (s > 0 and t > 0):
        raise DomainError("s and t must be positive")
    cut = max(abs(x), abs(y)) + 12.0 * math.sqrt(max(s, t))
    lhs = _quad(lambda z: gaussian_pdf(s, z - x) * gaussian_pdf(t, z - y), 0.0, cut, [x, y], tol)
    rhs = gaussian_pdf(s + t, x - y) * gaussian_cdf((t * x + s * y) / (s + t), s * t / (s + t))
    return abs(lhs - rhs)


def convolution_residual(v: float, x: float, y: float, normalized: bool = False, tol: float = 1e-10) -> float:
    """|int_R phi_v(y - z) K_{1-v}(x, z) dz - K(x, y)| with K = psi, or ell when normalized."""
    if not 0 < v < 1:
        raise DomainError("v must lie in (0, 1)")
    kern = (lambda z: ell_v(1.0 - v, x, z)) if normalized else (lambda z: psi_t(1.0 - v, x, z))
    cut = max(abs(x), abs(y)) + 12.0
    lhs = _quad(lambda z: gaussian_pdf(v, y - z) * kern(z), -cut, cut, [-abs(x), abs(x), y, 0.0], tol)
    target = ell(x, y) if normalized else psi(x, y)
    return abs(lhs - target)


def ell_normalization(x: float, tol: float = 1e-11) -> float:
    """int_0^inf ell(x, y) dy by adaptive quadrature."""
    cut = abs(x) + 12.0
    return _quad(lambda y: ell(x, y), 0.0, cut, [abs(x)], tol) + float(1.0 - int_ell(x, cut))


# ---------------------------------------------------------------------------
# grids and figure data

@dataclass(frozen=True)
class KernelGrid:
    x_values: np.ndarray
    y_values: np.ndarray
    values: np.ndarray
    kind: str = "p"

    def __post_init__(self):
        if self.values.shape != (len(self.x_values), len(self.y_values)):
            raise ValueError("grid values do not match the axes")


_KINDS = {"p": p_kernel, "ell": ell, "psi": psi}


def kernel_grid(xs: Sequence[float], ys: Sequence[float], kind: str = "p") -> KernelGrid:
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return KernelGrid(xs, ys, np.asarray(_KINDS[kind](X, Y)), kind)


def empirical_lipschitz(f: Callable, xs: np.ndarray, ys: np.ndarray, step: float, axis: str = "y") -> float:
    """sup |f(x, y + a) - f(x, y)| / |a| over the grid (or the x-shift when axis='x')."""
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    if axis == "y":
        diff = np.asarray(f(X, Y + step)) - np.asarray(f(X, Y))
    else:
        diff = np.asarray(f(X + step, Y)) - np.asarray(f(X, Y))
    return float(np.max(np.abs(diff)) / abs(step))
