"""Limit kernels near equidistant starting points and their own limits.

``limit_kernel`` is the interpolating kernel K_k^gamma: an exact indicator
term (a complete homogeneous polynomial) plus k arc integrals over the unit
arc from e^{-i pi/k} to e^{i pi/k}.  The arc integrals depend on x1 - x2 only,
up to the root-of-unity phase omega^{-j x1}, and are cached on that basis.

The unit arc is valid only when every gamma lies in (0, 1); other inputs are
rejected instead of guessing a contour.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import GammaOutOfRange, ImaginaryResidue, SingularTerm
from .quadrature import DEFAULT_TOL, ArcSpec, arc_quad
from .series import complete_homogeneous, poly_mul_linear


@dataclass(frozen=True)
class LimitParams:
    k: int
    gamma: tuple
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in self.gamma))
        if self.k < 1:
            raise ValueError("k must be a positive integer")
        for g in self.gamma:
            if not 0 < g < 1:
                raise GammaOutOfRange(f"gamma={g} outside (0, 1)")

    def prefix(self, s):
        if s > len(self.gamma):
            raise GammaOutOfRange(f"gamma prefix of length {len(self.gamma)} does not cover s={s}")
        return np.array(self.gamma[:s])


def constant_gamma(k, gamma, length, tol=DEFAULT_TOL):
    return LimitParams(k, (gamma,) * length, tol)


@dataclass(frozen=True)
class SaturationParams:
    d: float
    series_tol: float = 1e-16

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError("d must be positive")


@lru_cache(maxsize=4096)
def _arc_terms(lp: LimitParams, s1, s2, m):
    """(1/2 pi i) int_arc prod_{r<=s2}(1-g_r z)/prod_{t<=s1}(1-w^j g_t z) z^{-(m+1)} dz, j=0..k-1."""
    k = lp.k
    num = lp.prefix(s2)
    den = lp.prefix(s1)
    omegas = np.exp(2j * np.pi * np.arange(k) / k)
    def f(z):
        out = np.empty((z.size, k), dtype=complex)
        base = np.zeros(z.shape, dtype=complex)
        for g in num:
            base += np.log1p(-g * z)
        for j, w in enumerate(omegas):
            acc = base.copy()
            for g in den:
                acc -= np.log1p(-w * g * z)
            out[:, j] = np.exp(acc - (m + 1) * np.log(z))
        return out

    res = arc_quad(f, ArcSpec(k), tol=lp.tol / k)
    return res.value, res.err


def _assemble(lp, terms, x1):
    k = lp.k
    phase = np.exp(-2j * np.pi * np.arange(k) * x1 / k)
    return complex(np.dot(phase, terms))


def _real(val, tol, what):
    if abs(val.imag) >= 10 * tol:
        raise ImaginaryResidue(f"{what}: imaginary part {val.imag:.3e}")
    return val.real


def limit_kernel(lp: LimitParams, s1, x1, s2, x2):
    if s1 < 0 or s2 < 0:
        raise ValueError("s1, s2 must be nonnegative")
    m = x1 - x2
    ind = 0.0
    if s1 > s2:
        ind = -complete_homogeneous(m, lp.prefix(s1)[s2:])
    terms, _ = _arc_terms(lp, s1, s2, m)
    return ind + _real(_assemble(lp, terms, x1), lp.tol, "limit kernel")


@lru_cache(maxsize=1024)
def _density_terms(lp, s):
    k = lp.k
    g = lp.prefix(s)
    omegas = np.exp(2j * np.pi * np.arange(1, k) / k)

    def f(z):
        out = np.empty((z.size, k - 1), dtype=complex)
        for i, w in enumerate(omegas):
            acc = np.zeros(z.shape, dtype=complex)
            for gr in g:
                acc += np.log1p(-gr * z) - np.log1p(-w * gr * z)
            out[:, i] = np.exp(acc) / z
        return out

    if k == 1:
        return np.zeros(0)
    return arc_quad(f, ArcSpec(k), tol=lp.tol / k).value


def limit_density(lp: LimitParams, s, x):
    """Mean density 1/k + sum_{j=1}^{k-1} omega^{-jx} (arc integral)."""
    k = lp.k
    terms = _density_terms(lp, s)
    phase = np.exp(-2j * np.pi * np.arange(1, k) * x / k)
    return _real(1 / k + complex(np.dot(phase, terms)), lp.tol, "limit density")


def extended_sine(c, gamma, s, x, t, y, tol=DEFAULT_TOL):
    """Extended discrete sine kernel K^{c,gamma}(s, x; t, y).

    s <= t: arc from e^{-ic} to e^{ic} through +1 of prod_{j=s+1}^t (1-gamma_j z).
    s > t: path through the negative axis of prod_{j=t+1}^s (1-gamma_j z)^{-1},
    computed as (arc through +1) minus (full circle, a Taylor coefficient).
    """
    if not 0 < c <= np.pi:
        raise ValueError("c must lie in (0, pi]")
    m = x - y
    if s == t:
        return float(np.sin(c * m) / (np.pi * m)) if m else c / np.pi
    if s < t:
        poly = poly_mul_linear([1.0], gamma[s:t])

        def f(z):
            return np.polyval(poly[::-1], z) * z ** (-(m + 1))

        return _real(complex(arc_quad(f, ArcSpec(1, half_angle=c), tol).value), tol, "extended sine")
    g = np.asarray(gamma[t:s], dtype=float)
    if np.any(g >= 1) or np.any(g < 0):
        raise GammaOutOfRange("the s > t branch needs gamma in [0, 1)")

    def f(z):
        return np.exp(-np.log1p(-g[None, :] * z[:, None]).sum(axis=1) - (m + 1) * np.log(z))

    arc = complex(arc_quad(f, ArcSpec(1, half_angle=c), tol).value)
    return _real(arc, tol, "extended sine") - complete_homogeneous(m, g)


def sine_kernel(c, x, y):
    m = x - y
    return float(np.sin(c * m) / (np.pi * m)) if m else c / np.pi


def continuous_limit_kernel(k, sigma1, sigma2, x1, x2, tol=DEFAULT_TOL):
    """Continuous-time analogue with exponential clocks."""
    if sigma1 < 0 or sigma2 < 0:
        raise ValueError("sigma must be nonnegative")
    m = x1 - x2
    ind = 0.0
    if sigma1 > sigma2 and m >= 0:
        ind = -((sigma1 - sigma2) ** m) / factorial(m)
    omegas = np.exp(2j * np.pi * np.arange(k) / k)

    def f(z):
        return np.exp((omegas[None, :] * sigma1 - sigma2) * z[:, None] - (m + 1) * np.log(z)[:, None])

    terms = arc_quad(f, ArcSpec(k), tol=tol / k).value
    phase = np.exp(-2j * np.pi * np.arange(k) * x1 / k)
    return ind + _real(complex(np.dot(phase, terms)), tol, "continuous kernel")


def johansson_term(d, j, eta1, eta2):
    """One summand (without the 1/pi); raises SingularTerm at j = 0, eta1 = eta2."""
    den = 1j * (eta2 - eta1) + d * j
    if abs(den) < 1e-14:
        raise SingularTerm("j=0 with eta1 == eta2; use the paired real-part form")
    return np.exp(-np.pi * d * j * (j - 1)) * (np.exp(1j * np.pi * ((2 * j - 1) * eta1 + eta2)) / den).real


def johansson_range(sp: SaturationParams):
    """Symmetric j range with exp(-pi d j(j-1)) >= series_tol."""
    jmax = 1
    while np.exp(-np.pi * sp.d * (jmax + 1) * jmax) >= sp.series_tol:
        jmax += 1
    return range(-(jmax - 1), jmax + 1)


def johansson_kernel(sp: SaturationParams, eta1, eta2):
    """Saturation kernel; the j = 0 term is taken in its real-part form sin(pi delta)/delta."""
    delta = eta2 - eta1
    total = np.sinc(delta)  # (1/pi) Re(e^{i pi delta} / (i delta))
    for j in johansson_range(sp):
        if j == 0:
            continue
        total += johansson_term(sp.d, j, eta1, eta2) / np.pi
    return float(total)


def johansson_two_term(d, eta1, eta2):
    e = eta1 - eta2
    return float(np.sinc(e) + (d * np.cos(np.pi * (eta1 + eta2)) + (eta2 - eta1) * np.sin(np.pi * (eta1 + eta2)))
                 / (np.pi * (d * d + e * e)))


def johansson_two_term_bound(d):
    """Bound on the omitted terms j not in {0, 1}: sum exp(-pi d j(j-1)) / (pi d |j|)."""
    total = 0.0
    for j in list(range(-60, 0)) + list(range(2, 62)):
        total += np.exp(-np.pi * d * j * (j - 1)) / (np.pi * d * abs(j))
    return total


def single_walker_limit(gamma, s1, x1, s2, x2):
    """k -> infinity limit of the conjugated kernel: geometric-step single walker."""
    g = np.asarray(gamma, dtype=float)
    ind = 0.0
    if s1 > s2:
        seg = g[s2:s1]
        ind = -np.prod(1 - seg) * complete_homogeneous(x1 - x2, seg)
    return ind + np.prod(1 - g[:s1]) * complete_homogeneous(x1, g[:s1])


def limit_gammas(xi, beta, alpha, k):
    """gamma_j = (xi/(1-xi))^{1/k} beta alpha_j and the gauge base (xi/(1-xi))^{1/k} beta."""
    g = (xi / (1 - xi)) ** (1 / k) * beta
    return g * np.asarray(alpha, dtype=float), g
