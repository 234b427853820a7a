"""Exact power-series and alternant algebra.

Every contour integral around the origin of a rational function with poles
away from the circle is a Taylor coefficient; these routines compute such
coefficients by direct convolution, with no quadrature error.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.signal import lfilter

from . import _accel
from .errors import ConditionWarning, DegenerateBeta

COND_THRESHOLD = 1e-8


@_accel.njit
def _geom_mult_nb(c, rates):
    out = c.copy()
    for a in rates:
        for m in range(1, out.shape[0]):
            out[m] += a * out[m - 1]
    return out


def _geom_mult_np(c, rates):
    out = np.array(c, dtype=float)
    for a in rates:
        out = lfilter([1.0], [1.0, -a], out)
    return out


def mult_geometric(coeffs, rates):
    """Truncated coefficients of P(z) * prod_j (1 - rates_j z)^{-1} (same length as coeffs)."""
    c = np.ascontiguousarray(coeffs, dtype=float)
    r = np.ascontiguousarray(rates, dtype=float)
    if c.size == 0 or r.size == 0:
        return c.copy()
    if _accel.USE_NUMBA:
        return _geom_mult_nb(c, r)
    return _geom_mult_np(c, r)


def geometric_coeffs(rates, m_max):
    """[z^m] prod (1 - rate z)^{-1} for m = 0..m_max."""
    if m_max < 0:
        return np.zeros(0)
    c = np.zeros(m_max + 1)
    c[0] = 1.0
    return mult_geometric(c, rates)


def complete_homogeneous(m, rates):
    """h_m(rates) = [z^m] prod (1 - rate z)^{-1}; 0 for m < 0."""
    if m < 0:
        return 0.0
    if m == 0:
        return 1.0
    return float(geometric_coeffs(rates, m)[m])


def poly_mul_linear(coeffs, rates):
    """Coefficients of P(z) * prod (1 - rate z) (full length)."""
    out = np.asarray(coeffs, dtype=float)
    for a in rates:
        out = np.concatenate([out, [0.0]]) - a * np.concatenate([[0.0], out])
    return out


def coeff_of_poly_times_geometric(poly, rates, m):
    """[z^m] P(z) * prod (1 - rate z)^{-1}, with P given by its coefficients."""
    if m < 0:
        return 0.0
    p = np.zeros(m + 1)
    src = np.asarray(poly, dtype=float)[: m + 1]
    p[: src.size] = src
    return float(mult_geometric(p, rates)[m])


def _vandermonde_power(exponents, gamma):
    exps = np.asarray(exponents)
    n = exps.size
    if n == 1:
        return float(np.asarray(gamma, dtype=float)[0] ** exps[0]), True
    k = exps[1] - exps[0]
    if exps[0] != 0 or k <= 0 or not np.array_equal(exps, k * np.arange(n)):
        return None, False
    g = np.asarray(gamma, dtype=float) ** k
    val = 1.0
    for j in range(n):
        for i in range(j):
            val *= g[j] - g[i]
    return val, True


def alternant_with_error(exponents, gamma):
    """Return (det(gamma_j^{k_i}), estimated relative error).

    Equally spaced exponents use the product form (cross-checked against LU);
    otherwise pivoted LU with a condition-number error estimate.
    """
    exps = np.asarray(exponents)
    g = np.asarray(gamma, dtype=float)
    if exps.size != g.size or exps.size == 0:
        raise ValueError("exponents and gamma must have equal nonzero length")
    mat = g[None, :] ** exps[:, None]
    lu_val = float(np.linalg.det(mat))
    with np.errstate(divide="ignore"):
        cond = float(np.linalg.cond(mat)) if exps.size > 1 else 1.0
    lu_err = cond * np.finfo(float).eps * exps.size
    prod_val, ok = _vandermonde_power(exps, g)
    if ok:
        # product form is stable; when LU is also trustworthy the two must agree
        if lu_err < COND_THRESHOLD and abs(lu_val - prod_val) > 1e3 * lu_err * max(abs(prod_val), 1e-300):
            warnings.warn(ConditionWarning("product and LU alternants disagree"), stacklevel=3)
        return prod_val, np.finfo(float).eps * exps.size ** 2
    return lu_val, lu_err


def alternant(exponents, gamma):
    """det(gamma_j^{k_i}); emits ConditionWarning on poor conditioning."""
    val, err = alternant_with_error(exponents, gamma)
    if not np.isfinite(err) or err > COND_THRESHOLD:
        warnings.warn(ConditionWarning(f"alternant relative error estimate {err:.2e}"), stacklevel=2)
    return val


def substituted_alternant(exponents, beta, j):
    """Coefficients of z -> alternant with beta_j replaced by z (j is 1-based).

    Cofactor expansion along column j; degree k_N.
    """
    exps = np.asarray(exponents)
    b = np.asarray(beta, dtype=float)
    n = exps.size
    if len(set(b.tolist())) != n:
        raise DegenerateBeta("betas must be pairwise distinct")
    if not 1 <= j <= n:
        raise IndexError(f"column {j} outside [1, {n}]")
    coeffs = np.zeros(int(exps[-1]) + 1)
    if n == 1:
        coeffs[exps[0]] = 1.0
        return coeffs
    others = np.delete(b, j - 1)
    for i in range(n):
        minor = others[None, :] ** np.delete(exps, i)[:, None]
        coeffs[exps[i]] += (-1) ** (i + j - 1) * np.linalg.det(minor)
    return coeffs


def polyval(coeffs, z):
    """Evaluate sum coeffs[m] z^m (Horner)."""
    out = np.zeros_like(np.asarray(z, dtype=complex if np.iscomplexobj(z) else float))
    for c in np.asarray(coeffs)[::-1]:
        out = out * z + c
    return out
