"""Finite-N correlation kernel K(s1, x1; s2, x2) by three independent routes.

* ``kernel_general``: alternant formula for distinct betas (the simple form
  when s1, s2 <= N, the full bi-orthogonalized form otherwise).
* ``kernel_equal_spacing``: k_j = k(j-1); a residue sum for distinct betas, or
  the double contour integral when all betas coincide.
* ``em_reference``: plain Eynard-Mehta with a numerically inverted Gramm matrix.

Circle integrals around the origin are Taylor/Laurent coefficients.  The only
quadrature is the small circle around a repeated beta.
"""
from __future__ import annotations

from functools import lru_cache
from math import comb

import numpy as np

from .errors import DegenerateBeta, DomainError, NoConvergence, SingularGramm
from .model import ValidatedModel
from .quadrature import DEFAULT_TOL, CircleSpec, circle_quad, default_beta_radius
from .series import (alternant, complete_homogeneous, mult_geometric,
                     poly_mul_linear, substituted_alternant)

GRAMM_COND_MAX = 1e12
ROUTES = ("general", "equal", "em")


# ---------------------------------------------------------------------------
# Laurent coefficients of products of F_ell

def laurent_coeff(pos_poly, up_rates, neg_poly, down_rates, d):
    """[z^d] P(z) prod(1 - a z)^{-1} * Q(1/z) prod(1 - b/z)^{-1} on |z| = 1.

    Equals sum_m A_{d+m} B_m with A, B the Taylor coefficients of the two
    factors; the sum is cut once it is stable to double precision.
    """
    pos_poly = np.atleast_1d(np.asarray(pos_poly, dtype=float))
    neg_poly = np.atleast_1d(np.asarray(neg_poly, dtype=float))
    if len(down_rates) == 0 and neg_poly.size == 1:
        if d < 0:
            return 0.0
        c = np.zeros(d + 1)
        c[: min(d + 1, pos_poly.size)] = pos_poly[: d + 1]
        return float(mult_geometric(c, up_rates)[d]) * neg_poly[0]
    length = 64 + neg_poly.size
    prev = None
    while True:
        blen = length
        alen = max(d + blen, 1)
        a = np.zeros(alen)
        a[: min(alen, pos_poly.size)] = pos_poly[:alen]
        a = mult_geometric(a, up_rates)
        b = np.zeros(blen)
        b[: min(blen, neg_poly.size)] = neg_poly[:blen]
        b = mult_geometric(b, down_rates)
        m = np.arange(blen)
        idx = d + m
        ok = (idx >= 0) & (idx < alen)
        val = float(np.dot(a[idx[ok]], b[m[ok]]))
        if prev is not None and abs(val - prev) <= 1e-17 * max(1.0, abs(val)):
            return val
        if length > 1 << 16:
            raise NoConvergence("Laurent coefficient series did not settle", val, abs(val - prev))
        prev = val
        length *= 2


def _up_rates(model, a, b):
    """alphas of up steps in (a, b]."""
    return [model.alpha[ell - 1] for ell in range(a + 1, min(b, model.n) + 1)]


def _down_rates(model, a, b):
    """betas of down steps in (a, b]."""
    n = model.n
    return [model.beta[2 * n - ell] for ell in range(max(a, n) + 1, b + 1)]


def transfer(model, a, b, x, y):
    """[z^{y-x}] prod_{ell=a+1}^{b} F_ell(z): weight of one walk from (a, x) to (b, y)."""
    return laurent_coeff([1.0], _up_rates(model, a, b), [1.0], _down_rates(model, a, b), y - x)


def _check_query(model, s1, x1, s2, x2):
    n = model.n
    for s in (s1, s2):
        if not 0 <= s <= 2 * n:
            raise DomainError("LineRange", f"s={s} outside [0, {2 * n}]")


def _indicator_term(model, s1, x1, s2, x2):
    if s1 <= s2:
        return 0.0
    if s1 <= model.n:
        return -complete_homogeneous(x1 - x2, model.alpha[s2:s1])
    return -transfer(model, s2, s1, x2, x1)


# ---------------------------------------------------------------------------
# Eynard-Mehta reference

@lru_cache(maxsize=64)
def _em_data(model):
    n = model.n
    g = np.array([[transfer(model, 0, 2 * n, ki, lj) for lj in model.l] for ki in model.k])
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > GRAMM_COND_MAX:
        raise SingularGramm(f"Gramm matrix condition number {cond:.3e}")
    return g, np.linalg.inv(g).T


def gramm_matrix(model):
    return _em_data(model)[0].copy()


def em_reference(model: ValidatedModel, s1, x1, s2, x2):
    _check_query(model, s1, x1, s2, x2)
    n = model.n
    _, ginv_t = _em_data(model)
    phi = np.array([transfer(model, 0, s1, ki, x1) for ki in model.k])
    psi = np.array([transfer(model, s2, 2 * n, x2, lj) for lj in model.l])
    return _indicator_term(model, s1, x1, s2, x2) + float(phi @ ginv_t @ psi)


# ---------------------------------------------------------------------------
# general alternant formula

@lru_cache(maxsize=64)
def _general_data(model):
    if not model.beta_distinct:
        raise DegenerateBeta("the alternant formula needs pairwise distinct betas")
    n = model.n
    beta = np.array(model.beta)
    hk = alternant(model.k, beta)
    polys = [substituted_alternant(model.k, beta, j) for j in range(1, n + 1)]
    return hk, polys


@lru_cache(maxsize=64)
def _kernel0_data(model):
    n = model.n
    beta = np.array(model.beta)
    if np.any(beta == 0):
        raise DomainError("NonzeroBeta", "the full formula divides by beta")
    hk, polys = _general_data(model)
    hl = alternant(model.l, 1 / beta)
    qpolys = [substituted_alternant(model.l, 1 / beta, j) for j in range(1, n + 1)]
    pref = np.empty(n)
    for j in range(n):
        pref[j] = np.prod(1 - np.array(model.alpha) * beta[j]) * np.prod(
            np.delete(1 - beta / beta[j], j)) / (hk * hl)
    return pref, polys, qpolys


def gramm_tilde(model):
    """Gramm matrix of the bi-orthogonalized boundary functions."""
    n = model.n
    _, polys, qpolys = _kernel0_data(model)
    up, down = _up_rates(model, 0, 2 * n), _down_rates(model, 0, 2 * n)
    return np.array([[laurent_coeff(polys[i], up, qpolys[j], down, 0) for j in range(n)] for i in range(n)])


def gramm_tilde_diagonal(model):
    """Closed-form diagonal of gramm_tilde."""
    beta = np.array(model.beta)
    hk = alternant(model.k, beta)
    hl = alternant(model.l, 1 / beta)
    out = []
    for j in range(model.n):
        den = np.prod(1 - np.array(model.alpha) * beta[j]) * np.prod(np.delete(1 - beta / beta[j], j))
        out.append(hk * hl / den)
    return np.array(out)


def kernel_general(model: ValidatedModel, s1, x1, s2, x2):
    _check_query(model, s1, x1, s2, x2)
    n = model.n
    if s1 <= n and s2 <= n:
        hk, polys = _general_data(model)
        beta = np.array(model.beta)
        alpha = np.array(model.alpha)
        total = 0.0
        if x1 >= 0:
            for j in range(n):
                c = np.zeros(x1 + 1)
                c[: min(x1 + 1, polys[j].size)] = polys[j][: x1 + 1]
                zint = mult_geometric(c, alpha[:s1])[x1] / hk
                total += zint * np.prod(1 - alpha[:s2] * beta[j]) * beta[j] ** x2
        return _indicator_term(model, s1, x1, s2, x2) + float(total)
    pref, polys, qpolys = _kernel0_data(model)
    up1, down1 = _up_rates(model, 0, s1), _down_rates(model, 0, s1)
    up2, down2 = _up_rates(model, s2, 2 * n), _down_rates(model, s2, 2 * n)
    total = 0.0
    for j in range(n):
        phi = laurent_coeff(polys[j], up1, [1.0], down1, x1)
        psi = laurent_coeff([1.0], up2, qpolys[j], down2, -x2)
        total += pref[j] * phi * psi
    return _indicator_term(model, s1, x1, s2, x2) + total


# ---------------------------------------------------------------------------
# equally spaced starting points

def _spacing(model, k):
    if k is not None:
        if model.n > 1 and model.spacing != k:
            raise DomainError("EqualSpacing", f"start offsets are not 0, {k}, 2*{k}, ...")
        return k
    if model.spacing is not None:
        return model.spacing
    if model.n == 1:
        return 1
    raise DomainError("EqualSpacing", "start offsets are not equally spaced")


@lru_cache(maxsize=64)
def _equal_distinct_data(model, k):
    n = model.n
    bk = np.array(model.beta) ** k
    polys = []
    for j in range(n):
        p = np.array([1.0])
        for ell in range(n):
            if ell != j:
                factor = np.zeros(k + 1)
                factor[0], factor[k] = -bk[ell], 1.0
                p = np.convolve(p, factor)
        polys.append(p / np.prod(np.delete(bk[j] - bk, j)))
    return polys


def _degenerate_poly(beta, k, n):
    """Coefficients of (z^k - beta^k)^N."""
    out = np.zeros(k * n + 1)
    for i in range(n + 1):
        out[k * i] = comb(n, i) * (-(beta ** k)) ** (n - i)
    return out


def _m_count(n, k, beta, amax):
    """Number of terms of the 1/(z^k - w^k) expansion needed for ~1e-30 relative accuracy."""
    rate = abs(beta) * max(amax, 1e-3)
    logt = [n * np.log(k * m + n) + k * m * np.log(rate) for m in range(1, 100000)]
    peak = int(np.argmax(logt))
    for m in range(peak, len(logt)):
        if logt[m] < logt[peak] - 70:
            return m + 2
    return len(logt)


class DegenerateEvaluator:
    """Kernel second term for beta_r = beta (all equal), equal spacing k.

    The double integral is expanded as sum_m c_m A_{x1 + k(m+1)} where
    A = Taylor coefficients of (z^k - beta^k)^N prod_{l<=s1}(1 - alpha_l z)^{-1}
    and c_m = k/(2 pi i) int_{Gamma_beta} p(w) w^{x2+k-1+km} / (w^k - beta^k)^N dw.

    ``method="quadrature"`` evaluates c_m with the trapezoid rule on the small
    circle around beta.  ``method="residue"`` takes the residue at w = beta
    from its Taylor expansion in multiprecision; for large N both the circle
    rule and double precision lose ~N digits to cancellation, so the residue
    route raises precision until two precisions agree.
    """

    def __init__(self, model, k, method="residue", tol=DEFAULT_TOL):
        self.model, self.k, self.method, self.tol = model, k, method, tol
        self.n = model.n
        self.beta = model.beta[0]
        self.alpha = np.array(model.alpha)

    def _setup(self, s1, s2):
        amax = float(np.max(np.abs(self.alpha[:max(s1, 1)]))) if s1 else 0.0
        return _m_count(self.n, self.k, self.beta, amax)

    # -- double precision quadrature ------------------------------------
    def _quad_value(self, s1, x1, s2, x2):
        n, k, beta = self.n, self.k, self.beta
        r = default_beta_radius(beta, k, self.alpha[: max(s1, s2)])
        mc = self._setup(s1, s2)
        need = x1 + k * (mc + 1) + 1
        a = np.zeros(need)
        dp = _degenerate_poly(beta, k, n)
        a[: min(need, dp.size)] = dp[:need]
        a = mult_geometric(a, self.alpha[:s1])
        pc = poly_mul_linear([1.0], self.alpha[:s2])
        ms = np.arange(mc)

        def f(w):
            w = w[:, None]
            return k * np.polyval(pc[::-1], w) * w ** (x2 + k - 1) / (w ** k - beta ** k) ** n * w ** (k * ms[None, :])

        res = circle_quad(f, CircleSpec(beta, r), tol=self.tol)
        idx = x1 + k * (ms + 1)
        return float(np.dot(res.value.real, a[idx])), res.err * float(np.abs(a[idx]).sum())

    # -- multiprecision residue -----------------------------------------
    def _mp_zcoeffs(self, s1, need, dps):
        import mpmath as mp
        n, k = self.n, self.k
        with mp.workdps(dps):
            beta = mp.mpf(self.beta)
            a = [mp.mpf(0)] * need
            for i in range(n + 1):
                if k * i < need:
                    a[k * i] = mp.binomial(n, i) * (-(beta ** k)) ** (n - i)
            for al in self.alpha[:s1]:
                al = mp.mpf(al)
                for j in range(1, need):
                    a[j] += al * a[j - 1]
            return a

    def _mp_base(self, s2, dps):
        """Taylor coefficients at w = beta of p(w) * (t / (w^k - beta^k))^N, t = w - beta."""
        import mpmath as mp
        n, k = self.n, self.k
        with mp.workdps(dps):
            beta = mp.mpf(self.beta)
            deg = n
            r = [mp.binomial(k, i + 1) * beta ** (k - i - 1) for i in range(k)] + [mp.mpf(0)] * deg
            r = r[:deg]
            inv = [mp.mpf(0)] * deg
            inv[0] = 1 / r[0]
            for i in range(1, deg):
                inv[i] = -mp.fsum(r[j] * inv[i - j] for j in range(1, i + 1)) / r[0]
            rinv_n = _mp_series_pow(inv, n, deg)
            pc = [mp.mpf(1)]
            for al in self.alpha[:s2]:
                al = mp.mpf(al)
                pc = [(pc[i] if i < len(pc) else 0) - al * (pc[i - 1] if i >= 1 else 0) for i in range(len(pc) + 1)]
            pt = [mp.mpf(0)] * deg
            for i, c in enumerate(pc):
                for t in range(min(i, deg - 1) + 1):
                    pt[t] += c * mp.binomial(i, t) * beta ** (i - t)
            return [mp.fsum(pt[i] * rinv_n[t - i] for i in range(t + 1)) for t in range(deg)]

    def _mp_moments(self, base, x2, mc, dps):
        import mpmath as mp
        n, k = self.n, self.k
        deg = n
        out = []
        with mp.workdps(dps):
            beta = mp.mpf(self.beta)
            for m in range(mc):
                e = x2 + k - 1 + k * m
                # k * [t^{N-1}] base(t) (beta + t)^e
                bt = mp.mpf(1)
                acc = mp.mpf(0)
                be = beta ** e
                for t in range(deg):
                    acc += base[deg - 1 - t] * bt * be
                    bt = bt * (e - t) / (t + 1)
                    be = be / beta
                out.append(k * acc)
        return out

    def _mp_grid(self, queries, dps):
        import mpmath as mp
        k = self.k
        smax = max(max(q[0], q[2]) for q in queries)
        amax = float(np.max(np.abs(self.alpha[:smax]))) if smax else 0.0
        mc = _m_count(self.n, k, self.beta, amax)
        x1max = max(q[1] for q in queries)
        need = x1max + k * (mc + 1) + 1
        zc = {s1: self._mp_zcoeffs(s1, need, dps) for s1 in sorted({q[0] for q in queries})}
        bases = {s2: self._mp_base(s2, dps) for s2 in sorted({q[2] for q in queries})}
        moments = {}
        out = []
        with mp.workdps(dps):
            for s1, x1, s2, x2 in queries:
                if x1 < 0:
                    out.append(mp.mpf(0))
                    continue
                key = (s2, x2)
                if key not in moments:
                    moments[key] = self._mp_moments(bases[s2], x2, mc, dps)
                c = moments[key]
                a = zc[s1]
                out.append(mp.fsum(c[m] * a[x1 + k * (m + 1)] for m in range(mc)))
        return out

    def grid(self, queries):
        """Second-term values for a list of (s1, x1, s2, x2); returns (values, err)."""
        queries = [tuple(int(v) for v in q) for q in queries]
        if self.method == "quadrature":
            vals = [self._quad_value(*q) if q[1] >= 0 else (0.0, 0.0) for q in queries]
            return np.array([v[0] for v in vals]), np.array([v[1] for v in vals])
        dps = 30 + self.n
        prev = self._mp_grid(queries, dps)
        while True:
            dps += 20 + self.n // 2
            cur = self._mp_grid(queries, dps)
            vals = np.array([float(c) for c in cur])
            diff = np.array([abs(float(c - p)) for c, p in zip(cur, prev)])
            if np.all(diff <= 1e-16 * np.maximum(1.0, np.abs(vals))):
                return vals, diff
            if dps > 2000:
                raise NoConvergence("multiprecision residue did not stabilise", vals, diff)
            prev = cur

    def value(self, s1, x1, s2, x2):
        if x1 < 0:
            return 0.0, 0.0
        if self.method == "quadrature":
            return self._quad_value(s1, x1, s2, x2)
        v, e = self.grid([(s1, x1, s2, x2)])
        return float(v[0]), float(e[0])


def _mp_series_pow(c, p, deg):
    out = [c[0] ** 0] + [c[0] * 0] * (deg - 1)
    base = list(c)
    while p:
        if p & 1:
            out = _mp_conv(out, base, deg)
        p >>= 1
        if p:
            base = _mp_conv(base, base, deg)
    return out


def _mp_conv(a, b, deg):
    import mpmath as mp
    return [mp.fsum(a[i] * b[t - i] for i in range(t + 1)) for t in range(deg)]


def kernel_equal_spacing(model: ValidatedModel, s1, x1, s2, x2, k=None, tol=DEFAULT_TOL,
                         degenerate_method="auto", return_err=False):
    """Equal-spacing kernel, s1, s2 <= N.

    For all-equal betas ``degenerate_method`` picks how the small circle
    around beta is done: "quadrature", "residue" (see DegenerateEvaluator) or
    "auto" (quadrature, falling back to residue on NoConvergence).
    """
    _check_query(model, s1, x1, s2, x2)
    k = _spacing(model, k)
    n = model.n
    if s1 > n or s2 > n:
        raise DomainError("LeftHalf", "the equal-spacing formula needs s1, s2 <= N")
    ind = _indicator_term(model, s1, x1, s2, x2)
    err = 0.0
    if model.beta_distinct:
        polys = _equal_distinct_data(model, k)
        beta = np.array(model.beta)
        alpha = np.array(model.alpha)
        total = 0.0
        if x1 >= 0:
            for j in range(n):
                c = np.zeros(x1 + 1)
                c[: min(x1 + 1, polys[j].size)] = polys[j][: x1 + 1]
                total += mult_geometric(c, alpha[:s1])[x1] * np.prod(1 - alpha[:s2] * beta[j]) * beta[j] ** x2
        val = ind + float(total)
    elif len(set(model.beta)) == 1:
        if degenerate_method == "auto":
            try:
                term, err = DegenerateEvaluator(model, k, "quadrature", tol).value(s1, x1, s2, x2)
            except NoConvergence:
                term, err = DegenerateEvaluator(model, k, "residue", tol).value(s1, x1, s2, x2)
        else:
            term, err = DegenerateEvaluator(model, k, degenerate_method, tol).value(s1, x1, s2, x2)
        val = ind + term
    else:
        raise DegenerateBeta("betas must be all distinct or all equal")
    return (val, err) if return_err else val


def kernel_equal_spacing_grid(model, queries, k=None, tol=DEFAULT_TOL, degenerate_method="residue"):
    """Batch equal-spacing kernel for a list of (s1, x1, s2, x2) queries.

    Returns (values, err_estimates).  For all-equal betas the residue pieces
    are shared across the batch, which is what makes large-N windows cheap.
    """
    k = _spacing(model, k)
    queries = [tuple(int(v) for v in q) for q in queries]
    for q in queries:
        _check_query(model, *q)
        if q[0] > model.n or q[2] > model.n:
            raise DomainError("LeftHalf", "the equal-spacing formula needs s1, s2 <= N")
    ind = np.array([_indicator_term(model, *q) for q in queries])
    if model.beta_distinct or len(set(model.beta)) != 1:
        vals = np.array([kernel_equal_spacing(model, *q, k=k) for q in queries])
        return vals, np.zeros(len(queries))
    second, err = DegenerateEvaluator(model, k, degenerate_method, tol).grid(queries)
    return ind + second, err


def kernel(model, s1, x1, s2, x2, route="general", **kw):
    if route == "general":
        return kernel_general(model, s1, x1, s2, x2)
    if route == "equal":
        return kernel_equal_spacing(model, s1, x1, s2, x2, **kw)
    if route == "em":
        return em_reference(model, s1, x1, s2, x2)
    raise ValueError(f"unknown route {route!r}")
