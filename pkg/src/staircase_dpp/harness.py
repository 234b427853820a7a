"""Convergence experiments for the limit theorems, reported as small tables.

Every experiment evaluates a sup-norm error over a fixed query window for a
list of sweep parameters and attaches a verdict.  Sweep points may run in a
thread pool; results are always assembled in parameter order, so reports do
not depend on the thread count.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .kernel_finite import kernel_equal_spacing_grid
from .kernel_limit import (LimitParams, SaturationParams, constant_gamma, extended_sine, johansson_kernel,
                           johansson_two_term, johansson_two_term_bound, limit_density, limit_kernel,
                           single_walker_limit, limit_gammas)
from .dpp_stats import limit_handle, number_variance, sine_handle
from .model import validate
from .quadrature import DEFAULT_TOL


def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


@dataclass
class ConvergenceReport:
    name: str
    param: str
    values: list
    errors: list
    verdict: bool
    criterion: str
    meta: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    table: list = field(default_factory=list)

    @property
    def ratios(self):
        return [b / a if a else math.inf for a, b in zip(self.errors, self.errors[1:])]

    def to_dict(self):
        d = asdict(self)
        d["ratios"] = self.ratios
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, default=float) + "\n"

    def to_csv(self):
        if self.table:
            return write_csv(self.columns, self.table)
        rows = []
        for idx, (v, e) in enumerate(zip(self.values, self.errors)):
            rows.append((v, e, self.ratios[idx - 1] if idx else ""))
        return write_csv([self.param, "error", "ratio"], rows)


def _map(fn, items, threads):
    items = list(items)
    if threads and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


EXACT_FLOOR = 1e-10
ROUNDOFF = 32 * np.finfo(float).eps


def strictly_decreasing(errs, floor=EXACT_FLOOR):
    """Each error below the previous one; pairs already at round-off level count as converged."""
    return all(b < a or (a <= floor and b <= floor) for a, b in zip(errs, errs[1:]))


# finite kernel -> limit kernel ------------------------------------------------

def thm3_window(k, smax=4):
    xs = range(-2 * k, 2 * k + 1)
    return [(s1, x1, s2, x2) for s1 in range(smax + 1) for s2 in range(smax + 1) for x1 in xs for x2 in xs]


def diagonal_window(k, smax=4):
    return [(s, x, s, x) for s in range(smax + 1) for x in range(-2 * k, 2 * k + 1)]


def equal_spacing_model(n, k, alpha, beta):
    alpha = [alpha] * n if np.isscalar(alpha) else list(alpha)[:n]
    return validate({"n": n, "k": [k * j for j in range(n)], "l": list(range(n)),
                     "alpha": alpha, "beta": [beta] * n})


def thm3_errors(n, k, xi, alpha, beta, window, tol=DEFAULT_TOL):
    """Gauge-conjugated finite kernel at height x(N) minus the limit kernel, over the window."""
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    model = equal_spacing_model(n, k, alpha, beta)
    smax = max(max(q[0], q[2]) for q in window)
    gam, g = limit_gammas(xi, beta, model.alpha[:max(smax, 1)], k)
    lp = LimitParams(k, tuple(gam), tol)
    xn = k * round(xi * n)
    queries = [(s1, xn + x1, s2, xn + x2) for s1, x1, s2, x2 in window]
    vals, _ = kernel_equal_spacing_grid(model, queries, k=k, tol=tol)
    lim = np.array([limit_kernel(lp, *q) for q in window])
    conj = np.array([g ** (q[1] - q[3]) for q in window]) * vals
    return np.abs(conj - lim)


def thm3_convergence(k=2, xi=0.5, alpha=2 / 3, beta=2 / 3, n_list=(10, 20, 40), window=None,
                     ratio_bound=0.5, threads=1, tol=DEFAULT_TOL):
    window = window or thm3_window(k)
    errs = _map(lambda n: float(thm3_errors(n, k, xi, alpha, beta, window, tol).max()), n_list, threads)
    ok = strictly_decreasing(errs) and errs[-1] <= max(ratio_bound * errs[0], EXACT_FLOOR)
    return ConvergenceReport("thm3", "N", list(n_list), errs, ok,
                             f"strictly decreasing and last/first <= {ratio_bound}",
                             {"k": k, "xi": xi, "alpha": alpha, "beta": beta, "window_size": len(window)})


# shifted kernel -> extended sine ------------------------------------------------

def prop1_window(smax=2, xmax=3):
    xs = range(-xmax, xmax + 1)
    return [(s1, x1, s2, x2) for s1 in range(smax + 1) for s2 in range(smax + 1) for x1 in xs for x2 in xs]


def prop1_error(k, gamma, bulk, S, window, tol=DEFAULT_TOL):
    smax = max(max(q[0], q[2]) for q in window)
    bulk = tuple(bulk)
    if len(bulk) < smax:
        raise ValueError("bulk gamma sequence shorter than the window")
    lp = LimitParams(k, (gamma,) * S + bulk, tol)
    c = np.pi / k
    return max(abs(limit_kernel(lp, S + s1, x1, S + s2, x2) - extended_sine(c, bulk, s1, x1, s2, x2, tol))
               for s1, x1, s2, x2 in window)


def prop1_convergence(k=2, gamma=0.5, bulk=(0.4, 0.3, 0.55), s_list=(8, 16, 32, 64), window=None,
                      ratio_band=None, threads=1, tol=DEFAULT_TOL):
    window = window or prop1_window()
    errs = _map(lambda S: float(prop1_error(k, gamma, bulk, S, window, tol)), s_list, threads)
    ok = strictly_decreasing(errs)
    crit = "strictly decreasing"
    if ratio_band is not None:
        lo, hi = ratio_band
        ok = ok and all(lo <= r <= hi for r in (b / a for a, b in zip(errs, errs[1:])))
        crit += f", each ratio in [{lo}, {hi}]"
    return ConvergenceReport("prop1", "S", list(s_list), errs, ok, crit,
                             {"k": k, "gamma": gamma, "bulk": list(bulk)})


def prop1_identity_error(gamma_seq, window=None, tol=DEFAULT_TOL):
    """k = 1: the limit kernel is the extended sine kernel with c = pi exactly."""
    window = window or prop1_window(3, 3)
    lp = LimitParams(1, tuple(gamma_seq), tol)
    return max(abs(limit_kernel(lp, *q) - extended_sine(np.pi, gamma_seq, *q, tol)) for q in window)


# large k -> single walker ------------------------------------------------------

def prop2_window(smax=3, xmax=4):
    xs = range(-1, xmax + 1)
    return [(s1, x1, s2, x2) for s1 in range(smax + 1) for s2 in range(smax + 1) for x1 in xs for x2 in xs]


def prop2_error(gammas, k, window, tol=DEFAULT_TOL):
    g = np.asarray(gammas, dtype=float)
    lp = LimitParams(k, tuple(g), tol)
    cum = np.concatenate([[1.0], np.cumprod(1 - g)])
    err = 0.0
    for s1, x1, s2, x2 in window:
        conj = cum[s1] / cum[s2] * limit_kernel(lp, s1, x1, s2, x2)
        err = max(err, abs(conj - single_walker_limit(g, s1, x1, s2, x2)))
    return err


def prop2_convergence(gammas=(0.4,) * 4, k_list=(5, 10, 20, 40), window=None, threads=1, tol=DEFAULT_TOL):
    window = window or prop2_window(len(gammas) - 1)
    errs = _map(lambda k: float(prop2_error(gammas, k, window, tol)), k_list, threads)
    return ConvergenceReport("prop2", "k", list(k_list), errs, strictly_decreasing(errs), "strictly decreasing",
                             {"gammas": list(gammas)})


def rank_one_defect(gammas, s, xs):
    """Largest |2x2 correlation determinant| of the single-walker limit on line s."""
    worst = 0.0
    for x1, x2 in itertools.combinations(xs, 2):
        mat = np.array([[single_walker_limit(gammas, s, a, s, b) for b in (x1, x2)] for a in (x1, x2)])
        worst = max(worst, abs(np.linalg.det(mat)))
    return worst


# saturation scaling -> Johansson kernel -----------------------------------------

def prop3_point(k, gamma, sigma, eta):
    s = round(sigma * k * k)
    if abs(s - sigma * k * k) > 1e-9:
        raise ValueError(f"sigma k^2 = {sigma * k * k} is not an integer")
    return s, int(s * gamma / (1 - gamma) + k * eta)


def prop3_error(k, gamma, sigma, etas, tol=DEFAULT_TOL):
    lp = constant_gamma(k, gamma, round(sigma * k * k), tol)
    sp = SaturationParams(2 * np.pi * sigma * gamma / (1 - gamma) ** 2)
    err = 0.0
    for e1, e2 in etas:
        s, x1 = prop3_point(k, gamma, sigma, e1)
        _, x2 = prop3_point(k, gamma, sigma, e2)
        err = max(err, abs(k * limit_kernel(lp, s, x1, s, x2) - johansson_kernel(sp, e1, e2)))
    return err


def prop3_window(points=(-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75)):
    return list(itertools.product(points, repeat=2))


def prop3_convergence(gamma=0.5, sigma=0.25, k_list=(8, 16, 32), etas=None, threads=1, tol=DEFAULT_TOL):
    etas = etas or prop3_window()
    errs = _map(lambda k: float(prop3_error(k, gamma, sigma, etas, tol)), k_list, threads)
    return ConvergenceReport("prop3", "k", list(k_list), errs, strictly_decreasing(errs), "strictly decreasing",
                             {"gamma": gamma, "sigma": sigma, "d": 2 * np.pi * sigma * gamma / (1 - gamma) ** 2})


def two_term_check(d, etas=None):
    """(max deviation of the two-term form, its tail bound).

    The bound carries a round-off allowance of ROUNDOFF: both sides are O(1)
    sums in double precision, so once the true tail drops below a few ulps the
    computed deviation is rounding noise.
    """
    etas = etas or prop3_window()
    sp = SaturationParams(d)
    dev = max(abs(johansson_kernel(sp, a, b) - johansson_two_term(d, a, b)) for a, b in etas)
    return dev, johansson_two_term_bound(d) + ROUNDOFF


# Number variance -------------------------------------------------------------

def variance_saturation(k=2, gamma=0.5, s_list=(1, 2, 3), l_list=None, late_tol=0.05, threads=1,
                        tol=DEFAULT_TOL):
    """Interval variance of the limit process; lengths are multiples of k so
    that successive values compare like with like."""
    l_list = list(l_list or range(k, 51, k))
    rows, incs, ok = [], [], True

    def run(s):
        kh = limit_handle(constant_gamma(k, gamma, s, tol))
        return [number_variance(kh, s, 0, L - 1) for L in l_list]

    for s, vals in zip(s_list, _map(run, s_list, threads)):
        bound = 4 * s * s
        half = len(vals) // 2
        late = max((abs(b - a) for a, b in zip(vals[half:], vals[half + 1:])), default=0.0)
        incs.append(late)
        ok = ok and max(vals) <= bound and late < late_tol
        rows += [(s, L, v, bound) for L, v in zip(l_list, vals)]
    return ConvergenceReport("variance", "s", list(s_list), incs, ok,
                             f"variance <= 4 s^2 and late increments < {late_tol}",
                             {"k": k, "gamma": gamma}, ["s", "L", "variance", "bound"], rows)


def sine_variance_growth(c, l_list=(10, 20, 30, 40, 50)):
    """Sine-kernel control: variance values and least-squares slope against log L."""
    kh = sine_handle(c)
    vals = [number_variance(kh, 0, 0, L - 1) for L in l_list]
    slope = float(np.polyfit(np.log(l_list), vals, 1)[0])
    return vals, slope


# Figure recipes ----------------------------------------------------------------

FIGURES = {
    "fig5": {"k": 2, "alpha": 2 / 3, "beta": 2 / 3, "n": 50, "s_list": (1, 3, 5, 7)},
    "fig6": {"k": 5, "alpha": 2 / 3, "beta": 2 / 3, "n": 40, "s_list": (1, 5)},
}


def figure_density(k, alpha, beta, n, s_list, tol=DEFAULT_TOL):
    """Leading-order density at positions k*j + x, 0 <= x < k, using the local
    limit with xi = j/n.  Values of xi where some gamma leaves (0, 1), and the
    endpoints xi in {0, 1}, are skipped."""
    rows = []
    for j in range(1, n):
        xi = j / n
        gam, _ = limit_gammas(xi, beta, [alpha] * max(s_list), k)
        if np.any(gam <= 0) or np.any(gam >= 1):
            continue
        lp = LimitParams(k, tuple(gam), tol)
        for s in s_list:
            for x in range(k):
                rows.append((s, k * j + x, xi, x, limit_density(lp, s, x)))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def detect_period(values, max_period=10):
    """Smallest shift p whose mean |v[i+p] - v[i]| is within 10% of the best shift."""
    v = np.asarray(values, dtype=float)
    scores = np.array([np.mean(np.abs(v[p:] - v[:-p])) for p in range(1, max_period + 1)])
    best = scores.min()
    return int(np.argmax(scores <= 1.1 * best + 1e-15)) + 1, scores


def figure_report(name, tol=DEFAULT_TOL):
    cfg = FIGURES[name]
    rows = figure_density(cfg["k"], cfg["alpha"], cfg["beta"], cfg["n"], cfg["s_list"], tol)
    periods, spreads, ok = [], [], True
    for s in cfg["s_list"]:
        dens = [r[4] for r in rows if r[0] == s]
        p, _ = detect_period(dens, max_period=2 * cfg["k"])
        # amplitude of the k-periodic pattern varies with position
        amp = np.array([np.ptp(dens[i:i + cfg["k"]]) for i in range(0, len(dens), cfg["k"])])
        periods.append(p)
        spreads.append(float(amp.max() - amp.min()))
        ok = ok and p == cfg["k"] and spreads[-1] > 1e-3
    return ConvergenceReport(name, "s", list(cfg["s_list"]), spreads, ok,
                             f"detected period == {cfg['k']} and x-dependent amplitude",
                             {**cfg, "s_list": list(cfg["s_list"]), "periods": periods},
                             ["s", "position", "xi", "x", "density"], rows)
