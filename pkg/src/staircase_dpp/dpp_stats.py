"""Observables of a determinantal point process given its kernel."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DuplicatePoints, ZeroGauge


@dataclass(frozen=True)
class KernelHandle:
    """evaluator(s1, x1, s2, x2) -> float."""
    evaluator: Callable
    label: str = "kernel"

    def __call__(self, s1, x1, s2, x2):
        return self.evaluator(s1, x1, s2, x2)

    def matrix(self, points):
        return np.array([[self.evaluator(p[0], p[1], q[0], q[1]) for q in points] for p in points], dtype=float)


def finite_handle(model, route="general", **kw):
    from .kernel_finite import kernel
    return KernelHandle(lambda s1, x1, s2, x2: kernel(model, s1, x1, s2, x2, route=route, **kw), f"finite-{route}")


def limit_handle(lp):
    from .kernel_limit import limit_kernel
    return KernelHandle(lambda s1, x1, s2, x2: limit_kernel(lp, s1, x1, s2, x2), f"limit-k{lp.k}")


def sine_handle(c=np.pi / 2):
    from .kernel_limit import sine_kernel
    return KernelHandle(lambda s1, x1, s2, x2: sine_kernel(c, x1, x2), f"sine-{c:.6g}")


def correlation(kh: KernelHandle, points):
    """det(K(p_i, p_j)); the n-point correlation function."""
    pts = [tuple(int(v) for v in p) for p in points]
    if len(set(pts)) != len(pts):
        raise DuplicatePoints(f"repeated point among {pts}")
    if not pts:
        return 1.0
    return float(np.linalg.det(kh.matrix(pts)))


def number_variance(kh: KernelHandle, s, lo, hi):
    """Variance of the number of points in [lo, hi] on line s.

    sum rho1 (1 - rho1) + sum_{x != y} (rho2 - rho1 rho1) collapses to
    tr K - tr K^2 on the interval, with K(x,y)K(y,x) (no symmetry assumed).
    """
    if hi < lo:
        return 0.0
    pts = [(s, x) for x in range(lo, hi + 1)]
    mat = kh.matrix(pts)
    return float(np.trace(mat) - np.sum(mat * mat.T))


def gauge_conjugate(kh: KernelHandle, gauge: Callable, label=None):
    """K_G(p, q) = G(p) / G(q) K(p, q); all correlations are unchanged."""

    def ev(s1, x1, s2, x2):
        g1, g2 = gauge(s1, x1), gauge(s2, x2)
        if g1 == 0 or g2 == 0:
            raise ZeroGauge(f"gauge vanishes at {(s1, x1) if g1 == 0 else (s2, x2)}")
        return g1 / g2 * kh.evaluator(s1, x1, s2, x2)

    return KernelHandle(ev, label or f"{kh.label}-gauged")


def density_profile(kh: KernelHandle, s, x_range):
    return [(int(x), float(kh(s, x, s, x))) for x in x_range]
