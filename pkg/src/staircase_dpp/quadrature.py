"""Contour quadrature for the integrals that are not coefficient extractions.

Both rules return ``(1/2 pi i) * integral f(z) dz``.  Integrands are called on
arrays of complex nodes and may return extra trailing axes (vector-valued
integrands), in which case the result is an array.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence

DEFAULT_TOL = 1e-10
NODE_CAP = 2 ** 14
_GL_ORDER = 32
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class ArcSpec:
    """Arc radius*e^{i theta}, |theta| <= half_angle (default pi/k)."""
    k: int = 1
    radius: float = 1.0
    half_angle: float | None = None

    @property
    def theta(self):
        return np.pi / self.k if self.half_angle is None else self.half_angle


@dataclass(frozen=True)
class CircleSpec:
    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")


@dataclass
class QuadResult:
    value: complex | np.ndarray
    err: float
    nodes: int
    history: list


def _arc_estimate(f, arc, panels):
    a = arc.theta
    edges = np.linspace(-a, a, panels + 1)
    h = (edges[1] - edges[0]) / 2
    mids = (edges[:-1] + edges[1:]) / 2
    theta = (mids[:, None] + h * _GL_X[None, :]).ravel()
    w = np.tile(_GL_W * h, panels)
    z = arc.radius * np.exp(1j * theta)
    vals = np.asarray(f(z))
    # (1/2 pi i) f(z) dz with dz = i z dtheta
    weights = w * z / (2 * np.pi)
    return np.tensordot(weights, vals, axes=(0, 0))


def _maxabs(v):
    return float(np.max(np.abs(v))) if np.ndim(v) else abs(v)


def arc_quad(f, arc: ArcSpec, tol=DEFAULT_TOL, cap=NODE_CAP) -> QuadResult:
    """Composite Gauss-Legendre on the angle, doubling panels until successive
    estimates differ by less than tol."""
    panels = 1
    prev = _arc_estimate(f, arc, panels)
    history = []
    while True:
        panels *= 2
        cur = _arc_estimate(f, arc, panels)
        diff = _maxabs(cur - prev)
        history.append(diff)
        if diff < tol:
            return QuadResult(cur, diff, panels * _GL_ORDER, history)
        if panels * _GL_ORDER * 2 > cap:
            raise NoConvergence(f"arc quadrature stalled at {panels * _GL_ORDER} nodes, diff {diff:.2e}",
                                cur, diff)
        prev = cur


def arc_integral(f, arc: ArcSpec, tol=DEFAULT_TOL):
    return arc_quad(f, arc, tol).value


def circle_quad(f, circle: CircleSpec, tol=DEFAULT_TOL, cap=NODE_CAP, start=32) -> QuadResult:
    """Trapezoid rule on a circle with node doubling."""

    def est(n):
        theta = 2 * np.pi * np.arange(n) / n
        u = circle.radius * np.exp(1j * theta)
        vals = np.asarray(f(circle.center + u))
        return np.tensordot(u / n, vals, axes=(0, 0))

    n = start
    prev = est(n)
    history = []
    while True:
        n *= 2
        cur = est(n)
        diff = _maxabs(cur - prev)
        history.append(diff)
        if diff < tol:
            return QuadResult(cur, diff, n, history)
        if 2 * n > cap:
            raise NoConvergence(f"circle quadrature stalled at {n} nodes, diff {diff:.2e}", cur, diff)
        prev = cur


def circle_integral(f, circle: CircleSpec, tol=DEFAULT_TOL):
    return circle_quad(f, circle, tol).value


def default_beta_radius(beta, k, alphas=()):
    """Radius of the small circle around beta used for the degenerate-beta route.

    Keeps the circle inside the unit disk, away from the other roots
    beta*omega^j of w^k = beta^k (only present when k > 1) and away from 1/alpha.
    """
    b = abs(beta)
    cands = [1 - b]
    if k > 1:
        cands.append(abs(1 - np.exp(2j * np.pi / k)) / 2)
    al = [abs(a) for a in alphas if a != 0]
    if al:
        cands.append(0.5 * (min(1 / a for a in al) - b))
    return b * min(cands)
