from math import comb

import numpy as np
import pytest

from staircase_dpp.errors import NoConvergence
from staircase_dpp.quadrature import (ArcSpec, CircleSpec, arc_integral, arc_quad, circle_integral,
                                      circle_quad, default_beta_radius)


def test_arc_of_inverse_z_full_turn():
    assert arc_integral(lambda z: 1 / z, ArcSpec(1)) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_arc_of_constant(k):
    za, zb = np.exp(-1j * np.pi / k), np.exp(1j * np.pi / k)
    assert arc_integral(lambda z: np.ones_like(z), ArcSpec(k)) == pytest.approx((zb - za) / (2j * np.pi), abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("m", [-3, -1, 1, 2, 5])
def test_arc_power(k, m):
    val = arc_integral(lambda z: z ** (-(m + 1)), ArcSpec(k))
    assert val == pytest.approx(np.sin(np.pi * m / k) / (np.pi * m), abs=1e-12)


def test_arc_no_convergence_on_pole():
    with pytest.raises(NoConvergence):
        arc_quad(lambda z: 1 / (z - 1.0 - 1e-13), ArcSpec(2), tol=1e-12)


def test_circle_residues():
    c = 0.3 + 0.1j
    circ = CircleSpec(c, 0.2)
    assert circle_integral(lambda w: 1 / (w - c), circ) == pytest.approx(1, abs=1e-12)
    assert circle_integral(lambda w: 1 / (w - c) ** 2, circ) == pytest.approx(0, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("x", range(0, 9))
def test_circle_leibniz(n, x):
    beta = 0.6
    val = circle_integral(lambda w: w ** x / (w - beta) ** n, CircleSpec(beta, 0.3))
    expect = comb(x, n - 1) * beta ** (x - n + 1) if x >= n - 1 else 0.0
    assert val == pytest.approx(expect, abs=1e-10)


def test_contour_deformation_invariance():
    f = lambda w: w ** 3 / (w - 0.4) ** 2
    vals = [circle_integral(f, CircleSpec(0, r)) for r in (0.5, 0.8, 1.5, 3.0)]
    assert np.allclose(vals, 3 * 0.4 ** 2, atol=1e-10)


def test_doubling_history_monotone():
    res = circle_quad(lambda w: np.exp(w) / (w - 0.2) ** 3, CircleSpec(0.2, 0.5), tol=1e-14)
    h = [d for d in res.history if d > 1e-14]
    assert all(b <= a for a, b in zip(h, h[1:]))
    res = arc_quad(lambda z: 1 / (1 - 0.9 * z) / z ** 3, ArcSpec(3), tol=1e-13)
    h = [d for d in res.history if d > 1e-13]
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_default_radius():
    r = default_beta_radius(2 / 3, 2, [2 / 3, 0.5])
    assert 0 < r < 1 - 2 / 3
    assert default_beta_radius(0.5, 1, [0.5]) > 0
