import itertools

import numpy as np
import pytest

from staircase_dpp.errors import GammaOutOfRange, SingularTerm
from staircase_dpp.kernel_limit import (LimitParams, SaturationParams, constant_gamma, continuous_limit_kernel,
                                        extended_sine, johansson_kernel, johansson_term, johansson_two_term,
                                        johansson_two_term_bound, limit_density, limit_kernel, single_walker_limit)

GAMMAS = (0.4, 0.3, 0.55, 0.2, 0.45, 0.35, 0.5, 0.25, 0.6, 0.4)


def test_k1_equals_extended_sine():
    lp = LimitParams(1, GAMMAS)
    for s1, s2, x1, x2 in itertools.product(range(4), range(4), range(-3, 4), range(-3, 4)):
        assert limit_kernel(lp, s1, x1, s2, x2) == pytest.approx(
            extended_sine(np.pi, GAMMAS, s1, x1, s2, x2), abs=1e-9)


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_start_line(k):
    lp = LimitParams(k, GAMMAS)
    for x1, x2 in itertools.product(range(-2 * k, 2 * k + 1, k), repeat=2):
        assert limit_kernel(lp, 0, x1, 0, x2) == pytest.approx(1.0 if x1 == x2 else 0.0, abs=1e-10)
    for x in range(-k, 2 * k):
        assert limit_density(lp, 0, x) == pytest.approx(1.0 if x % k == 0 else 0.0, abs=1e-10)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("s", [0, 1, 2, 4, 6])
def test_mean_density_and_periodicity(k, s):
    lp = LimitParams(k, GAMMAS)
    vals = [limit_density(lp, s, x) for x in range(-k, 2 * k)]
    for start in range(0, 2 * k):
        assert np.mean(vals[start:start + k]) == pytest.approx(1 / k, abs=1e-10)
    for x in range(-k, k):
        assert vals[x + k] == pytest.approx(vals[x + 2 * k], abs=1e-10)
    for x in range(3):
        assert limit_kernel(lp, s, x, s, x) == pytest.approx(limit_density(lp, s, x), abs=1e-10)


def test_k1_density_constant():
    lp = LimitParams(1, GAMMAS)
    assert limit_density(lp, 3, 5) == pytest.approx(1.0)


def test_gamma_range_rejected():
    with pytest.raises(GammaOutOfRange):
        LimitParams(2, (0.5, 1.2))
    with pytest.raises(GammaOutOfRange):
        limit_kernel(LimitParams(2, (0.5,)), 3, 0, 0, 0)


def test_determinantal_positivity():
    lp = LimitParams(2, GAMMAS)
    grid = [(s, x) for s in (1, 2) for x in range(-2, 3)]
    for size in (1, 2, 3):
        for pts in itertools.combinations(grid, size):
            mat = np.array([[limit_kernel(lp, *p, *q) for q in pts] for p in pts])
            assert np.linalg.det(mat) >= -1e-8


def test_extended_sine_closed_forms():
    c = 1.1
    assert extended_sine(c, [0.3] * 4, 2, 5, 2, 5) == pytest.approx(c / np.pi)
    assert extended_sine(c, [0.3] * 4, 2, 5, 2, 2) == pytest.approx(np.sin(3 * c) / (3 * np.pi))
    for m in range(-3, 4):
        assert extended_sine(c, [0.0] * 4, 1, m, 3, 0) == pytest.approx(
            np.sin(c * m) / (np.pi * m) if m else c / np.pi, abs=1e-12)


def test_continuous_limit_examples():
    assert continuous_limit_kernel(1, 0, 0, 3, 3) == pytest.approx(1.0, abs=1e-12)
    for t in (1, -1, 2):
        assert continuous_limit_kernel(2, 0, 0, 2 * t, 0) == pytest.approx(0.0, abs=1e-12)


def test_discretization_converges_to_continuous():
    k, sig1, sig2, x1, x2 = 2, 0.75, 0.5, 2, 1
    target = continuous_limit_kernel(k, sig1, sig2, x1, x2)
    errs = []
    for S in (8, 16, 32, 64):
        lp = constant_gamma(k, 1 / S, int(sig1 * S))
        errs.append(abs(limit_kernel(lp, int(sig1 * S), x1, int(sig2 * S), x2) - target))
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_johansson_two_term():
    d = 3.0
    sp = SaturationParams(d)
    bound = johansson_two_term_bound(d)
    for e1, e2 in itertools.product(np.linspace(-1, 1, 7), repeat=2):
        assert abs(johansson_kernel(sp, e1, e2) - johansson_two_term(d, e1, e2)) <= bound


def test_johansson_large_d_sine():
    sp = SaturationParams(20.0)
    for e1, e2 in [(0.1, 0.7), (-0.4, 0.3)]:
        sine = np.sin(np.pi * (e1 - e2)) / (np.pi * (e1 - e2))
        assert abs(johansson_kernel(sp, e1, e2) - sine) < 2 / (np.pi * 20.0)


def test_johansson_diagonal_and_singular_term():
    sp = SaturationParams(1.0)
    assert np.isfinite(johansson_kernel(sp, 0.3, 0.3))
    with pytest.raises(SingularTerm):
        johansson_term(1.0, 0, 0.3, 0.3)


def test_single_walker_limit_is_walk_law():
    g = [0.4] * 5
    total = sum(single_walker_limit(g, 3, x, 3, 0) for x in range(200))
    assert total == pytest.approx(1.0)
    assert single_walker_limit(g, 2, -1, 2, 0) == 0
