import itertools

import numpy as np
import pytest

from staircase_dpp.model import check_config, path_weight, validate
from staircase_dpp.oracle import (TransferOracle, TruncationSpec, dense_partition_function,
                                  enumerate_configs, oracle_correlation, partition_function, sample_paths)


def mk(k, l, a, b):
    n = len(k)
    return validate(dict(n=n, k=k, l=l, alpha=a, beta=b))


def test_single_walker_partition():
    q = 0.6
    m = mk([0], [0], [q], [q])
    z, tail = partition_function(m, TruncationSpec(40))
    assert abs(z - 1 / (1 - q * q)) <= tail * z + 1e-14
    assert partition_function(m, TruncationSpec(0))[0] == 1.0


def test_two_walker_partition_brute_force():
    m = mk([0, 1], [0, 1], [0.5, 0.5], [0.5, 0.5])
    M = 30
    z, _ = partition_function(m, TruncationSpec(M))
    states = [(a, b) for a in range(M + 1) for b in range(a + 1, M + 1)]
    x1 = np.array([s[0] for s in states])[:, None]
    x2 = np.array([s[1] for s in states])[:, None]
    y1, y2 = x1.T, x2.T

    def t(r, xa, yb, up):
        d = yb - xa if up else xa - yb
        return np.where(d >= 0, r ** np.abs(d), 0.0)

    vec = np.array([1.0 if s == (0, 1) else 0.0 for s in states])
    for ell in range(1, 5):
        r, up = 0.5, ell <= 2
        det = t(r, x1, y1, up) * t(r, x2, y2, up) - t(r, x1, y2, up) * t(r, x2, y1, up)
        vec = vec @ det
    assert z == pytest.approx(vec[states.index((0, 1))], rel=1e-12)


@pytest.mark.parametrize("k,l", [([0, 1], [0, 1]), ([0, 2], [0, 1]), ([0, 1, 3], [0, 1, 2])])
def test_factorized_matches_dense_determinant(k, l):
    rng = np.random.default_rng(5)
    m = mk(k, l, list(rng.uniform(0.2, 0.8, len(k))), list(rng.uniform(0.2, 0.8, len(k))))
    M = 7
    assert TransferOracle(m, TruncationSpec(M)).partition_function() == pytest.approx(
        dense_partition_function(m, M), rel=1e-12)


def test_partition_monotone_and_tail_bound():
    m = mk([0, 2], [0, 1], [0.7, 0.6], [0.5, 0.8])
    zs = [TransferOracle(m, TruncationSpec(M)) for M in range(4, 40, 4)]
    vals = [o.partition_function() for o in zs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    z_inf = TransferOracle(m, TruncationSpec(120)).partition_function()
    for o in zs:
        assert (z_inf - o.partition_function()) / o.partition_function() <= o.tail_bound


def test_single_walker_density_closed_form():
    a, b = 0.5, 0.7
    m = mk([0], [0], [a], [b])
    o = TransferOracle(m, TruncationSpec(40))
    rho = o.density(1)
    x = np.arange(20)
    assert np.allclose(rho[:20], (1 - a * b) * (a * b) ** x, atol=o.tail_bound + 1e-14)
    assert o.correlation([(0, 0)]) == pytest.approx(1.0)


def test_density_sums_to_n():
    m = mk([0, 1, 3], [0, 1, 2], [0.4, 0.5, 0.3], [0.6, 0.5, 0.4])
    o = TransferOracle(m, TruncationSpec(30))
    for s in range(7):
        assert o.density(s).sum() == pytest.approx(3, abs=1e-10)


def test_correlation_matches_line_marginals():
    m = mk([0, 2], [0, 1], [0.4, 0.6], [0.5, 0.3])
    o = TransferOracle(m, TruncationSpec(30))
    rho = o.density(2)
    for x in range(6):
        assert o.correlation([(2, x)]) == pytest.approx(rho[x], abs=1e-13)


def test_multi_time_correlation_by_enumeration():
    m = mk([0, 1], [0, 1], [0.3, 0.4], [0.35, 0.25])
    M = 14
    o = TransferOracle(m, TruncationSpec(M))
    configs = list(enumerate_configs(m, M))
    ws = np.array([path_weight(m, h) for h in configs])
    z = ws.sum()
    pts = [(1, 1), (2, 3), (3, 2)]
    brute = sum(w for h, w in zip(configs, ws) if all(x in h[:, s] for s, x in pts)) / z
    assert o.correlation(pts) == pytest.approx(brute, rel=1e-10)


def test_sampling_mean_single_walker():
    m = mk([0], [0], [0.5], [0.5])
    samples = sample_paths(m, TruncationSpec(40), seed=11, count=20000)
    h = np.array([s[0, 1] for s in samples])
    se = h.std() / np.sqrt(h.size)
    assert abs(h.mean() - 1 / 3) < 3 * se


def test_samples_valid_and_deterministic():
    m = mk([0, 2, 4], [0, 1, 2], [2 / 3] * 3, [2 / 3] * 3)
    o = TransferOracle(m, TruncationSpec(25))
    a = o.sample(3, 50)
    b = o.sample(3, 50)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)
        check_config(m, x)
    assert any(not np.array_equal(x, y) for x, y in zip(a, o.sample(4, 50)))


def test_sample_histogram_chi_square():
    from scipy.stats import chisquare
    m = mk([0, 1], [0, 1], [0.4, 0.6], [0.4, 0.6])
    o = TransferOracle(m, TruncationSpec(40))
    samples = o.sample(2024, 4000)
    counts = np.zeros(41)
    for h in samples:
        counts[h[:, 1]] += 1
    expect = o.density(1) * len(samples)
    keep = expect > 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expect[keep], expect[~keep].sum())
    exp *= obs.sum() / exp.sum()
    assert chisquare(obs, exp).pvalue > 0.01


def test_variance_by_enumeration():
    m = mk([0, 1], [0, 1], [0.3, 0.4], [0.35, 0.25])
    M = 14
    o = TransferOracle(m, TruncationSpec(M))
    configs = list(enumerate_configs(m, M))
    ws = np.array([path_weight(m, h) for h in configs])
    cnt = np.array([np.sum((h[:, 1] >= 1) & (h[:, 1] <= 3)) for h in configs])
    p = ws / ws.sum()
    var = (p * cnt ** 2).sum() - (p * cnt).sum() ** 2
    assert o.number_variance(1, 1, 3) == pytest.approx(var, rel=1e-10)


def test_batched_correlations_match():
    m = mk([0, 2], [0, 1], [0.3, 0.4], [0.35, 0.25])
    o = TransferOracle(m, TruncationSpec(20))
    pts = [(1, 0), (1, 2), (2, 1), (3, 3), (4, 0)]
    sets = [[p] for p in pts] + [[pts[i], pts[j]] for i in range(5) for j in range(i + 1, 5)] + [pts[:3], pts[2:]]
    assert o.correlations(sets) == pytest.approx([o.correlation(s) for s in sets], rel=1e-13, abs=1e-300)
