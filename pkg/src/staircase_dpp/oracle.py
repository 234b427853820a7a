"""Exact transfer-matrix oracle on a truncated state space.

States on a line are strictly increasing N-tuples of heights in [0, M], held
as a dense N-dimensional array indexed by (x_1, ..., x_N) and masked to the
increasing ones.  A one-step transfer det[T(x_i, y_j)] with geometric T is
zero unless the configurations interlace, and equals the product of the
individual weights when they do.  That lets one step be split into N
single-walker sub-steps (bottom walker first on the way up, top walker first
on the way down), each a one-dimensional geometric filter followed by the
ordering mask.  ``dense_transfer`` keeps the plain determinant form for
cross-checks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import _accel
from .errors import DomainError, StateSpaceTooLarge
from .model import ValidatedModel, check_config, transition_matrix
from .series import geometric_coeffs

STATE_CAP = 2 ** 26
RNG_ALGORITHM = "numpy.random.Philox (4x64, 10 rounds)"


@dataclass(frozen=True)
class TruncationSpec:
    max_height: int = 40
    budget: float = math.inf


@_accel.njit
def _geom_rows_nb(a2, r, reverse):
    out = np.empty_like(a2)
    rows, m = a2.shape
    for i in range(rows):
        if reverse:
            acc = 0.0
            for j in range(m - 1, -1, -1):
                acc = a2[i, j] + r * acc
                out[i, j] = acc
        else:
            acc = 0.0
            for j in range(m):
                acc = a2[i, j] + r * acc
                out[i, j] = acc
    return out


def _geom_filter(arr, axis, r, reverse):
    """sum_{x<=y} r^{y-x} arr[x] along axis (or x>=y when reverse)."""
    if _accel.USE_NUMBA:
        moved = np.moveaxis(arr, axis, -1)
        shape = moved.shape
        out = _geom_rows_nb(np.ascontiguousarray(moved).reshape(-1, shape[-1]), float(r), reverse)
        return np.moveaxis(out.reshape(shape), -1, axis)
    if reverse:
        flipped = np.flip(arr, axis=axis)
        return np.flip(lfilter([1.0], [1.0, -r], flipped, axis=axis), axis=axis)
    return lfilter([1.0], [1.0, -r], arr, axis=axis)


def _increasing_mask(n, m1):
    if n == 1:
        return np.ones(m1, dtype=bool)
    grids = np.meshgrid(*([np.arange(m1)] * n), indexing="ij")
    mask = np.ones((m1,) * n, dtype=bool)
    for i in range(n - 1):
        mask &= grids[i] < grids[i + 1]
    return mask


def _substeps(model):
    """Sequence of (line_after, axis, rate, reverse) single-walker updates."""
    n = model.n
    out = []
    for ell in range(1, 2 * n + 1):
        r = model.rate(ell)
        order = range(n) if ell <= n else range(n - 1, -1, -1)
        for axis in order:
            out.append((ell, axis, r, ell > n))
    return out


def free_walker_weights(model, cutoff):
    """For each walker, (total free weight, weight with midpoint height > cutoff)."""
    amax = max(abs(a) for a in model.alpha)
    bmax = max(abs(b) for b in model.beta)
    rho = max(amax * bmax, 1e-300)
    extra = int(np.ceil(80 / max(-np.log(rho), 1e-3))) + 10 * model.n
    hmax = cutoff + max(model.k[-1], model.l[-1]) + extra
    up = geometric_coeffs(np.abs(model.alpha), hmax)
    down = geometric_coeffs(np.abs(model.beta), hmax)
    res = []
    for kj, lj in zip(model.k, model.l):
        h = np.arange(max(kj, lj), hmax + 1)
        terms = up[h - kj] * down[h - lj]
        res.append((terms.sum(), terms[h > cutoff].sum()))
    return res


class TransferOracle:
    """Forward/backward tables for one model at truncation height M."""

    def __init__(self, model: ValidatedModel, tr: TruncationSpec = TruncationSpec()):
        self.model = model
        self.M = M = tr.max_height
        n = model.n
        if model.l[0] < 0:
            raise DomainError("EndNonnegative", "the oracle state space starts at height 0")
        if M < max(model.k[-1], model.l[-1]):
            raise DomainError("TruncationTooLow", f"M={M} below the boundary heights")
        if (M + 1) ** n > STATE_CAP:
            raise StateSpaceTooLarge(f"(M+1)^N = {(M + 1) ** n} exceeds cap {STATE_CAP}")
        self.mask = _increasing_mask(n, M + 1)
        self.steps = _substeps(model)
        self._forward()
        self._backward()
        self.tail_bound = self._tail_bound()
        if self.tail_bound > tr.budget:
            raise DomainError("TailBudget", f"tail bound {self.tail_bound:.3e} exceeds budget {tr.budget}")

    # -- tables ---------------------------------------------------------
    def _start(self):
        a = np.zeros(self.mask.shape)
        a[tuple(self.model.k)] = 1.0
        return a

    def _apply(self, arr, step):
        _, axis, r, rev = step
        return _geom_filter(arr, axis, r, rev) * self.mask

    def _apply_adjoint(self, arr, step):
        _, axis, r, rev = step
        return _geom_filter(arr * self.mask, axis, r, not rev)

    def _forward(self):
        cur = self._start()
        logscale = 0.0
        self.sub_fwd = [(cur, logscale)]
        for st in self.steps:
            cur = self._apply(cur, st)
            mx = np.abs(cur).max()
            if mx > 0:
                cur = cur / mx
                logscale += math.log(mx)
            self.sub_fwd.append((cur, logscale))
        n = self.model.n
        self.fwd = [self.sub_fwd[s * n] for s in range(2 * n + 1)]
        end = tuple(self.model.l)
        val, ls = self.sub_fwd[-1][0][end], self.sub_fwd[-1][1]
        if val == 0:
            raise DomainError("ZeroPartition", "no admissible configuration within truncation")
        self.log_z = ls + math.log(abs(val))
        self.z_sign = math.copysign(1.0, val)

    def _backward(self):
        n = self.model.n
        cur = np.zeros(self.mask.shape)
        cur[tuple(self.model.l)] = 1.0
        logscale = 0.0
        bwd = [None] * (len(self.steps) + 1)
        bwd[-1] = (cur, logscale)
        for idx in range(len(self.steps) - 1, -1, -1):
            cur = self._apply_adjoint(cur, self.steps[idx])
            mx = np.abs(cur).max()
            if mx > 0:
                cur = cur / mx
                logscale += math.log(mx)
            bwd[idx] = (cur, logscale)
        self.bwd = [bwd[s * n] for s in range(2 * n + 1)]

    def _tail_bound(self):
        ww = free_walker_weights(self.model, self.M)
        others = np.prod([w[0] for w in ww[:-1]]) if len(ww) > 1 else 1.0
        return float(others * ww[-1][1] / self.partition_function())

    # -- observables ----------------------------------------------------
    def partition_function(self):
        return self.z_sign * math.exp(self.log_z)

    def line_probabilities(self, s):
        f, lf = self.fwd[s]
        b, lb = self.bwd[s]
        return f * b * self.mask * self.z_sign * math.exp(lf + lb - self.log_z)

    def density(self, s):
        """rho_1(s, x) for x = 0..M."""
        p = self.line_probabilities(s)
        n = self.model.n
        rho = np.zeros(self.M + 1)
        for axis in range(n):
            rho += p.sum(axis=tuple(a for a in range(n) if a != axis))
        return rho

    def _indicator(self, xs):
        n = self.model.n
        ind = np.ones(self.mask.shape, dtype=bool)
        for x in xs:
            hit = np.zeros(self.mask.shape, dtype=bool)
            if 0 <= x <= self.M:
                for axis in range(n):
                    idx = [slice(None)] * n
                    idx[axis] = x
                    hit[tuple(idx)] = True
            ind &= hit
        return ind

    def correlation(self, points):
        """Probability that all (s, x) points are occupied."""
        by_line = {}
        for s, x in points:
            if not 0 <= s <= 2 * self.model.n:
                raise DomainError("LineRange", f"s={s}")
            by_line.setdefault(int(s), []).append(int(x))
        lines = sorted(by_line)
        n = self.model.n
        s0 = lines[0]
        cur, logscale = self.fwd[s0]
        cur = cur * self._indicator(by_line[s0])
        for s in lines[1:]:
            for st in self.steps[(s0 * n):(s * n)]:
                cur = self._apply(cur, st)
            s0 = s
            cur = cur * self._indicator(by_line[s])
        b, lb = self.bwd[s0]
        tot = float((cur * b).sum())
        if tot == 0:
            return 0.0
        return math.copysign(1.0, tot) * self.z_sign * math.exp(math.log(abs(tot)) + logscale + lb - self.log_z)

    def correlations(self, point_sets):
        """``correlation`` over many point sets, sharing propagation work
        between sets whose line-sorted prefixes agree."""
        n = self.model.n
        keyed = []
        for pos, pts in enumerate(point_sets):
            by_line = {}
            for s, x in pts:
                if not 0 <= s <= 2 * n:
                    raise DomainError("LineRange", f"s={s}")
                by_line.setdefault(int(s), set()).add(int(x))
            keyed.append((tuple((s, tuple(sorted(by_line[s]))) for s in sorted(by_line)), pos))
        keyed.sort()
        out = [0.0] * len(keyed)
        cache = {}  # prefix -> (vector after last indicator, logscale); prefix + (s,) -> propagated
        for groups, pos in keyed:
            cache = {key: v for key, v in cache.items() if groups[:len(key)] == key
                     or (key[:-1] == groups[:len(key) - 1] and key[-1] == groups[len(key) - 1][0])}
            state = None
            for depth in range(len(groups), 0, -1):
                if groups[:depth] in cache:
                    state = depth
                    break
            if state is None:
                s0, xs = groups[0]
                cur, logscale = self.fwd[s0]
                cache[groups[:1]] = (cur * self._indicator(xs), logscale)
                state = 1
            for depth in range(state, len(groups)):
                prev, logscale = cache[groups[:depth]]
                s_prev, (s_next, xs) = groups[depth - 1][0], groups[depth]
                pkey = groups[:depth] + (s_next,)
                if pkey not in cache:
                    cur = prev
                    for st in self.steps[(s_prev * n):(s_next * n)]:
                        cur = self._apply(cur, st)
                    cache[pkey] = cur
                cache[groups[:depth + 1]] = (cache[pkey] * self._indicator(xs), logscale)
            cur, logscale = cache[groups]
            b, lb = self.bwd[groups[-1][0]]
            tot = float((cur * b).sum())
            out[pos] = 0.0 if tot == 0 else (math.copysign(1.0, tot) * self.z_sign
                                             * math.exp(math.log(abs(tot)) + logscale + lb - self.log_z))
        return out

    def number_variance(self, s, lo, hi):
        """Variance of the number of points in [lo, hi] on line s."""
        p = self.line_probabilities(s)
        n = self.model.n
        grids = np.meshgrid(*([np.arange(self.M + 1)] * n), indexing="ij")
        count = sum(((g >= lo) & (g <= hi)).astype(float) for g in grids)
        mean = (p * count).sum()
        return float((p * count ** 2).sum() - mean ** 2)

    # -- sampling -------------------------------------------------------
    def sample(self, seed, count):
        """Exact i.i.d. samples by backward sampling through the forward tables."""
        if any(r < 0 for r in self.model.alpha + self.model.beta):
            raise DomainError("NonnegativeRates", "sampling needs nonnegative rates")
        rng = np.random.Generator(np.random.Philox(seed))
        n = self.model.n
        out = []
        xs = np.arange(self.M + 1)
        for _ in range(count):
            state = list(self.model.l)
            heights = np.zeros((n, 2 * n + 1), dtype=np.int64)
            heights[:, -1] = state
            for idx in range(len(self.steps) - 1, -1, -1):
                line, axis, r, rev = self.steps[idx]
                prev = self.sub_fwd[idx][0]
                sl = list(state)
                sl[axis] = slice(None)
                f = prev[tuple(sl)]
                y = state[axis]
                d = (xs - y) if rev else (y - xs)
                w = np.where(d >= 0, float(r) ** np.maximum(d, 0), 0.0)
                prob = f * w
                prob = prob / prob.sum()
                state[axis] = int(rng.choice(self.M + 1, p=prob))
                if axis == (n - 1 if rev else 0):
                    heights[:, line - 1] = state
            out.append(heights)
        return out


def partition_function(model, tr=TruncationSpec()):
    o = TransferOracle(model, tr)
    return o.partition_function(), o.tail_bound


def oracle_correlation(model, tr, points):
    o = TransferOracle(model, tr)
    return o.correlation(points), o.tail_bound


def sample_paths(model, tr, seed, count):
    return TransferOracle(model, tr).sample(seed, count)


def dense_transfer(model, ell, M):
    """Plain LGV transfer det[T_ell(x_i, y_j)] over all increasing tuples <= M."""
    states = list(itertools.combinations(range(M + 1), model.n))
    t = np.zeros((len(states), len(states)))
    for a, x in enumerate(states):
        for b, y in enumerate(states):
            t[a, b] = np.linalg.det(transition_matrix(model, ell, x, y))
    return states, t


def dense_partition_function(model, M):
    """Partition function from the dense determinant transfer matrices."""
    states = None
    vec = None
    for ell in range(1, 2 * model.n + 1):
        states, t = dense_transfer(model, ell, M)
        if vec is None:
            vec = np.array([1.0 if s == tuple(model.k) else 0.0 for s in states])
        vec = vec @ t
    return float(vec[states.index(tuple(model.l))])


def enumerate_configs(model, max_height):
    """All valid path configurations with heights <= max_height (small N only)."""
    n = model.n
    states = list(itertools.combinations(range(max_height + 1), n))

    def nxt(x, ell):
        for y in states:
            if ell <= n:
                if all(y[i] >= x[i] for i in range(n)) and all(y[i] < x[i + 1] for i in range(n - 1)):
                    yield y
            else:
                if all(y[i] <= x[i] for i in range(n)) and all(x[i] < y[i + 1] for i in range(n - 1)):
                    yield y

    def rec(path):
        ell = len(path)
        if ell == 2 * n + 1:
            if path[-1] == tuple(model.l):
                h = np.array(path).T
                check_config(model, h)
                yield h
            return
        for y in nxt(path[-1], ell):
            yield from rec(path + [y])

    yield from rec([tuple(model.k)])
