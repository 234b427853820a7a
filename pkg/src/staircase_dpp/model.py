"""Finite-N model of nonintersecting geometric walks with staircase start points.

Lines are indexed in shifted coordinates s = 0..2N: walkers start on line 0 at
heights k_j and end on line 2N at heights l_j.  Step ell (1..2N) happens between
lines ell-1 and ell.  Steps ell <= N jump up with weight alpha_ell^m, steps
ell > N jump down with weight beta_{2N-ell+1}^m.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EndpointsTooHigh, InvalidConfig, StepIndexError


@dataclass(frozen=True)
class ModelParams:
    n: int
    k: tuple
    l: tuple
    alpha: tuple
    beta: tuple

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(int(d["n"]), tuple(int(v) for v in d["k"]), tuple(int(v) for v in d["l"]),
                       tuple(float(v) for v in d["alpha"]), tuple(float(v) for v in d["beta"]))
        except KeyError as exc:
            raise DomainError("MissingField", str(exc)) from None

    def to_dict(self):
        return {"n": self.n, "k": list(self.k), "l": list(self.l),
                "alpha": list(self.alpha), "beta": list(self.beta)}


@dataclass(frozen=True)
class ValidatedModel:
    """Immutable handle produced by :func:`validate`."""
    n: int
    k: tuple
    l: tuple
    alpha: tuple
    beta: tuple
    beta_distinct: bool
    spacing: int | None = None  # k when k_j = k(j-1), else None

    @property
    def params(self):
        return ModelParams(self.n, self.k, self.l, self.alpha, self.beta)

    def rate(self, ell):
        """Geometric rate used on step ell (alpha or beta)."""
        n = self.n
        if not 1 <= ell <= 2 * n:
            raise StepIndexError(f"step {ell} outside [1, {2 * n}]")
        return self.alpha[ell - 1] if ell <= n else self.beta[2 * n - ell]

    def to_dict(self):
        return self.params.to_dict()


def validate(params) -> ValidatedModel:
    if isinstance(params, dict):
        params = ModelParams.from_dict(params)
    n = params.n
    if n < 1:
        raise DomainError("PositiveN", f"n={n}")
    for name in ("k", "l", "alpha", "beta"):
        if len(getattr(params, name)) != n:
            raise DomainError("LengthMismatch", f"{name} has length {len(getattr(params, name))}, expected {n}")
    k, l = params.k, params.l
    if k[0] != 0:
        raise DomainError("StartAtZero", f"k_1={k[0]}")
    if any(a >= b for a, b in zip(k, k[1:])):
        raise DomainError("StartIncreasing", f"k={k}")
    if any(a >= b for a, b in zip(l, l[1:])):
        raise DomainError("EndIncreasing", f"l={l}")
    if l[-1] > n - 1:
        raise EndpointsTooHigh(f"l_N={l[-1]} > N-1={n - 1}")
    for name in ("alpha", "beta"):
        for v in getattr(params, name):
            if not (math.isfinite(v) and abs(v) < 1):
                raise DomainError("RateBelowOne", f"|{name}|={v} not < 1")
    distinct = len(set(params.beta)) == n
    spacing = None
    if n > 1 and all(kj == k[1] * j for j, kj in enumerate(k)):
        spacing = k[1]
    return ValidatedModel(n, tuple(k), tuple(l), tuple(params.alpha), tuple(params.beta),
                          distinct, spacing)


def load_model(path) -> ValidatedModel:
    with open(path) as fh:
        return validate(json.load(fh))


def transition_weight(model: ValidatedModel, ell: int, x1: int, x2: int) -> float:
    """Weight of a single step ell from height x1 to height x2."""
    r = model.rate(ell)
    if ell <= model.n:
        return float(r) ** (x2 - x1) if x2 >= x1 else 0.0
    return float(r) ** (x1 - x2) if x2 <= x1 else 0.0


def transition_matrix(model, ell, xs_from, xs_to):
    xs_from = np.asarray(xs_from)[:, None]
    xs_to = np.asarray(xs_to)[None, :]
    r = model.rate(ell)
    d = xs_to - xs_from if ell <= model.n else xs_from - xs_to
    out = np.zeros(d.shape)
    ok = d >= 0
    out[ok] = float(r) ** d[ok]
    return out


def check_config(model: ValidatedModel, heights) -> np.ndarray:
    """Return heights as an int array or raise InvalidConfig.

    Besides boundary, ordering and monotonicity this enforces interlacing:
    vertical jumps of neighbouring walkers share a half-line, so walker j must
    land below where walker j+1 took off (up phase), and symmetrically in the
    down phase.
    """
    h = np.asarray(heights)
    n = model.n
    if h.shape != (n, 2 * n + 1):
        raise InvalidConfig(f"heights shape {h.shape}, expected {(n, 2 * n + 1)}")
    if not np.issubdtype(h.dtype, np.integer):
        if not np.all(h == np.round(h)):
            raise InvalidConfig("non-integer heights")
        h = h.astype(np.int64)
    if tuple(h[:, 0]) != model.k:
        raise InvalidConfig("column 0 differs from start offsets")
    if tuple(h[:, -1]) != model.l:
        raise InvalidConfig("last column differs from end points")
    if np.any(np.diff(h, axis=0) <= 0):
        raise InvalidConfig("walkers not strictly ordered on some line")
    d = np.diff(h, axis=1)
    if np.any(d[:, :n] < 0) or np.any(d[:, n:] > 0):
        raise InvalidConfig("walk moves against the allowed direction")
    if n > 1:
        up_ok = h[:-1, 1:n + 1] < h[1:, 0:n]
        down_ok = h[:-1, n:2 * n] < h[1:, n + 1:]
        if not (up_ok.all() and down_ok.all()):
            raise InvalidConfig("neighbouring vertical jumps overlap")
    return h


def _product_log_weight(model, h):
    logw = 0.0
    n = model.n
    for ell in range(1, 2 * n + 1):
        r = model.rate(ell)
        m = np.abs(h[:, ell] - h[:, ell - 1]).sum()
        if m:
            if r == 0:
                return -math.inf
            logw += m * math.log(abs(r))
    return logw


def _sign_of_product(model, h):
    sign = 1.0
    for ell in range(1, 2 * model.n + 1):
        r = model.rate(ell)
        m = int(np.abs(h[:, ell] - h[:, ell - 1]).sum())
        if r < 0 and m % 2:
            sign = -sign
    return sign


def lgv_weight(model, h):
    """Product over steps of det[T_ell(x_i(ell-1), x_j(ell))]; the boundary
    determinants are identity matrices because the endpoints are pinned."""
    w = 1.0
    for ell in range(1, 2 * model.n + 1):
        w *= np.linalg.det(transition_matrix(model, ell, h[:, ell - 1], h[:, ell]))
    return w


def path_weight(model: ValidatedModel, heights, check_lgv=False) -> float:
    """Product of transition weights; computed in log space.

    With ``check_lgv`` the determinant form is evaluated as well and must agree.
    """
    h = check_config(model, heights)
    logw = _product_log_weight(model, h)
    w = _sign_of_product(model, h) * math.exp(logw) if logw > -math.inf else 0.0
    if check_lgv:
        w2 = lgv_weight(model, h)
        if abs(w - w2) > 1e-12 * max(1.0, abs(w)):
            raise AssertionError(f"product form {w} != determinant form {w2}")
    return w
