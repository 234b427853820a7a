"""Lozenge tilings in bijection with path configurations (densely packed ends).

Lattice conventions.  Unit squares (u, y) of the plane are cut along the
anti-diagonal from (u, y+1) to (u+1, y), giving a lower-left triangle
D(u, y) and an upper-right triangle T(u, y).  Three lozenge shapes exist:

    a = D(u, y) + T(u, y)        (the square)
    b = T(u, y) + D(u, y+1)      (vertical sides)
    c = T(u, y) + D(u+1, y)      (horizontal sides)

Columns u = 0..N-1 hold the up phase in plain coordinates: a walker climbs
through b tiles and moves right through one c tile per column.  Columns
u = N..2N-1 hold the down phase after the shear x -> x - (s - N): a walker
drops through a tiles and moves diagonally through one c tile.  On the middle
line the c tile entering column N is shared by both pictures.

A lozenge is keyed by ``(type, i, j)`` with (i + N, j) the integer floor of
its centre, so a c tile at key (i, j) sits on line s = N + i at (sheared)
height j.  The region is clipped at height H; above it every tile is forced.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import EndpointsNotPacked, InconsistentTiling, InvalidConfig, StaircaseError
from .model import ValidatedModel, check_config, validate


@dataclass(frozen=True)
class Tiling:
    n: int
    k: tuple
    height: int
    lozenges: tuple  # sorted (type, i, j)

    def counts(self):
        out = {"a": 0, "b": 0, "c": 0}
        for t, _, _ in self.lozenges:
            out[t] += 1
        return out

    def to_dict(self):
        return {"n": self.n, "k": list(self.k),
                "lozenges": [{"type": t, "i": i, "j": j} for t, i, j in self.lozenges]}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        try:
            n = int(d["n"])
            loz = tuple(sorted((str(z["type"]), int(z["i"]), int(z["j"])) for z in d["lozenges"]))
            k = tuple(int(v) for v in d["k"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InconsistentTiling(f"malformed tiling document: {exc}") from None
        if n < 1 or len(loz) % (2 * n):
            raise InconsistentTiling("lozenge count is not a multiple of 2N")
        return cls(n, k, len(loz) // (2 * n), loz)


@dataclass(frozen=True)
class TilingWeightSpec:
    alpha: tuple
    beta: tuple

    @classmethod
    def from_model(cls, model):
        return cls(tuple(model.alpha), tuple(model.beta))

    @classmethod
    def q_volume(cls, n, q):
        if not 0 < q < 1:
            raise ValueError(f"q={q} must lie in (0, 1)")
        r = tuple(q ** (0.5 + n - i) for i in range(1, n + 1))
        return cls(r, r)

    def column_factor(self, i):
        n = len(self.alpha)
        a, b = self.alpha, self.beta
        if -n < i < 0:
            return a[n + i - 1] / a[n + i]
        if i == 0:
            return a[n - 1] * b[n - 1]
        if 0 < i < n:
            return b[n - i - 1] / b[n - i]
        return None


def _packed_model(n, k):
    return validate({"n": n, "k": list(k), "l": list(range(n)),
                     "alpha": [0.5] * n, "beta": [0.5] * n})


def _require_packed(model):
    if tuple(model.l) != tuple(range(model.n)):
        raise EndpointsNotPacked(f"l={model.l}; the tiling picture needs l_j = j-1")


def _key(kind, u, y, n):
    if kind == "a":
        return ("a", u - n, y)
    if kind == "b":
        return ("b", u - n, y + 1)
    return ("c", u + 1 - n, y)


def _cell(key, n):
    kind, i, j = key
    if kind == "a":
        return kind, i + n, j
    if kind == "b":
        return kind, i + n, j - 1
    return kind, i + n - 1, j


def _triangles(kind, u, y):
    if kind == "a":
        return (("D", u, y), ("T", u, y))
    if kind == "b":
        return (("T", u, y), ("D", u, y + 1))
    return (("T", u, y), ("D", u + 1, y))


def walker_tiles(n, h):
    """Ordered (type, u, y) tiles traversed by each walker."""
    out = []
    for row in h:
        tiles = []
        for u in range(n):
            tiles += [("b", u, y) for y in range(row[u], row[u + 1])]
            tiles.append(("c", u, int(row[u + 1])))
        for u in range(n, 2 * n):
            hi = int(row[u]) - (u - n)
            lo = int(row[u + 1]) - (u + 1 - n)
            tiles += [("a", u, y) for y in range(hi - 1, lo, -1)]
            tiles.append(("c", u, lo))
        out.append(tiles)
    return out


def domain_triangles(n, k, height):
    """Triangles of the clipped domain as a set of (kind, u, y)."""
    cut = set(k)
    tri = set()
    for u in range(n):
        for y in range(height):
            tri.add(("T", u, y))
            if not (u == 0 and y in cut):
                tri.add(("D", u, y))
    for u in range(n, 2 * n):
        off = u - n
        tri.update(("T", u, y) for y in range(-off - 1, height - off - 1))
        tri.update(("D", u, y) for y in range(-off, height - off))
    tri.update(("D", 2 * n, y) for y in range(-n, 0))
    return tri


def _build(n, k, h, height):
    used = set()
    tiles = []
    for path in walker_tiles(n, h):
        for kind, u, y in path:
            tiles.append((kind, u, y))
            used.update(_triangles(kind, u, y))
    # left half blanks are squares, right half blanks are b tiles
    for u in range(n):
        for y in range(height):
            if ("T", u, y) not in used:
                tiles.append(("a", u, y))
    for u in range(n, 2 * n):
        off = u - n
        for y in range(-off - 1, height - off - 1):
            if ("T", u, y) not in used:
                tiles.append(("b", u, y))
    return tuple(sorted(_key(kind, u, y, n) for kind, u, y in tiles))


def paths_to_tiling(model: ValidatedModel, heights, height=None) -> Tiling:
    """Tiling induced by a valid configuration; clipped at max height + 2 by default."""
    _require_packed(model)
    h = check_config(model, heights)
    n = model.n
    top = int(h.max()) + 2
    if height is None:
        height = top
    elif height < top - 1:
        raise InvalidConfig(f"clip height {height} below the paths (need >= {top - 1})")
    return Tiling(n, tuple(model.k), int(height), _build(n, model.k, h, int(height)))


def tiling_to_paths(t: Tiling) -> np.ndarray:
    """Recover the configuration from the c tiles and check every other tile."""
    n = t.n
    cols = {}
    for kind, i, j in t.lozenges:
        if kind not in ("a", "b", "c"):
            raise InconsistentTiling(f"unknown lozenge type {kind!r}")
        if kind == "c":
            cols.setdefault(i, []).append(j)
    h = np.empty((n, 2 * n + 1), dtype=np.int64)
    h[:, 0] = t.k
    for s in range(1, 2 * n + 1):
        js = sorted(cols.get(s - n, []))
        if len(js) != n:
            raise InconsistentTiling(f"line {s} carries {len(js)} c tiles, expected {n}")
        h[:, s] = np.asarray(js) + max(0, s - n)
    if set(cols) - set(range(1 - n, n + 1)):
        raise InconsistentTiling("c tiles outside the domain columns")
    try:
        model = _packed_model(n, t.k)
        check_config(model, h)
    except StaircaseError as exc:
        raise InconsistentTiling(f"c tiles do not form a valid configuration: {exc}") from None
    if h.max() > t.height - 1:
        raise InconsistentTiling("paths reach above the clip height")
    if _build(n, t.k, h, t.height) != tuple(sorted(t.lozenges)):
        raise InconsistentTiling("a/b tiles disagree with the rules for the recovered paths")
    return h


def check_partition(t: Tiling):
    """Raise unless the lozenges cover the clipped domain exactly once."""
    seen = set()
    for key in t.lozenges:
        for tri in _triangles(*_cell(key, t.n)):
            if tri in seen:
                raise InconsistentTiling(f"overlap at {tri}")
            seen.add(tri)
    dom = domain_triangles(t.n, t.k, t.height)
    if seen != dom:
        raise InconsistentTiling(f"{len(dom - seen)} holes, {len(seen - dom)} tiles outside")


def tiling_weight(t: Tiling, spec: TilingWeightSpec, log=False):
    """Product over c tiles of the column factor to the power j.

    Tiles on the last line (i = N) are pinned by the end points and carry no
    factor.  With ``log`` the pair (sign, log|w|) is returned.
    """
    logw, sign = 0.0, 1.0
    for kind, i, j in t.lozenges:
        if kind != "c":
            continue
        f = spec.column_factor(i)
        if f is None or j == 0:
            continue
        if f == 0:
            return (0.0, -math.inf) if log else 0.0
        logw += j * math.log(abs(f))
        if f < 0 and j % 2:
            sign = -sign
    if log:
        return sign, logw
    return sign * math.exp(logw)


def staircase_config(model: ValidatedModel) -> np.ndarray:
    """Lowest configuration: flat in the up phase, greedy drops afterwards."""
    n = model.n
    h = np.empty((n, 2 * n + 1), dtype=np.int64)
    h[:, :n + 1] = np.asarray(model.k)[:, None]
    for s in range(n + 1, 2 * n + 1):
        for i in range(n):
            lo = model.l[i]
            if i:
                lo = max(lo, h[i - 1, s - 1] + 1)
            h[i, s] = lo
    return check_config(model, h)


def box_sites(model, heights):
    """(walker, line) pairs whose height can be raised by one (adding a box)."""
    h = check_config(model, heights)
    out = []
    for i in range(model.n):
        for s in range(1, 2 * model.n):
            g = h.copy()
            g[i, s] += 1
            try:
                check_config(model, g)
            except InvalidConfig:
                continue
            out.append((i, s))
    return out


def add_box(model, heights, walker, line):
    g = np.array(heights, dtype=np.int64)
    g[walker, line] += 1
    return check_config(model, g)


def forced_cells(n):
    """Lower-left triangles whose tile is fixed when k_j = j-1."""
    tri = set()
    for u in range(n):
        tri.update(("T", u, y) for y in range(n - u - 1))
        if u:
            tri.update(("D", u, y) for y in range(n - u))
    return tri


def tile_at(t: Tiling):
    """Map from triangle to the key of the lozenge that covers it."""
    out = {}
    for key in t.lozenges:
        for tri in _triangles(*_cell(key, t.n)):
            out[tri] = key
    return out


# rendering ----------------------------------------------------------------

_FILL = {"a": "#e8c07d", "b": "#7da3e8", "c": "#9bd08a"}
_R3 = math.sqrt(3) / 2


def _corners(kind, u, y):
    if kind == "a":
        pts = ((u, y), (u + 1, y), (u + 1, y + 1), (u, y + 1))
    elif kind == "b":
        pts = ((u + 1, y), (u + 1, y + 1), (u, y + 2), (u, y + 1))
    else:
        pts = ((u, y + 1), (u + 1, y), (u + 2, y), (u + 1, y + 1))
    return pts


def _screen(p, scale, top):
    u, y = p
    return (round(u * _R3 * scale, 3), round((top - (y + u / 2)) * scale, 3))


def _centre(kind, u, y):
    pts = _corners(kind, u, y)
    return (sum(p[0] for p in pts) / 4, sum(p[1] for p in pts) / 4)


def render_svg(t: Tiling, paths=None, scale=20.0):
    """SVG 1.1 document; ``paths`` (heights array) adds a walker overlay."""
    n = t.n
    cells = [_cell(key, n) for key in t.lozenges]
    pts = [p for c in cells for p in _corners(*c)]
    top = max(y + u / 2 for u, y in pts)
    bot = min(y + u / 2 for u, y in pts)
    width = round((2 * n + 1) * _R3 * scale, 3)
    hgt = round((top - bot) * scale, 3)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{hgt}">',
           '<g id="tiling" stroke="#333" stroke-width="0.5">']
    for (kind, u, y), key in zip(cells, t.lozenges):
        poly = " ".join(f"{a},{b}" for a, b in (_screen(p, scale, top) for p in _corners(kind, u, y)))
        out.append(f'<polygon class="lozenge-{kind}" fill="{_FILL[kind]}" points="{poly}">'
                   f'<title>{escape(f"{kind} {key[1]} {key[2]}")}</title></polygon>')
    out.append("</g>")
    if paths is not None:
        out.append('<g id="paths" fill="none" stroke="#b00" stroke-width="1.5">')
        for tiles in walker_tiles(n, np.asarray(paths)):
            line = " ".join(f"{a},{b}" for a, b in (_screen(_centre(*c), scale, top) for c in tiles))
            out.append(f'<polyline points="{line}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_ascii(t: Tiling):
    """One text row per y; each column u shows the D and T letters."""
    cover = tile_at(t)
    us = [tri[1] for tri in cover]
    ys = [tri[2] for tri in cover]
    rows = []
    for y in range(max(ys), min(ys) - 1, -1):
        chars = []
        for u in range(min(us), max(us) + 1):
            for part in ("D", "T"):
                key = cover.get((part, u, y))
                chars.append(key[0] if key else ".")
        rows.append("".join(chars).rstrip("."))
    return "\n".join(rows) + "\n"


def render(obj, fmt="svg", model=None, overlay=False):
    """Render a Tiling, or a heights array together with its model."""
    if isinstance(obj, Tiling):
        t = obj
        h = tiling_to_paths(t) if overlay else None
    else:
        if model is None:
            raise ValueError("rendering a configuration needs its model")
        h = np.asarray(obj)
        t = paths_to_tiling(model, h)
    if fmt == "svg":
        return render_svg(t, paths=h if overlay else None)
    if fmt == "ascii":
        return render_ascii(t)
    raise ValueError(f"unknown format {fmt!r}")
