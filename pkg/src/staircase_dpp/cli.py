"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence,
4 a convergence verdict or oracle check failed.  Output is deterministic:
CSV numbers carry 17 significant digits, rows are sorted, lines end in LF.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys

import numpy as np

from . import __version__
from .errors import (ImaginaryResidue, NoConvergence, SingularGramm, SingularTerm, StaircaseError)
from .harness import write_csv

NUMERIC_ERRORS = (NoConvergence, ImaginaryResidue, SingularGramm, SingularTerm)
KERNELS = ("finite-general", "finite-equal", "finite-em", "limit", "sine-ext", "continuous", "johansson")


class VerdictFailed(Exception):
    pass


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _range(text):
    lo, hi = text.split(":")
    return range(int(lo), int(hi) + 1)


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def _config(args):
    """Model config with optional extra keys (kernel, query, tol, seed) as flag defaults."""
    if not getattr(args, "model", None):
        return None, {}
    raw = _read_json(args.model)
    extra = {key: raw.pop(key) for key in ("kernel", "query", "tol", "seed") if key in raw}
    from .model import validate
    return validate(raw), extra


def _setting(args, extra, name, default=None):
    v = getattr(args, name, None)
    if v is not None:
        return v
    return extra.get(name, default)


def _handle(args, model, extra):
    from .dpp_stats import KernelHandle, finite_handle, limit_handle, sine_handle
    from .kernel_limit import LimitParams, extended_sine
    kind = _setting(args, extra, "kernel", "finite-general")
    tol = float(_setting(args, extra, "tol", 1e-10))
    if kind.startswith("finite-"):
        if model is None:
            raise ValueError(f"--kernel {kind} needs --model")
        route = {"finite-general": "general", "finite-equal": "equal", "finite-em": "em"}[kind]
        return finite_handle(model, route)
    if kind == "limit":
        return limit_handle(LimitParams(args.k, tuple(_floats(args.gamma)), tol))
    if kind == "sine-ext":
        g = _floats(args.gamma) if args.gamma else []
        c = args.c if args.c is not None else np.pi / args.k
        if not g:
            return sine_handle(c)
        return KernelHandle(lambda s1, x1, s2, x2: extended_sine(c, g, s1, x1, s2, x2, tol), "sine-ext")
    raise ValueError(f"kernel {kind!r} is not available for this subcommand")


# subcommands -----------------------------------------------------------------

def cmd_validate(args):
    model, extra = _config(args)
    if model is None:
        raise ValueError("validate needs --model")
    out = model.to_dict()
    out.update({"beta_distinct": model.beta_distinct, "spacing": model.spacing})
    _emit(args, _dump(out))


def cmd_kernel(args):
    from .kernel_limit import SaturationParams, continuous_limit_kernel, johansson_kernel
    model, extra = _config(args)
    kind = _setting(args, extra, "kernel", "finite-general")
    tol = float(_setting(args, extra, "tol", 1e-10))
    queries = args.query or [",".join(str(v) for v in q) for q in extra.get("query", [])]
    if not queries:
        raise ValueError("no --query given")
    rows = []
    if kind == "johansson":
        sp = SaturationParams(args.d)
        for q in queries:
            e1, e2 = _floats(q)
            rows.append((e1, e2, johansson_kernel(sp, e1, e2)))
        cols = ["eta1", "eta2", "value"]
    elif kind == "continuous":
        for q in queries:
            a, x1, b, x2 = _floats(q)
            rows.append((a, int(x1), b, int(x2), continuous_limit_kernel(args.k, a, b, int(x1), int(x2), tol)))
        cols = ["sigma1", "x1", "sigma2", "x2", "value"]
    else:
        kh = _handle(args, model, extra)
        for q in queries:
            s1, x1, s2, x2 = _ints(q)
            rows.append((s1, x1, s2, x2, kh(s1, x1, s2, x2)))
        cols = ["s1", "x1", "s2", "x2", "value"]
    rows.sort(key=lambda r: r[:-1])
    _emit(args, write_csv(cols, rows))


def cmd_density(args):
    model, extra = _config(args)
    kh = _handle(args, model, extra)
    rows = [(x, kh(args.s, x, args.s, x)) for x in _range(args.x_range)]
    _emit(args, write_csv(["x", "density"], rows))


def cmd_correlation(args):
    from .dpp_stats import correlation
    model, extra = _config(args)
    kh = _handle(args, model, extra)
    pts = sorted(tuple(_ints(p)) for p in args.point)
    label = ";".join(f"{s}:{x}" for s, x in pts)
    _emit(args, write_csv(["points", "correlation"], [(label, correlation(kh, pts))]))


def cmd_variance(args):
    from .dpp_stats import number_variance
    model, extra = _config(args)
    kh = _handle(args, model, extra)
    rows = [(L, number_variance(kh, args.s, args.lo, args.lo + L - 1)) for L in sorted(_ints(args.lengths))]
    _emit(args, write_csv(["L", "variance"], rows))


def cmd_sample(args):
    from .oracle import TruncationSpec, sample_paths
    model, extra = _config(args)
    if model is None:
        raise ValueError("sample needs --model")
    seed = int(_setting(args, extra, "seed", 0))
    paths = sample_paths(model, TruncationSpec(args.max_height), seed, args.count)
    _emit(args, _dump({"seed": seed, "max_height": args.max_height,
                       "samples": [np.asarray(h).tolist() for h in paths]}))


def _load_paths(path):
    doc = _read_json(path)
    if isinstance(doc, dict):
        # accept the output of `sample` directly (first sample)
        doc = doc["heights"] if "heights" in doc else doc["samples"][0]
    return np.asarray(doc, dtype=np.int64)


def cmd_tile(args):
    from .tiling import Tiling, paths_to_tiling, render, tiling_to_paths
    model, _ = _config(args)
    if args.tiling:
        t = Tiling.from_dict(_read_json(args.tiling))
    elif args.paths and model is not None:
        t = paths_to_tiling(model, _load_paths(args.paths))
    else:
        raise ValueError("tile needs --tiling, or --paths together with --model")
    if args.action == "convert":
        if args.tiling:
            _emit(args, _dump({"n": t.n, "k": list(t.k), "heights": tiling_to_paths(t).tolist()}))
        else:
            _emit(args, json.dumps(t.to_dict(), sort_keys=True) + "\n")
    else:
        _emit(args, render(t, args.format, overlay=args.overlay))


def cmd_oracle_check(args):
    from .dpp_stats import correlation, finite_handle
    from .oracle import TransferOracle, TruncationSpec
    model, _ = _config(args)
    if model is None:
        raise ValueError("oracle-check needs --model")
    o = TransferOracle(model, TruncationSpec(args.max_height))
    kh = finite_handle(model, args.route)
    lines = range(1, min(2 * model.n, args.max_line + 1))
    grid = [(s, x) for s in lines for x in range(args.max_x + 1)]
    tol = o.tail_bound + 1e-8
    rows, ok = [], True
    for size in range(1, args.size + 1):
        worst, count = 0.0, 0
        for pts in itertools.combinations(grid, size):
            worst = max(worst, abs(correlation(kh, pts) - o.correlation(list(pts))))
            count += 1
        ok = ok and worst <= tol
        rows.append((size, count, worst, tol, worst <= tol))
    _emit(args, write_csv(["size", "sets", "max_abs_diff", "tolerance", "pass"], rows))
    if not ok:
        raise VerdictFailed("kernel correlations disagree with the oracle")


def cmd_converge(args):
    from . import harness as h
    th = args.threads
    which = args.which
    if which == "thm3":
        r = h.thm3_convergence(args.k or 2, args.xi, args.alpha, args.beta,
                               tuple(_ints(args.list)) if args.list else (10, 20, 40), threads=th)
    elif which == "prop1":
        r = h.prop1_convergence(args.k or 2, args.gamma or 0.5,
                                tuple(_floats(args.bulk)) if args.bulk else (0.4, 0.3, 0.55),
                                tuple(_ints(args.list)) if args.list else (8, 16, 32, 64), threads=th)
    elif which == "prop2":
        r = h.prop2_convergence((args.gamma or 0.4,) * 4,
                                tuple(_ints(args.list)) if args.list else (5, 10, 20, 40), threads=th)
    elif which == "prop3":
        r = h.prop3_convergence(args.gamma or 0.5, args.sigma,
                                tuple(_ints(args.list)) if args.list else (8, 16, 32), threads=th)
    elif which == "variance":
        r = h.variance_saturation(args.k or 2, args.gamma or 0.5, (1, 2, 3),
                                  _ints(args.list) if args.list else None, threads=th)
    else:
        r = h.figure_report(which)
    _emit(args, r.to_json() if args.format == "json" else r.to_csv())
    if not r.verdict:
        raise VerdictFailed(f"{which}: verdict failed ({r.criterion})")


# parser ----------------------------------------------------------------------

def _common(p, kernel=False):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--threads", type=int, default=1, help="bound on worker threads")
    p.add_argument("--model", help="model JSON (may carry kernel/query/tol/seed keys)")
    p.add_argument("--tol", type=float, help="quadrature tolerance")
    if kernel:
        p.add_argument("--kernel", choices=KERNELS, help="kernel selector (default finite-general)")
        p.add_argument("--k", type=int, help="spacing k for limit kernels")
        p.add_argument("--gamma", help="comma-separated gamma_1, gamma_2, ...")
        p.add_argument("--c", type=float, help="sine-kernel parameter c (default pi/k)")
        p.add_argument("--d", type=float, help="Johansson kernel parameter d")


def build_parser():
    ap = argparse.ArgumentParser(prog="staircase-dpp", allow_abbrev=False,
                                 description="Nonintersecting geometric walks with staircase starts.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add(name, func, kernel=False, **kw):
        p = sub.add_parser(name, allow_abbrev=False, **kw)
        _common(p, kernel)
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, help="check a model file")
    p = add("kernel", cmd_kernel, True, help="evaluate a kernel at queries")
    p.add_argument("--query", action="append", help="s1,x1,s2,x2 (eta1,eta2 for johansson); repeatable")
    p = add("density", cmd_density, True, help="one-point density on a line")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--x-range", required=True, help="lo:hi inclusive")
    p = add("correlation", cmd_correlation, True, help="n-point correlation")
    p.add_argument("--point", action="append", required=True, help="s,x; repeatable")
    p = add("variance", cmd_variance, True, help="number variance of intervals on a line")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--lo", type=int, default=0)
    p.add_argument("--lengths", required=True, help="comma-separated interval lengths")
    p = add("sample", cmd_sample, help="exact path samples from the transfer oracle")
    p.add_argument("--seed", type=int)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--max-height", type=int, default=40)
    p = add("tile", cmd_tile, help="path/tiling conversion and rendering")
    p.add_argument("action", choices=("convert", "render"))
    p.add_argument("--paths", help="JSON heights array, {\"heights\": ...} or sample output")
    p.add_argument("--tiling", help="tiling JSON")
    p.add_argument("--format", choices=("svg", "ascii"), default="svg")
    p.add_argument("--overlay", action="store_true", help="draw walkers on top of the tiles")
    p = add("oracle-check", cmd_oracle_check, help="kernel correlations against the transfer oracle")
    p.add_argument("--route", choices=("general", "equal", "em"), default="general")
    p.add_argument("--max-height", type=int, default=40)
    p.add_argument("--size", type=int, default=3)
    p.add_argument("--max-line", type=int, default=3)
    p.add_argument("--max-x", type=int, default=4)
    p = add("converge", cmd_converge, help="convergence experiments and figure recipes")
    p.add_argument("which", choices=("thm3", "prop1", "prop2", "prop3", "variance", "fig5", "fig6"))
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--list", help="comma-separated sweep values (N, S, k or L)")
    p.add_argument("--k", type=int)
    p.add_argument("--xi", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=2 / 3)
    p.add_argument("--beta", type=float, default=2 / 3)
    p.add_argument("--gamma", type=float)
    p.add_argument("--bulk", help="comma-separated gammas after the shift (prop1)")
    p.add_argument("--sigma", type=float, default=0.25)
    return ap


def _report(exc):
    name, msg = type(exc).__name__, str(exc)
    print(f"error: {msg}" if msg.startswith(name) else f"error: {name}: {msg}", file=sys.stderr)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except VerdictFailed as exc:
        print(f"verdict: {exc}", file=sys.stderr)
        return 4
    except NUMERIC_ERRORS as exc:
        _report(exc)
        return 3
    except (StaircaseError, ValueError, KeyError, TypeError, OSError) as exc:
        _report(exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
