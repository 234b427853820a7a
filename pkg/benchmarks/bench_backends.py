"""Time the numba and numpy backends on the hot loops and check they agree.

Each backend runs in its own subprocess, since the choice is fixed at import
time by STAIRCASE_DPP_NO_NUMBA.

    python benchmarks/bench_backends.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workload(repeat):
    from staircase_dpp._accel import backend
    from staircase_dpp.model import validate
    from staircase_dpp.oracle import TransferOracle, TruncationSpec
    from staircase_dpp.series import mult_geometric

    m = validate(dict(n=3, k=[0, 2, 3], l=[0, 1, 2], alpha=[0.3, 0.5, 0.7], beta=[0.4, 0.6, 0.35]))
    rng = np.random.default_rng(0)
    coeffs = rng.standard_normal(4000)
    rates = [0.3, 0.55, 0.8, 0.45]

    def oracle_run():
        o = TransferOracle(m, TruncationSpec(40))
        return [o.partition_function()] + list(o.density(3)) + [o.correlation([(1, 0), (3, 2), (5, 1)])]

    def series_run():
        return list(mult_geometric(coeffs, rates))

    out = {"backend": backend(), "timings": {}, "results": {}}
    for name, fn in (("oracle", oracle_run), ("series", series_run)):
        fn()  # warm-up, includes jit compile or cache load
        best = np.inf
        for _ in range(repeat):
            t = time.perf_counter()
            res = fn()
            best = min(best, time.perf_counter() - t)
        out["timings"][name] = best
        out["results"][name] = [float(v) for v in res]
    return out


def run_backend(no_numba, repeat):
    env = dict(os.environ)
    env.pop("STAIRCASE_DPP_NO_NUMBA", None)
    if no_numba:
        env["STAIRCASE_DPP_NO_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.worker:
        print(json.dumps(workload(args.repeat)))
        return 0

    fast, slow = run_backend(False, args.repeat), run_backend(True, args.repeat)
    ok = True
    print(f"{'loop':<8}{fast['backend']:>12}{slow['backend']:>12}{'speedup':>10}{'max rel diff':>15}")
    for name in fast["timings"]:
        a, b = np.array(fast["results"][name]), np.array(slow["results"][name])
        rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        ok = ok and rel < 1e-10
        tf, ts = fast["timings"][name], slow["timings"][name]
        print(f"{name:<8}{tf:>11.4f}s{ts:>11.4f}s{ts / tf:>9.1f}x{rel:>15.2e}")
    print("backends agree" if ok else "BACKENDS DISAGREE")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
