"""Compare the compiled kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_backends.py [--n 1000] [--reps 20]

Times three hot paths on both backends: the count-CS posterior-ratio grid
scan, the point-ratio trace used by the coverage simulations, and the fused
bounded-CS trace.  Results print as a small table with speedups.
"""

import argparse
import statistics
import time

import numpy as np
from scipy.special import betaln

from worcs import _ref

try:
    from worcs import _core
except ImportError:
    _core = None


def _time(fn, reps):
    out = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1000, help="population size")
    ap.add_argument("--reps", type=int, default=20)
    args = ap.parse_args()
    n, reps = args.n, args.reps

    rng = np.random.default_rng(0)
    bits = rng.permutation(np.r_[np.ones(n // 2), np.zeros(n - n // 2)])
    x = rng.random((50, n))

    backends = {"python": _ref}
    if _core is not None:
        backends["cython"] = _core

    cases = {}
    for name, mod in backends.items():
        table = mod.lgamma_table(n)
        logc = mod.log_choose_grid(n, table)
        const = float(betaln(1.0 + n // 3, 1.0 + n // 6) - betaln(1.0, 1.0))

        def grid_scan(mod=mod, table=table, logc=logc, const=const):
            out = np.empty(n + 1)
            for t in range(0, n, 10):
                mod.ppr_log_ratio_grid(logc, table, t, t // 2, const, out=out)

        def point_trace(mod=mod):
            mod.ppr_point_trace(bits, n, n // 2, 1.0, 1.0)

        def bounded(mod=mod):
            mod.bounded_trace(x, n, 0.0, 1.0, 0.05, _ref.SCHED_EB_SPREAD)

        cases[name] = {
            "grid scan (100 scans)": _time(grid_scan, reps),
            "point-ratio trace": _time(point_trace, reps),
            "bounded trace (50 reps)": _time(bounded, reps),
        }

    width = max(len(k) for v in cases.values() for k in v)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in cases)
    if len(cases) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for key in next(iter(cases.values())):
        row = f"{key:<{width}}  "
        vals = [cases[b][key] for b in cases]
        row += "".join(f"{v * 1e3:>10.3f}ms" for v in vals)
        if len(vals) == 2:
            row += f"{vals[0] / vals[1]:>9.1f}x"
        print(row)
    if _core is None:
        print("\n(compiled backend not built; install with Cython to "
              "compare)")


if __name__ == "__main__":
    main()
