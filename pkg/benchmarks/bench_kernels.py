"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --sizes 64 128 256 --repeat 3

Prints one row per (kernel, n) with the best-of-``repeat`` time for each
backend, the speedup, and whether the two backends agree.
"""

import argparse
import time

import numpy as np

from onesided import _backend


def cases(n, rng):
    u = np.exp(rng.uniform(-1, 1, n))
    v = 1.0 / u
    a = rng.random(n)
    A = rng.random((64, n))
    b = np.cumsum(rng.standard_normal(n)) / np.sqrt(n)
    table = 1.0 / np.arange(1, n + 1)
    return {
        "maximal_plus_naive": lambda k: k.maximal_plus_naive(a),
        "maximal_plus_hull": lambda k: k.maximal_plus_hull(a),
        "maximal_plus_hull_rows(64)": lambda k: k.maximal_plus_hull_rows(A),
        "fractional_maximal_plus": lambda k: k.fractional_maximal_plus(a, 1.0 / n, 0.5),
        "weighted_maximal": lambda k: k.weighted_maximal(a, u, False),
        "forward_correlate": lambda k: k.forward_correlate(a, table, 0),
        "triple_max (A_p^+)": lambda k: k.triple_max(u, v, 1.0, 1.0),
        "interval_max (A_p)": lambda k: k.interval_max(u, v, 1.0, 1.0),
        "ainf_minus": lambda k: k.ainf_minus(u),
        "gap_max": lambda k: k.gap_max(u, v, 4, 1.0),
        "bmo_max": lambda k: k.bmo_max(b),
        "jn_max": lambda k: k.jn_max(b, 1.0),
        "rh_max_ratio": lambda k: k.rh_max_ratio(u, 0.5),
    }


def best_time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(x, y):
    if isinstance(x, tuple):
        return all(same(a, b) for a, b in zip(x, y))
    return bool(np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rtol=1e-12, atol=1e-14))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--only", default="", help="run kernels whose name contains this text")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled backend not importable; timing the numpy fallback only")
    names = sorted(backends)
    print(f"{'kernel':28s} {'n':>5s} " + " ".join(f"{b + ' [s]':>12s}" for b in names)
          + ("   speedup  agree" if len(names) == 2 else ""))
    for n in args.sizes:
        table = cases(n, np.random.default_rng(args.seed))
        for name, fn in table.items():
            if args.only not in name:
                continue
            times, outs = [], []
            for b in names:
                t, out = best_time(lambda: fn(backends[b]), args.repeat)
                times.append(t)
                outs.append(out)
            row = f"{name:28s} {n:5d} " + " ".join(f"{t:12.5f}" for t in times)
            if len(names) == 2:
                cy, py = times[names.index("cython")], times[names.index("numpy")]
                row += f"   {py / cy:7.1f}x  {same(*outs)}"
            print(row)


if __name__ == "__main__":
    main()
