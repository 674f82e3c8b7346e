"""Time the numba and numpy variants of each Monte Carlo kernel.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Both variants are fed the same pre-drawn arrays; the script also reports
the largest absolute difference between their outputs.
"""

import argparse
import time

import numpy as np

from fisherbound import kernels


def _time(fn, args, repeat):
    fn(*args)  # warm-up (and JIT compile)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(scale, rng):
    trials, n = int(2000 * scale), 10_000
    zx = rng.standard_normal((trials, n))
    zw = rng.standard_normal((trials, n))
    yield "awgn_average", (zx, zw, 0.3, 0.1, 1.0), f"{trials}x{n}"

    m, d = int(1_000_000 * scale), 4
    x = rng.standard_normal((m, d))
    y = x + rng.standard_normal((m, d))
    yield "gaussian_log_ratio", (x, y, np.zeros(d), 1.0, np.sqrt(2.0)), f"{m}x{d}"

    k = int(4_000_000 * scale)
    logk = np.log(rng.dirichlet(np.ones(16), size=16))
    logm = np.log(np.exp(logk).mean(axis=0))
    yield "table_log_ratio", (rng.integers(0, 16, k), rng.integers(0, 16, k), logk, logm), f"{k} draws"

    lp, lq = rng.standard_normal(k), rng.standard_normal(k)
    yield "js_log_terms", (lp, lq), f"{k} draws"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if kernels.numba is None or kernels.NUMBA_DISABLED:
        print("numba unavailable or disabled; only the numpy path can be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20} {'size':>16} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8} {'max |diff|':>11}")
    for name, call_args, size in cases(args.scale, rng):
        t_np, out_np = _time(getattr(kernels, f"{name}_numpy"), call_args, args.repeat)
        if kernels.USE_NUMBA:
            t_nb, out_nb = _time(getattr(kernels, f"{name}_loop"), call_args, args.repeat)
            diff = float(np.max(np.abs(np.asarray(out_np) - np.asarray(out_nb))))
            print(f"{name:<20} {size:>16} {t_np:11.4f} {t_nb:11.4f} {t_np / t_nb:8.2f} {diff:11.2e}")
        else:
            print(f"{name:<20} {size:>16} {t_np:11.4f} {'-':>11} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
