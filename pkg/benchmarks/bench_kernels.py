"""Compare the compiled and pure-Python kernel backends on identical inputs.

    python benchmarks/bench_kernels.py --ticks 200000 --repeat 3
"""

import argparse
import time

import numpy as np

from bcom import kernels


def _walk(b, n):
    return b.BrownianWalk(37.0, 1.0, 42, 7).take(n)


def _filters(b, xs):
    for k in (b.CumulativeMean(), b.RollingMean(20), b.WeightedMean(20), b.ExpMean(0.05)):
        k.push_many(xs)


def _crossover(b, xs):
    fast = b.ExpMean(0.2).push_many(xs)
    slow = b.ExpMean(0.05).push_many(xs)
    b.Crossover().push_many(fast, slow)


def _cash_stock(b, xs):
    rng = np.random.default_rng(0)
    sigs = rng.choice(np.array([-1, 0, 1], dtype=np.int8), size=len(xs))
    b.CashStock(10000.0, 7.5).push_many(sigs, np.abs(xs) + 1.0)


def _tick_by_tick(b, xs):
    k = b.ExpMean(0.05)
    for x in xs.tolist():
        k.push(x)


CASES = {
    "brownian walk": lambda b, xs: _walk(b, len(xs)),
    "four filters": _filters,
    "crossover": _crossover,
    "cash_stock": _cash_stock,
    "ewma per tick": _tick_by_tick,
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ticks", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = kernels.backends()
    xs = backends["python"].BrownianWalk(37.0, 1.0, 1, 1).take(args.ticks)
    print(f"{args.ticks} ticks, best of {args.repeat}")
    print(f"{'case':16s}" + "".join(f"{name:>12s}" for name in backends) + ("     speedup" if len(backends) > 1 else ""))
    for case, fn in CASES.items():
        secs = {name: best_of(lambda b=b: fn(b, xs), args.repeat) for name, b in backends.items()}
        row = f"{case:16s}" + "".join(f"{s:11.4f}s" for s in secs.values())
        if "cython" in secs:
            row += f"{secs['python'] / secs['cython']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
