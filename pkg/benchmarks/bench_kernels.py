"""Compiled vs pure-Python kernels on the search workload.

    python benchmarks/bench_kernels.py [--batches N] [--repeat R]

Times ``clear_batch``, ``clear_sequential`` and ``clear_noshort`` on the same
random batches with both backends and checks that their results agree.
"""

from __future__ import annotations

import argparse
import random
import sys
import time

from batchswap import _kernels_py
from batchswap.numerics import Q

try:
    from batchswap import _kernels as _compiled
except ImportError:
    _compiled = None

K = 64


def make_batches(n: int, seed: int) -> list:
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        x, y = Q(rng.randint(50, 500)), Q(rng.randint(50, 500))
        r0 = y / x
        orders = []
        for i in range(rng.randint(1, 8)):
            side = rng.randrange(4)
            orders.append((side, Q(rng.randint(1, 5)), r0 * Q(rng.randint(2, 32), 8), Q(rng.randint(0, 2)), i))
        users = [f"u{i % 3}" for i in range(len(orders))]
        balances = {u: (Q(rng.randint(0, 20)), Q(rng.randint(0, 40))) for u in set(users)}
        out.append((x, y, orders, users, balances))
    return out


def workloads(mod):
    return {
        "clear_batch": lambda b: mod.clear_batch(b[0], b[1], b[2], None, K),
        "clear_batch(seed)": lambda b: mod.clear_batch(b[0], b[1], b[2], 12345, K),
        "clear_sequential": lambda b: mod.clear_sequential(b[0], b[1], b[2], K),
        "clear_noshort": lambda b: mod.clear_noshort(b[0], b[1], b[2], b[3], b[4], None, K),
    }


def best_of(fn, batches, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for b in batches:
            fn(b)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batches", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    batches = make_batches(args.batches, args.seed)
    pure = workloads(_kernels_py)
    fast = workloads(_compiled) if _compiled is not None else None
    if fast is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`", file=sys.stderr)

    print(f"{'kernel':<20}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, fn in pure.items():
        t_py = best_of(fn, batches, args.repeat)
        if fast is None:
            print(f"{name:<20}{t_py * 1e3:>12.1f}{'-':>14}{'-':>10}")
            continue
        for b in batches:
            if fn(b) != fast[name](b):
                print(f"{name}: backends disagree", file=sys.stderr)
                return 1
        t_c = best_of(fast[name], batches, args.repeat)
        print(f"{name:<20}{t_py * 1e3:>12.1f}{t_c * 1e3:>14.1f}{t_py / t_c:>9.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
