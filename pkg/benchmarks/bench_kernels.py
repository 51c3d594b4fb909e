"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py --repeat 3
"""
import argparse
import time

import numpy as np

from lyapwander import kernels
from lyapwander.parameters import reference_params
from lyapwander.spectrum import analytic_skeleton, sigma_family


def _best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(points, steps, trace_len):
    p = reference_params()
    skel, fam = analytic_skeleton(p), sigma_family(p)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, points)
    y = rng.uniform(-1, 1, points)
    n = 128
    sup = np.zeros((n, n), dtype=np.uint8)
    sup[:, n // 2:] = 1
    la = np.log(2 ** -0.5)
    return {
        f"trace_lognorm N={trace_len}": lambda k: k.trace_lognorm(4, 3, trace_len, p.eps1, p.eps2, la, la),
        f"iterate skeleton {points}x{steps}": lambda k: k.iterate_points(x, y, steps, *skel._args()),
        f"iterate sigma {points}x{steps}": lambda k: k.iterate_points(x, y, steps, *fam._args()),
        f"first_hits {points // 4} h=2000": lambda k: k.first_hits(x[:points // 4], y[:points // 4], sup.ravel(),
                                                                 n, 2000, *skel._args()),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--points", type=int, default=128 * 128 * 16)
    ap.add_argument("--steps", type=int, default=35)
    ap.add_argument("--trace-len", type=int, default=1_000_000)
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled extension not built; timing the numpy backend only")
    print(f"{'kernel':<34}" + "".join(f"{name:>12}" for name in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, fn in cases(args.points, args.steps, args.trace_len).items():
        t = {name: _best(lambda: fn(mod), args.repeat) for name, mod in impls.items()}
        row = f"{label:<34}" + "".join(f"{t[name]:>11.3f}s" for name in impls)
        if len(impls) > 1:
            row += f"{t['python'] / t['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
