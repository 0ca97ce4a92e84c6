"""Compare the compiled kernel core with the numpy fallback.

    python3 benchmarks/bench_core.py [--nodes 256] [--repeat 5]

Prints the best wall time of each hot routine for both implementations and
the speed-up, after checking that they agree.
"""

import argparse
import time

import numpy as np

from vring import _backend
from vring.contour import Contour, kress_row, logsin_row


def best_time(func, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(n):
    u = 2.0 * np.pi * np.arange(n) / n
    c = Contour.from_nodes(1.0 + 0.08 * np.cos(u) + 0.004 * np.cos(2 * u), 0.08 * np.sin(u))
    rng = np.random.default_rng(0)
    pts = rng.uniform([0.1, -1.0, 0.1, -1.0], [3.0, 1.0, 3.0, 1.0], size=(n * n, 4)).T
    tr = 1.0 + 0.3 * np.cos(u)
    tz = 0.3 * np.sin(u)
    return {
        "gstar_pairs": lambda impl: impl.gstar_pairs(*pts),
        "offcontour_fields": lambda impl: impl.offcontour_fields(tr, tz, c.r, c.z, c.dr, c.dz, c.weight, 400.0),
        "oncontour_fields": lambda impl: impl.oncontour_fields(c.r, c.z, c.dr, c.dz, kress_row(n), logsin_row(n),
                                                               400.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = _backend.implementations()
    if "compiled" not in impls:
        raise SystemExit("compiled core is not built; run pip install -e . first")
    print(f"{'routine':<20}{'python [ms]':>14}{'compiled [ms]':>16}{'speed-up':>10}")
    for name, work in workloads(args.nodes).items():
        py = work(impls["python"])
        cy = work(impls["compiled"])
        for a, b in zip(np.atleast_2d(py), np.atleast_2d(cy)):
            scale = np.max(np.abs(a))
            if np.max(np.abs(a - b)) > 1e-11 * scale:
                raise SystemExit(f"{name}: implementations disagree")
        tp = best_time(lambda: work(impls["python"]), args.repeat)
        tc = best_time(lambda: work(impls["compiled"]), args.repeat)
        print(f"{name:<20}{1e3 * tp:>14.2f}{1e3 * tc:>16.2f}{tp / tc:>10.1f}")


if __name__ == "__main__":
    main()
