"""Compare the compiled and pure-Python kernel backends.

Times the three kernels per call and one full flow integration per
configuration, then prints a table with the speedup. Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
import argparse
import json
import math
import timeit
from contextlib import contextmanager

import numpy as np

from isoflow import kernels
from isoflow.flow_ode import FlowSpec, integrate
from isoflow.rank2 import Rank2Config
from isoflow.root_system import RootSystemData, polar_inverse

CONFIGS = [(2, 1, 1), (3, 1, 1), (4, 1, 3), (6, 2, 2)]


@contextmanager
def backend(name):
    """Temporarily route the kernel entry points to one backend."""
    mod = kernels.backends()[name]
    saved = (kernels.root_sums, kernels.field, kernels.dp5_step, kernels.BACKEND)
    kernels.root_sums, kernels.field, kernels.dp5_step = mod.root_sums, mod.field, mod.dp5_step
    kernels.BACKEND = name
    try:
        yield
    finally:
        kernels.root_sums, kernels.field, kernels.dp5_step, kernels.BACKEND = saved


def b3():
    s = 1 / math.sqrt(2)
    return RootSystemData.unchecked(
        [[1, 0, 0], [0, 1, 0], [0, 0, 1], [s, -s, 0], [s, s, 0], [s, 0, -s], [s, 0, s],
         [0, s, -s], [0, s, s]], [1, 1, 1, 2, 2, 2, 2, 2, 2], label="B3")


def cases():
    for g, m1, m2 in CONFIGS:
        cfg = Rank2Config(g, m1, m2)
        yield f"g{g} m=({m1},{m2})", cfg.root_system(), polar_inverse(1.0, 0.5 * cfg.theta_min)
    yield "B3 rank 3", b3(), np.array([3.0, 2.0, 1.0]) / math.sqrt(14)


def per_call(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def bench(repeat):
    rows = []
    names = list(kernels.backends())
    for label, rs, x0 in cases():
        roots = np.ascontiguousarray(rs.roots)
        mult = np.ascontiguousarray(rs.mult_array, dtype=float)
        n = float(rs.n)
        result = {"case": label}
        for name in names:
            mod = kernels.backends()[name]
            f0 = mod.field(kernels.SPHERICAL, roots, mult, n, x0)
            result[name] = {
                "root_sums": per_call(lambda: mod.root_sums(roots, mult, x0), repeat, 2000),
                "field": per_call(lambda: mod.field(kernels.SPHERICAL, roots, mult, n, x0), repeat, 2000),
                "dp5_step": per_call(lambda: mod.dp5_step(kernels.SPHERICAL, roots, mult, n, x0, f0,
                                                          1e-3, 1e-10, 1e-12), repeat, 500),
            }
            spec = FlowSpec("spherical", rs, x0, (-2.0, 1.0))
            with backend(name):
                result[name]["integrate"] = per_call(lambda: integrate(spec), repeat, 3)
                result[name]["steps"] = integrate(spec).stats["steps"]
        rows.append(result)
    return names, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the raw timings here")
    args = ap.parse_args()
    names, rows = bench(args.repeat)
    keys = ["root_sums", "field", "dp5_step", "integrate"]
    print(f"backends: {', '.join(names)}")
    print(f"{'case':<14} {'kernel':<10} " + " ".join(f"{n:>12}" for n in names)
          + ("   speedup" if len(names) > 1 else ""))
    for r in rows:
        for k in keys:
            vals = [r[n][k] for n in names]
            line = f"{r['case']:<14} {k:<10} " + " ".join(f"{v * 1e6:>10.2f}us" for v in vals)
            if len(names) > 1:
                line += f"   {vals[0] / vals[1]:>6.1f}x"
            print(line)
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"backends": names, "results": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
