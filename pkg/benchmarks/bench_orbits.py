"""Compare the compiled and pure-Python orbit kernels.

    python3 benchmarks/bench_orbits.py [--nmax 14] [--repeat 3]

Both kernels enumerate one representative per primitive orbit of the cat map
``[[2, 1], [1, 1]]`` for every period up to ``--nmax``; the outputs must agree.
"""
import argparse
import time

import numpy as np

from torsion import zeta_orbits as zo


def _time(kernel: str, system, n_max: int, repeat: int):
    best, cat = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        cat = zo.catalog_suspension(system, n_max, resolve_classes=True, kernel=kernel)
        best = min(best, time.perf_counter() - t0)
    return best, cat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nmax", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--matrix", default="2,1,1,1")
    args = ap.parse_args()
    system = zo.SuspensionSystem.from_entries([int(x) for x in args.matrix.split(",")])
    print(f"matrix {system.matrix}, periods <= {args.nmax}, "
          f"{sum(zo.catalog_suspension(system, args.nmax).counts.values())} primitive orbits")
    t_py, cat_py = _time("python", system, args.nmax, args.repeat)
    print(f"python    {t_py:9.4f} s")
    if zo._kernel_compiled is None:
        print("compiled  not built (set up with Cython, without TORSION_NO_EXT=1)")
        return
    t_c, cat_c = _time("compiled", system, args.nmax, args.repeat)
    same = all(np.array_equal(cat_py.classes[n], cat_c.classes[n]) for n in cat_py.classes)
    print(f"compiled  {t_c:9.4f} s   speedup {t_py / t_c:6.1f}x   identical output: {same}")


if __name__ == "__main__":
    main()
