"""Time the compiled quadrature kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--levels 0 1 2 3] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from sealsim import kernels
from sealsim.mesh import AnnulusMesh


def bench(impl, coords, repeat):
    n = len(coords)
    rng = np.random.default_rng(0)
    k, f = rng.uniform(0.5, 2.0, (n, 9)), rng.normal(size=(n, 9))
    nodal, ref = rng.normal(size=(n, 4)), rng.uniform(0, 1, (n, 2))
    jobs = {
        "element_system": lambda: impl.element_system(coords, k, f),
        "cell_integrals": lambda: impl.cell_integrals(coords, f),
        "gradients_at": lambda: impl.gradients_at(coords, nodal, ref),
    }
    return {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in jobs.items()}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels not built; timing the NumPy fallback only")
    print(f"{'cells':>8} {'kernel':>16} " + " ".join(f"{b:>10}" for b in backends) + "   speedup")
    for lev in args.levels:
        coords = AnnulusMesh(0.2, 8, 40).refine_all(lev).cell_coords()
        times = {b: bench(impl, coords, args.repeat) for b, impl in backends.items()}
        for name in times["python"]:
            row = " ".join(f"{times[b][name] * 1e3:9.3f}ms" for b in backends)
            speed = times["python"][name] / times["cython"][name] if "cython" in times else float("nan")
            print(f"{len(coords):>8} {name:>16} {row}   {speed:6.1f}x")


if __name__ == "__main__":
    main()
