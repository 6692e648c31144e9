"""Compare the compiled and pure-Python kernels on the forward solve, adjoint and worst case.

Usage: python benchmarks/bench_kernels.py [--n 100] [--repeat 50]
"""

import argparse
import timeit

import numpy as np

from precipopt import _backend
from precipopt.grid import AdmissibleSet, make_uniform_grid
from precipopt.emom import ForwardModel
from precipopt.kinetics import KineticsParams
from precipopt.sensitivity import gradient_objective
from precipopt.uncertainty import UncertaintySet, worst_case


def bench(backend, n, repeat, budget=4.0):
    grid = make_uniform_grid(10.0, n)
    model = ForwardModel(grid, KineticsParams(), backend=backend)
    aset = AdmissibleSet.for_grid(grid, 0.0, 3.0 * budget / grid.T, budget)
    rng = np.random.default_rng(0)
    v = aset.project(aset.uniform() * rng.uniform(0.5, 1.5, n))
    uset = UncertaintySet.symmetric(0.1, n)
    out = {}
    out["forward"] = min(timeit.repeat(lambda: model.solve(v), number=repeat, repeat=3)) / repeat
    out["gradient"] = min(timeit.repeat(lambda: gradient_objective(v, model), number=repeat, repeat=3)) / repeat
    k = max(1, repeat // 25)
    out["worst_case"] = min(timeit.repeat(lambda: worst_case(v, uset, model, workers=1), number=k, repeat=2)) / k
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    names = ["python"] + (["compiled"] if _backend.compiled_available() else [])
    res = {name: bench(name, args.n, args.repeat) for name in names}
    print(f"N_t = {args.n}")
    print(f"{'operation':<12}" + "".join(f"{name:>14}" for name in names) + ("     speedup" if len(names) > 1 else ""))
    for op in ("forward", "gradient", "worst_case"):
        row = f"{op:<12}" + "".join(f"{res[name][op] * 1e3:>11.3f} ms" for name in names)
        if len(names) > 1:
            row += f"{res['python'][op] / res['compiled'][op]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
