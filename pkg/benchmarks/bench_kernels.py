"""Time the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py --size 4 --sweeps 2000 --runs 20
"""
import argparse
import time

import numpy as np

from pepslab import _kernels
from pepslab.classical import all_energies, ising_spin_glass
from pepslab.lattice import SquareLattice
from pepslab.sampling import anneal


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=4, help="linear size L of the L x L glass")
    ap.add_argument("--sweeps", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    model = ising_spin_glass(SquareLattice(args.size, args.size), args.seed, 0.5)
    rows = []
    if not _kernels.HAVE_NUMBA:
        print("numba unavailable; timing the numpy path only")
    backends = [False, True] if _kernels.HAVE_NUMBA else [False]
    results = {}
    for use in backends:
        if use:  # compile outside the timed region
            all_energies(model, use_numba=True)
            anneal(model, 0.5, 5.0, 2, 1, args.seed, use_numba=True)
        t_enum, energies = best_of(lambda: all_energies(model, use_numba=use), args.repeat)
        t_anneal, res = best_of(lambda: anneal(model, 0.5, 5.0, args.sweeps, args.runs, args.seed,
                                               use_numba=use), args.repeat)
        name = "numba" if use else "numpy"
        results[name] = (energies, res.best_energy)
        rows.append((name, t_enum, t_anneal))

    print(f"{args.size}x{args.size} glass, {2 ** model.n_sites} configurations, "
          f"{args.runs} runs x {args.sweeps} sweeps")
    print(f"{'kernel':8s} {'all_energies [s]':>18s} {'anneal [s]':>12s}")
    for name, te, ta in rows:
        print(f"{name:8s} {te:18.4f} {ta:12.4f}")
    if len(rows) == 2:
        print(f"{'speedup':8s} {rows[0][1] / rows[1][1]:17.1f}x {rows[0][2] / rows[1][2]:11.1f}x")
        same = (np.allclose(results["numpy"][0], results["numba"][0], atol=1e-12)
                and np.array_equal(results["numpy"][1], results["numba"][1]))
        print("outputs agree" if same else "OUTPUTS DIFFER")


if __name__ == "__main__":
    main()
