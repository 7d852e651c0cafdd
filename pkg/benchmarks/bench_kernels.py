"""Compiled vs numpy concentration kernels.

    python benchmarks/bench_kernels.py [--repeat 3] [--surfaces torus:128 sphere:64x64]

Prints the best wall time of each backend for sigma/T on every node and
for the ball masses, plus the speed-up, and checks that both agree.
"""

import argparse
import time

import numpy as np

from liouville_lab import _kernels
from liouville_lab.surface import parse_surface_spec


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench(spec, repeat, rng):
    s = parse_surface_spec(spec)
    mass = rng.lognormal(size=s.n_nodes) * s.weights
    mass /= mass.sum()
    _kernels.shell_tables(s)  # build the shared tables outside the timed region
    rows = []
    for label, fn in [("sigma/T", lambda: _kernels.concentration_fields(s, mass, 4.0)),
                      ("ball r=0.1", lambda: _kernels.ball_masses(s, mass, 0.1))]:
        res = {}
        for backend in ("python", "cython"):
            _kernels.use_backend(backend)
            res[backend] = best_of(fn, repeat)
        a, b = res["python"][1], res["cython"][1]
        same = all(np.allclose(x, y, rtol=1e-12, atol=1e-15)
                   for x, y in zip(np.atleast_2d(a), np.atleast_2d(b)))
        rows.append((spec, s.n_nodes, label, res["python"][0], res["cython"][0], same))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions (best is kept)")
    ap.add_argument("--surfaces", nargs="+", default=["torus:64", "torus:128", "sphere:64x64"],
                    help="surface specs to time")
    args = ap.parse_args()
    try:
        _kernels.use_backend("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run pip install -e . first")
    rng = np.random.default_rng(0)
    print(f"{'surface':<14}{'nodes':>8}  {'kernel':<11}{'python s':>10}{'cython s':>10}"
          f"{'speed-up':>10}  agree")
    for spec in args.surfaces:
        for spec_, n, label, tp, tc, same in bench(spec, args.repeat, rng):
            print(f"{spec_:<14}{n:>8}  {label:<11}{tp:>10.3f}{tc:>10.3f}{tp / tc:>10.1f}  {same}")


if __name__ == "__main__":
    main()
