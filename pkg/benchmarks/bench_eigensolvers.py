"""Dense Schur-complement route versus sparse shift-invert Lanczos.

Usage: python benchmarks/bench_eigensolvers.py [--k 6] [--repeat 3] [--max-na 1024]
"""

import argparse
import time

import numpy as np

from steklov_lab.fem import steklov_solve
from steklov_lab.geometry import Ellipse
from steklov_lab.mesh import build_mesh


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=6)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--max-na", type=int, default=1024)
    args = ap.parse_args()
    print(f"{'n_angular':>9} {'vertices':>9} {'boundary':>8} {'dense s':>9} {'sparse s':>9} {'max rel diff':>12}")
    na = 64
    while na <= args.max_na:
        mesh = build_mesh(Ellipse(2.0, 1.0), n_radial=na // 8, n_angular=na)
        td, d = best_time(lambda: steklov_solve(mesh, k=args.k, method="dense"), args.repeat)
        ts, s = best_time(lambda: steklov_solve(mesh, k=args.k, method="sparse"), args.repeat)
        diff = float(np.max(np.abs(d.eigenvalues[1:] - s.eigenvalues[1:]) / d.eigenvalues[1:]))
        print(f"{na:9d} {mesh.n_vertices:9d} {len(mesh.boundary_vertices):8d} {td:9.3f} {ts:9.3f} {diff:12.1e}", flush=True)
        na *= 2


if __name__ == "__main__":
    main()
