"""Compiled versus NumPy kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat N]

Times point location on a disk mesh and the 1D pseudo-time march with both
backends and checks that they return the same result.
"""
import argparse
import time

import numpy as np

from mhfem._kernels import _pykernels
from mhfem.fespace import TriangleLocator
from mhfem.mesh import gen_disk_bidomain
from mhfem.model import ModelParams
from mhfem.oracle1d import KL, KU, build_operator, make_grid

try:
    from mhfem._kernels import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def locate_case(n_points):
    mesh = gen_disk_bidomain(1.0, 5.0, 160, 60, 1.05)
    loc = TriangleLocator(mesh.vertices[mesh.triangles])
    pts = np.random.default_rng(0).uniform(-5.0, 5.0, size=(n_points, 2))
    args = (pts, loc.origin, loc.inv_cell, loc.nbx, loc.nby, loc.bucket_ptr, loc.bucket_tris,
            loc.p0, loc.inv, loc.tol)
    return f"locate_points ({mesh.n_triangles} triangles, {n_points} points)", \
        lambda mod: mod.locate_points(*args)


def march_case(h0):
    p = ModelParams(d0=1.0, d1=1.0, r=1.0, a=1.0, m=1.0, alpha=0.3, c=(1.0, 0.0), robin_b=-1.0)
    grid = make_grid(5.0, 20.0, h0)
    tau = 2.5e-2
    w0 = np.where(grid.nodes >= 0, 1.0, 0.0)

    def run(mod):
        ab, dyn, r, a = build_operator(p, grid, tau, p.robin_b)
        return mod.fd_march(ab, KL, KU, dyn, r, a, w0.copy(), tau, 1e-8, 10**6)

    return f"fd_march ({grid.n} nodes)", run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; nothing to compare")
        return 1
    print(f"{'kernel':<48} {'cython [s]':>11} {'python [s]':>11} {'speed-up':>9}")
    for name, fn in (locate_case(200_000), march_case(2.5e-3)):
        tc, outc = best_of(lambda: fn(_ckernels), args.repeat)
        tp, outp = best_of(lambda: fn(_pykernels), args.repeat)
        same = np.allclose(np.asarray(outc[0]), np.asarray(outp[0]), rtol=1e-12, atol=1e-13)
        print(f"{name:<48} {tc:>11.4f} {tp:>11.4f} {tp / tc:>8.1f}x"
              + ("" if same else "  (results differ)"))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
