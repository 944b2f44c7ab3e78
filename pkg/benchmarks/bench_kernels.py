"""Benchmark the compiled geometry kernels against the numpy fallback.

Times the arc-triangle piece extraction (the interpreter-bound core of every
cost evaluation) and one full cost evaluation under both backends.

Usage: python benchmarks/bench_kernels.py [--refine 6] [--nd 50] [--repeat 30]
"""

import argparse
import time

import numpy as np

from memnet import kernels
from memnet.mesh import assemble_fem, domain_from_mesh, generate_disk_mesh
from memnet.network import NetworkParams
from memnet.optimize import OptimConfig, decode, default_bounds
from memnet.projection import make_admissible
from memnet.solver import Evaluator, SolveConfig
from memnet.spatial import SpatialIndex
from memnet.transfer import LoadSpec, arc_pieces


def time_backend(name, mesh, index, nets, evaluator, params_list, repeat):
    kernels.use(name)
    t0 = time.perf_counter()
    for _ in range(repeat):
        for net in nets:
            arc_pieces(index, mesh, net)
    pieces_dt = (time.perf_counter() - t0) / (repeat * len(nets))

    t0 = time.perf_counter()
    for params in params_list:
        evaluator.cost(params)
    eval_dt = (time.perf_counter() - t0) / len(params_list)
    return pieces_dt, eval_dt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--refine", type=int, default=6)
    ap.add_argument("--nd", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    mesh = generate_disk_mesh(1.0, args.refine)
    fem = assemble_fem(mesh)
    index = SpatialIndex(mesh)
    domain = domain_from_mesh(mesh)
    rng = np.random.default_rng(args.seed)
    L = 3.0

    nets = []
    for _ in range(10):
        params = NetworkParams(
            points=rng.uniform(-1, 1, size=(args.nd, 2)),
            weights=rng.uniform(1, 2, args.nd - 1),
            scale=float(rng.uniform(0.2, 0.8)),
        )
        nets.append(make_admissible(params, L, domain))

    evaluator = Evaluator(
        mesh, fem, index, LoadSpec.constant(1.0),
        SolveConfig(m=0.5, method="cg", cg_tol=1e-10), L=L,
    )
    cfg = OptimConfig(L=L, n_d=args.nd, budget=100, seed=args.seed)
    lo, hi = default_bounds(cfg, domain)
    params_list = [decode(lo + rng.random(3 * args.nd) * (hi - lo), args.nd) for _ in range(40)]

    print(f"mesh: {mesh.n_triangles} triangles / {mesh.n_vertices} vertices; "
          f"n_d={args.nd}; backends: {sorted(kernels.available())}")
    print(f"{'backend':10s} {'arc pieces':>14s} {'full cost eval':>16s}")
    baseline = None
    for name in ("python", "cython"):
        if name not in kernels.available():
            print(f"{name:10s} {'not built':>14s}")
            continue
        pieces_dt, eval_dt = time_backend(name, mesh, index, nets, evaluator, params_list, args.repeat)
        note = ""
        if baseline is None:
            baseline = pieces_dt
        else:
            note = f"  (pieces speedup x{baseline / pieces_dt:.1f})"
        print(f"{name:10s} {pieces_dt * 1e3:11.2f} ms {eval_dt * 1e3:13.2f} ms{note}")


if __name__ == "__main__":
    main()
