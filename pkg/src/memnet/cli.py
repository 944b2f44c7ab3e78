"""Command-line interface.

Subcommands: ``mesh`` (generate/refine disk meshes), ``eval`` (one cost
evaluation of a network file), ``optimize`` (the two-stage search),
``table1`` (guess networks under both factor conventions), ``dirac``
(refinement sweep under a Dirac dipole), ``homog1d`` (1D oscillating
multiplicity sweep).

Every command is deterministic given its arguments (plus seed) and input
files. Exit codes: 0 success, 2 usage/config error, 1 runtime error.
A JSON config file passed via ``--config`` may supply any flag of the
chosen subcommand; explicit flags win. ``MEMNET_THREADS`` is the fallback
for ``--threads``.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import analysis
from .mesh import assemble_fem, generate_disk_mesh, load_mesh, save_mesh
from .network import WeightedNetwork, load_network, save_network
from .optimize import ConfigError, OptimConfig, optimize, save_result
from .solver import Evaluator, SolveConfig
from .spatial import SpatialIndex
from .transfer import LoadSpec

__all__ = ["main"]

GUESS_NETWORKS = {
    "radius": (1.0, -0.179471),
    "diameter": (2.0, -0.165095),
    "star": (3.0, -0.152676),
    "cross": (4.0, -0.141969),
}


def guess_network(name: str) -> WeightedNetwork:
    """The four natural candidates of the unit-disk experiments: a radius, a
    diameter, three unit segments at 120 degrees, and two orthogonal
    diameters."""
    if name == "radius":
        return WeightedNetwork(points=[(0, 0), (1, 0)], edges=[[0, 1]], theta=[1.0])
    if name == "diameter":
        return WeightedNetwork(points=[(-1, 0), (1, 0)], edges=[[0, 1]], theta=[1.0])
    if name == "star":
        ang = np.deg2rad([90.0, 210.0, 330.0])
        pts = [(0.0, 0.0)] + [(float(np.cos(a)), float(np.sin(a))) for a in ang]
        return WeightedNetwork(points=pts, edges=[[0, 1], [0, 2], [0, 3]], theta=[1.0] * 3)
    if name == "cross":
        pts = [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)]
        return WeightedNetwork(
            points=pts, edges=[[0, 1], [0, 2], [0, 3], [0, 4]], theta=[1.0] * 4
        )
    raise ValueError(f"unknown guess network {name!r}")


def parse_load(spec: str) -> LoadSpec:
    """Parse ``const:VALUE`` or ``dirac:x,y,w[;x,y,w...]``."""
    kind, _, rest = spec.partition(":")
    if kind == "const":
        return LoadSpec.constant(float(rest) if rest else 1.0)
    if kind == "dirac":
        masses = []
        for chunk in rest.split(";"):
            parts = chunk.split(",")
            if len(parts) != 3:
                raise ValueError(f"bad dirac term {chunk!r}, expected x,y,w")
            x, y, w = map(float, parts)
            masses.append(((x, y), w))
        if not masses:
            raise ValueError("dirac load needs at least one mass")
        return LoadSpec.dirac(masses)
    raise ValueError(f"unknown load spec {spec!r} (use const:V or dirac:x,y,w;...)")


def _solve_config(args) -> SolveConfig:
    convention = {"energy": "energy_consistent", "paper": "paper_literal"}[args.factor]
    return SolveConfig(m=args.m, factor_convention=convention)


def _resolve_threads(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("MEMNET_THREADS")
    return int(env) if env else 1


def _levels(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# -- subcommands ----------------------------------------------------------------


def cmd_mesh(args) -> int:
    mesh = generate_disk_mesh(
        radius=args.radius, refinement=args.refine, segments=args.segments
    )
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles")
    return 0


def cmd_eval(args) -> int:
    mesh = load_mesh(args.mesh)
    fem = assemble_fem(mesh)
    index = SpatialIndex(mesh)
    cfg = _solve_config(args)
    load = parse_load(args.load)

    if args.empty_network:
        net = None
        L = args.L if args.L else 1.0
    else:
        if not args.network:
            raise ValueError("provide --network FILE or --empty-network")
        net = load_network(args.network)
        L = args.L if args.L is not None else net.mass()
        if args.L is not None and abs(net.mass() - args.L) > 1e-6 * max(1.0, args.L):
            raise ValueError(
                f"network mass {net.mass():.9g} does not match --L {args.L:.9g}"
            )

    ev = Evaluator(mesh, fem, index, load, cfg, L=L)
    if net is None:
        energy, U = ev.bare()
        report = None
    else:
        report = ev.network_report(net)
        energy, U = report.energy, report.U
    print(f"energy = {energy:.9f}")

    if args.out:
        payload = {
            "energy": energy,
            "m": args.m,
            "factor_convention": cfg.factor_convention,
            "L": L,
            "load": args.load,
            "mesh": {"vertices": mesh.n_vertices, "triangles": mesh.n_triangles},
        }
        if report is not None:
            payload["residual_norm"] = report.residual_norm
            payload["wall_time"] = report.wall_time
            payload["network_mass"] = net.mass()
            payload["per_arc_tangential_gradient"] = [
                {
                    "arc": s.arc,
                    "theta": s.theta,
                    "length": s.length,
                    "mean_abs_grad": s.mean_abs_grad,
                    "max_abs_grad": s.max_abs_grad,
                }
                for s in report.per_arc_tangential_gradient
            ]
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
    if args.solution:
        with open(args.solution, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex_index", "x", "y", "u"])
            for i, ((x, y), u) in enumerate(zip(mesh.vertices, U)):
                writer.writerow([i, f"{x:.17g}", f"{y:.17g}", f"{u:.17g}"])
    if args.profile:
        if net is None:
            raise ValueError("--profile needs a network")
        profiles = analysis.tangential_profile(mesh, fem, U, net, index=index)
        analysis.write_profile_csv(args.profile, net, profiles)
    return 0


def cmd_optimize(args) -> int:
    mesh = load_mesh(args.mesh)
    fem = assemble_fem(mesh)
    index = SpatialIndex(mesh)
    cfg = OptimConfig(
        L=args.L,
        m=args.m,
        n_d=args.nd,
        budget=args.budget,
        seed=args.seed,
        population=args.population,
        local_budget=args.local_budget,
        refine_nd=args.refine_nd,
        threads=_resolve_threads(args.threads),
    )
    ev = Evaluator(mesh, fem, index, parse_load(args.load), _solve_config(args), L=args.L)
    result = optimize(cfg, ev)
    save_result(result, cfg, args.out)
    if args.network_out:
        save_network(result.best_network, args.network_out)
    print(
        f"best energy = {result.best_energy:.9f} "
        f"({result.evaluations_used} evaluations); wrote {args.out}"
    )
    return 0


def cmd_table1(args) -> int:
    levels = _levels(args.levels)
    rows = []
    print(f"{'network':10s} {'L':>3s} {'guess':>12s} {'energy(m)':>12s} {'energy(m/2)':>12s}")
    for name, (L, guess) in GUESS_NETWORKS.items():
        net = guess_network(name)
        results = {}
        for convention in ("energy_consistent", "paper_literal"):
            study = analysis.convergence_study(
                LoadSpec.constant(1.0),
                net,
                levels,
                m=args.m,
                L=L,
                factor_convention=convention,
            )
            results[convention] = study["extrapolated"]
        rows.append(
            [name, L, guess, results["energy_consistent"], results["paper_literal"]]
        )
        print(
            f"{name:10s} {L:3.0f} {guess:12.6f} "
            f"{results['energy_consistent']:12.6f} {results['paper_literal']:12.6f}"
        )
    if args.out:
        analysis.write_table_csv(
            args.out,
            ["network", "L", "guess", "energy_consistent", "paper_literal"],
            rows,
        )
    return 0


def cmd_dirac(args) -> int:
    rows = analysis.dirac_probe(
        A=(-0.5, 0.0),
        B=(0.5, 0.0),
        L=args.L,
        refinements=_levels(args.refinements),
        m=args.m,
    )
    print(f"{'refine':>6s} {'h':>10s} {'n_t':>8s} {'energy':>14s}")
    for r, h, n_t, e in rows:
        print(f"{r:6d} {h:10.5f} {n_t:8d} {e:14.8f}")
    if args.out:
        analysis.write_table_csv(args.out, ["refinement", "h", "n_triangles", "energy"], rows)
    return 0


def cmd_homog1d(args) -> int:
    periods = _levels(args.periods)
    rows = []
    print(f"{'periods':>8s} {'elements':>9s} {'E_n':>12s} {'E_harmonic':>12s} {'E_arithmetic':>13s}")
    for n in periods:
        rec = analysis.homog1d(n, elements_per_period=args.elements_per_period)
        rows.append([rec.periods, rec.elements, rec.E_n, rec.E_harmonic, rec.E_arithmetic])
        print(
            f"{rec.periods:8d} {rec.elements:9d} {rec.E_n:12.8f} "
            f"{rec.E_harmonic:12.8f} {rec.E_arithmetic:13.8f}"
        )
    if args.out:
        analysis.write_table_csv(
            args.out, ["periods", "elements", "E_n", "E_harmonic", "E_arithmetic"], rows
        )
    return 0


# -- argument plumbing -----------------------------------------------------------


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="memnet",
        description="Optimal 1D reinforcing networks for elastic membranes",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    registry = {}

    def register(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file supplying defaults for any flag")
        registry[name] = p
        return p

    p = register("mesh", cmd_mesh, help="generate a disk mesh file")
    p.add_argument("--shape", choices=["disk"], default="disk")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--segments", type=int, default=6)
    p.add_argument("--out", required=True)

    p = register("eval", cmd_eval, help="evaluate one network on a mesh")
    p.add_argument("--mesh", required=True)
    p.add_argument("--network")
    p.add_argument("--empty-network", action="store_true", help="evaluate the bare membrane")
    p.add_argument("--L", type=float, default=None)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--factor", choices=["energy", "paper"], default="energy")
    p.add_argument("--load", default="const:1")
    p.add_argument("--out", help="write the evaluation report (JSON)")
    p.add_argument("--solution", help="write the solution field CSV (vertex_index,x,y,u)")
    p.add_argument("--profile", help="write the tangential-gradient polyline CSV")

    p = register("optimize", cmd_optimize, help="run the two-stage search")
    p.add_argument("--mesh", required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--nd", type=int, default=20)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--local-budget", type=int, default=5000)
    p.add_argument("--refine-nd", type=int, default=50)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--factor", choices=["energy", "paper"], default="energy")
    p.add_argument("--load", default="const:1")
    p.add_argument("--out", required=True, help="result file (JSON)")
    p.add_argument("--network-out", help="also write the best network alone")

    p = register("table1", cmd_table1, help="guess networks under both factor conventions")
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--levels", default="5,6,7", help="comma-separated disk refinements")
    p.add_argument("--out", help="CSV output")

    p = register("dirac", cmd_dirac, help="refinement sweep under a Dirac dipole")
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--m", type=float, default=0.5)
    p.add_argument("--refinements", default="4,5,6,7")
    p.add_argument("--out", help="CSV output")

    p = register("homog1d", cmd_homog1d, help="1D oscillating-multiplicity sweep")
    p.add_argument("--periods", default="1,2,4,8,16,32,64")
    p.add_argument("--elements-per-period", type=int, default=32)
    p.add_argument("--out", help="CSV output")

    return parser, registry


def _apply_config_file(argv, registry):
    """Pre-parse --config and install its values as subparser defaults."""
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return  # argparse will report the missing value
    with open(argv[idx + 1]) as fh:
        conf = json.load(fh)
    if not isinstance(conf, dict):
        raise ValueError("config file must hold a JSON object of flag values")
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    if command in registry:
        defaults = {key.replace("-", "_"): value for key, value in conf.items()}
        registry[command].set_defaults(**defaults)
        # flags marked required are satisfied by the config file
        for action in registry[command]._actions:
            if action.dest in defaults:
                action.required = False


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry = build_parser()
    try:
        _apply_config_file(argv, registry)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
