"""Assembly and solution of the reinforced membrane system, and the energy
of one candidate network.

The discrete energy of a network with per-triangle weighted lengths V is

    E(U) = 1/2 U^T K U + m/2 U^T (Kx^T diag(V) Kx + Ky^T diag(V) Ky) U - b^T U

minimized over P1 fields vanishing on the boundary. Stationarity gives the
linear system with reinforcement factor c = m (``energy_consistent``); a
halved factor c = m/2 (``paper_literal``) is kept selectable so both
conventions can be compared against reference values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import FemSystem, TriangleMesh, domain_from_mesh
from .network import DegenerateNetworkError, NetworkParams, WeightedNetwork
from .projection import make_admissible
from .spatial import SpatialIndex
from .transfer import ArcPieces, LoadSpec, accumulate_vlengths, arc_pieces, assemble_load

__all__ = [
    "SolveConfig",
    "CostReport",
    "ArcGradientStats",
    "ReinforcedSystem",
    "SolverConvergenceError",
    "assemble_system",
    "solve",
    "evaluate_energy",
    "evaluate_cost",
    "Evaluator",
]

FACTOR_CONVENTIONS = ("energy_consistent", "paper_literal")


class SolverConvergenceError(RuntimeError):
    """Iterative solve failed to reach the requested tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class SolveConfig:
    """Stiffness coefficient, reinforcement-factor convention and linear
    solver choice."""

    m: float = 0.5
    factor_convention: str = "energy_consistent"
    method: str = "direct"  # "direct" (sparse LU) or "cg"
    cg_tol: float = 1e-10
    cg_max_iter: int = 5000

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("stiffness m must be nonnegative")
        if self.factor_convention not in FACTOR_CONVENTIONS:
            raise ValueError(f"factor_convention must be one of {FACTOR_CONVENTIONS}")
        if self.method not in ("direct", "cg"):
            raise ValueError("method must be 'direct' or 'cg'")
        if self.method == "cg" and not (0.0 < self.cg_tol <= 1e-4):
            raise ValueError("cg_tol must lie in (0, 1e-4]")

    @property
    def factor(self) -> float:
        return self.m if self.factor_convention == "energy_consistent" else 0.5 * self.m

    @property
    def tolerance(self) -> float:
        return 1e-10 if self.method == "direct" else self.cg_tol


@dataclass(frozen=True)
class ReinforcedSystem:
    """Dirichlet-reduced SPD operator: rows/columns of boundary vertices are
    eliminated symmetrically, so ``matrix`` acts on interior values only."""

    matrix: sp.csr_matrix
    interior: np.ndarray
    n_vertices: int


@dataclass(frozen=True)
class ArcGradientStats:
    """Length-weighted tangential-gradient statistics of one arc."""

    arc: int
    theta: float
    length: float
    mean_abs_grad: float
    max_abs_grad: float


@dataclass
class CostReport:
    """Outcome of one cost evaluation."""

    energy: float
    U: np.ndarray | None
    residual_norm: float
    per_arc_tangential_gradient: list[ArcGradientStats]
    wall_time: float
    network: WeightedNetwork | None = None
    vlengths: np.ndarray | None = None
    degenerate: bool = False


def _interior_ops(fem: FemSystem):
    """Cached interior restrictions of K, Kx, Ky."""
    ops = fem.__dict__.get("_interior_ops")
    if ops is None:
        interior = fem.interior
        K_int = fem.K[interior][:, interior].tocsr()
        Kx_int = fem.Kx[:, interior].tocsr()
        Ky_int = fem.Ky[:, interior].tocsr()
        ops = (K_int, Kx_int, Ky_int)
        fem.__dict__["_interior_ops"] = ops
    return ops


def _reinforcement(Kx_int, Ky_int, vlengths: np.ndarray) -> sp.csr_matrix | None:
    rows = np.flatnonzero(vlengths)
    if rows.size == 0:
        return None
    D = sp.diags(vlengths[rows])
    Kxr = Kx_int[rows]
    Kyr = Ky_int[rows]
    return (Kxr.T @ D @ Kxr + Kyr.T @ D @ Kyr).tocsr()


def assemble_system(fem: FemSystem, vlengths, cfg: SolveConfig) -> ReinforcedSystem:
    """A = K + c (Kx^T diag(V) Kx + Ky^T diag(V) Ky), Dirichlet-reduced.

    c is m or m/2 depending on ``cfg.factor_convention``."""
    v = np.asarray(vlengths, dtype=float)
    if v.shape != (fem.n_triangles,):
        raise ValueError(f"vlengths must have shape ({fem.n_triangles},)")
    if np.any(v < 0):
        raise ValueError("vlengths must be nonnegative")
    K_int, Kx_int, Ky_int = _interior_ops(fem)
    R = _reinforcement(Kx_int, Ky_int, v)
    A = K_int if R is None else (K_int + cfg.factor * R).tocsr()
    return ReinforcedSystem(matrix=A, interior=fem.interior, n_vertices=fem.n_vertices)


def solve(system: ReinforcedSystem, b, cfg: SolveConfig, preconditioner=None) -> np.ndarray:
    """Solve A U = b (boundary entries of b ignored, boundary entries of the
    returned U exactly zero)."""
    b = np.asarray(b, dtype=float)
    if b.shape != (system.n_vertices,):
        raise ValueError(f"b must have shape ({system.n_vertices},)")
    if not np.all(np.isfinite(b)):
        raise ValueError("b must be finite")
    b_int = b[system.interior]
    if cfg.method == "direct":
        u_int = spla.splu(system.matrix.tocsc()).solve(b_int)
    else:
        u_int, info = spla.cg(
            system.matrix,
            b_int,
            rtol=cfg.cg_tol,
            atol=0.0,
            maxiter=cfg.cg_max_iter,
            M=preconditioner,
        )
        if info != 0:
            bnorm = float(np.linalg.norm(b_int))
            res = float(np.linalg.norm(system.matrix @ u_int - b_int))
            res = res / bnorm if bnorm > 0 else res
            raise SolverConvergenceError(
                f"CG did not converge within {cfg.cg_max_iter} iterations", res
            )
    U = np.zeros(system.n_vertices)
    U[system.interior] = u_int
    return U


def residual_norm(system: ReinforcedSystem, U: np.ndarray, b: np.ndarray) -> float:
    """Relative interior residual ||A U - b|| / ||b|| (0 when b = 0)."""
    b_int = b[system.interior]
    r = system.matrix @ U[system.interior] - b_int
    bnorm = float(np.linalg.norm(b_int))
    rnorm = float(np.linalg.norm(r))
    return rnorm / bnorm if bnorm > 0 else rnorm


def evaluate_energy(fem: FemSystem, vlengths, m: float, b, U) -> float:
    """Discrete energy 1/2 U^T K U + m/2 U^T R(V) U - b^T U.

    Under the energy-consistent convention this equals -1/2 b^T U at the
    solve's minimizer (quadratic optimality)."""
    v = np.asarray(vlengths, dtype=float)
    U = np.asarray(U, dtype=float)
    gx = fem.Kx @ U
    gy = fem.Ky @ U
    quad_membrane = float(U @ (fem.K @ U))
    quad_network = float(np.dot(v, gx * gx + gy * gy))
    return 0.5 * quad_membrane + 0.5 * m * quad_network - float(np.dot(b, U))


class Evaluator:
    """Reusable cost evaluator for a fixed (mesh, load, solver config, mass
    budget): precomputes the load vector and interior operators so repeated
    candidate evaluations only assemble the reinforcement and factorize.

    Shared state is read-only after construction; concurrent ``cost`` calls
    on distinct candidates are safe with the direct solver.
    """

    def __init__(
        self,
        mesh: TriangleMesh,
        fem: FemSystem,
        index: SpatialIndex,
        load: LoadSpec,
        cfg: SolveConfig,
        L: float,
        domain=None,
    ):
        if not L > 0:
            raise ValueError("mass budget L must be positive")
        self.mesh = mesh
        self.fem = fem
        self.index = index
        self.load = load
        self.cfg = cfg
        self.L = float(L)
        self.domain = domain if domain is not None else domain_from_mesh(mesh)
        self.b = assemble_load(mesh, fem, load, index)
        self.b_int = self.b[fem.interior]
        self.K_int, self.Kx_int, self.Ky_int = _interior_ops(fem)
        # materialize the lazy mesh connectivity now; population-parallel
        # cost() calls must only read
        mesh.neighbors, mesh.tri_bboxes
        self._precond = None
        if cfg.method == "cg":
            lu = spla.splu(self.K_int.tocsc())
            self._precond = spla.LinearOperator(self.K_int.shape, matvec=lu.solve)

    # -- internals -----------------------------------------------------------

    def _solve_interior(self, vlengths: np.ndarray) -> np.ndarray:
        R = _reinforcement(self.Kx_int, self.Ky_int, vlengths)
        A = self.K_int if R is None else (self.K_int + self.cfg.factor * R).tocsr()
        if self.cfg.method == "direct":
            return spla.splu(A.tocsc()).solve(self.b_int), A
        u, info = spla.cg(
            A,
            self.b_int,
            rtol=self.cfg.cg_tol,
            atol=0.0,
            maxiter=self.cfg.cg_max_iter,
            M=self._precond,
        )
        if info != 0:
            bnorm = float(np.linalg.norm(self.b_int))
            res = float(np.linalg.norm(A @ u - self.b_int)) / max(bnorm, 1e-300)
            raise SolverConvergenceError("CG did not converge", res)
        return u, A

    def _energy_from_interior(self, u_int: np.ndarray, vlengths: np.ndarray) -> float:
        if self.cfg.factor_convention == "energy_consistent":
            return -0.5 * float(np.dot(self.b_int, u_int))
        rows = np.flatnonzero(vlengths)
        quad_m = float(u_int @ (self.K_int @ u_int))
        if rows.size:
            gx = self.Kx_int[rows] @ u_int
            gy = self.Ky_int[rows] @ u_int
            quad_n = float(np.dot(vlengths[rows], gx * gx + gy * gy))
        else:
            quad_n = 0.0
        return 0.5 * quad_m + 0.5 * self.cfg.m * quad_n - float(np.dot(self.b_int, u_int))

    # -- public API ------------------------------------------------------------

    def admissible(self, params: NetworkParams) -> WeightedNetwork:
        return make_admissible(params, self.L, self.domain)

    def bare(self) -> tuple[float, np.ndarray]:
        """Energy and solution field of the unreinforced membrane."""
        v = np.zeros(self.fem.n_triangles)
        u_int, _ = self._solve_interior(v)
        U = np.zeros(self.fem.n_vertices)
        U[self.fem.interior] = u_int
        return self._energy_from_interior(u_int, v), U

    def network_cost(self, net: WeightedNetwork) -> float:
        """Energy of an already-admissible network (fast path)."""
        v = accumulate_vlengths(self.index, self.mesh, net)
        u_int, _ = self._solve_interior(v)
        return self._energy_from_interior(u_int, v)

    def cost(self, params: NetworkParams) -> float:
        """Energy of a raw candidate; degenerate candidates return -inf."""
        try:
            net = self.admissible(params)
        except DegenerateNetworkError:
            return float("-inf")
        return self.network_cost(net)

    def network_report(self, net: WeightedNetwork) -> CostReport:
        start = time.perf_counter()
        pieces = arc_pieces(self.index, self.mesh, net)
        v = accumulate_vlengths(self.index, self.mesh, net, pieces)
        u_int, A = self._solve_interior(v)
        U = np.zeros(self.fem.n_vertices)
        U[self.fem.interior] = u_int
        energy = evaluate_energy(self.fem, v, self.cfg.m, self.b, U)
        r = A @ u_int - self.b_int
        bnorm = float(np.linalg.norm(self.b_int))
        res = float(np.linalg.norm(r)) / bnorm if bnorm > 0 else float(np.linalg.norm(r))
        stats = _arc_gradient_stats(self.fem, net, pieces, U)
        return CostReport(
            energy=energy,
            U=U,
            residual_norm=res,
            per_arc_tangential_gradient=stats,
            wall_time=time.perf_counter() - start,
            network=net,
            vlengths=v,
        )

    def report(self, params: NetworkParams) -> CostReport:
        start = time.perf_counter()
        try:
            net = self.admissible(params)
        except DegenerateNetworkError:
            return CostReport(
                energy=float("-inf"),
                U=None,
                residual_norm=float("nan"),
                per_arc_tangential_gradient=[],
                wall_time=time.perf_counter() - start,
                degenerate=True,
            )
        return self.network_report(net)


def _arc_gradient_stats(fem, net, pieces: ArcPieces, U) -> list[ArcGradientStats]:
    gx = fem.Kx @ U
    gy = fem.Ky @ U
    d = net.points[net.edges[:, 1]] - net.points[net.edges[:, 0]]
    norm = np.hypot(d[:, 0], d[:, 1])
    stats = []
    for arc_id in range(len(net.edges)):
        sel = pieces.arc == arc_id
        if norm[arc_id] <= 0 or not sel.any():
            stats.append(
                ArcGradientStats(arc_id, float(net.theta[arc_id]), 0.0, 0.0, 0.0)
            )
            continue
        tx, ty = d[arc_id] / norm[arc_id]
        g = np.abs(gx[pieces.tri[sel]] * tx + gy[pieces.tri[sel]] * ty)
        w = pieces.length[sel]
        total = float(w.sum())
        stats.append(
            ArcGradientStats(
                arc=arc_id,
                theta=float(net.theta[arc_id]),
                length=total,
                mean_abs_grad=float(np.dot(w, g) / total) if total > 0 else 0.0,
                max_abs_grad=float(g.max()),
            )
        )
    return stats


def evaluate_cost(
    mesh: TriangleMesh,
    fem: FemSystem,
    index: SpatialIndex,
    params: NetworkParams,
    L: float,
    f: LoadSpec,
    cfg: SolveConfig,
    domain=None,
) -> CostReport:
    """One full cost evaluation: project the candidate to an admissible
    network, couple it to the mesh, solve, and report the energy with
    per-arc tangential-gradient statistics.

    Degenerate candidates (all points coincident) yield energy -inf rather
    than raising, so population searches never abort."""
    ev = Evaluator(mesh, fem, index, f, cfg, L, domain=domain)
    return ev.report(params)
