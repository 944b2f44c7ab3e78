"""Executable diagnostics: tangential-gradient profiles along the network
(the discrete trace of the |grad_tau u| = c optimality condition), the 1D
oscillating-multiplicity example showing the harmonic/arithmetic energy gap,
Dirac-load refinement sweeps, and mesh-convergence studies with Richardson
extrapolation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import FemSystem, TriangleMesh, assemble_fem, generate_disk_mesh
from .network import WeightedNetwork
from .solver import Evaluator, SolveConfig
from .spatial import SpatialIndex
from .transfer import ArcPieces, LoadSpec, arc_pieces

__all__ = [
    "ArcProfile",
    "OptimalityReport",
    "tangential_profile",
    "optimality_report",
    "HomogRecord",
    "homog1d",
    "dirac_probe",
    "convergence_study",
    "richardson_extrapolate",
    "write_profile_csv",
    "write_table_csv",
]


@dataclass(frozen=True)
class ArcProfile:
    """Tangential-gradient values of one arc, one entry per intersected
    triangle piece, plus the length-weighted arc average."""

    arc: int
    theta: float
    piece_tri: np.ndarray
    piece_t0: np.ndarray
    piece_t1: np.ndarray
    piece_length: np.ndarray
    piece_grad: np.ndarray
    avg_grad: float


def tangential_profile(
    mesh: TriangleMesh,
    fem: FemSystem,
    U: np.ndarray,
    net: WeightedNetwork,
    index: SpatialIndex | None = None,
    pieces: ArcPieces | None = None,
) -> list[ArcProfile]:
    """Per-arc |grad_tau u|: the per-triangle constant gradient of the P1
    field projected on the arc direction, one value per arc-triangle piece."""
    if index is None:
        index = SpatialIndex(mesh)
    if pieces is None:
        pieces = arc_pieces(index, mesh, net)
    gx = fem.Kx @ U
    gy = fem.Ky @ U
    d = net.points[net.edges[:, 1]] - net.points[net.edges[:, 0]]
    norms = np.hypot(d[:, 0], d[:, 1])
    profiles = []
    for arc_id in range(len(net.edges)):
        sel = pieces.arc == arc_id
        if norms[arc_id] <= 0:
            continue
        tx, ty = d[arc_id] / norms[arc_id]
        tri = pieces.tri[sel]
        grad = np.abs(gx[tri] * tx + gy[tri] * ty)
        length = pieces.length[sel]
        total = float(length.sum())
        avg = float(np.dot(length, grad) / total) if total > 0 else 0.0
        profiles.append(
            ArcProfile(
                arc=arc_id,
                theta=float(net.theta[arc_id]),
                piece_tri=tri,
                piece_t0=pieces.t0[sel],
                piece_t1=pieces.t1[sel],
                piece_length=length,
                piece_grad=grad,
                avg_grad=avg,
            )
        )
    return profiles


@dataclass(frozen=True)
class OptimalityReport:
    """Descriptive statistics of |grad_tau u| split by multiplicity: the
    estimated constant on {theta > threshold}, its coefficient of variation,
    and the maximum on the unit-multiplicity part."""

    c_est: float
    cv_on_splus: float
    max_on_sminus: float
    splus_length: float
    sminus_length: float
    c_defined: bool


def optimality_report(profiles: list[ArcProfile], theta_threshold: float = 1.0 + 1e-6) -> OptimalityReport:
    """Summarize a profile against the constant-tangential-gradient
    optimality condition. Purely descriptive; no pass/fail."""
    if not profiles:
        raise ValueError("empty profile")
    plus_w, plus_g = [], []
    minus_w, minus_g = [], []
    for p in profiles:
        if p.theta > theta_threshold:
            plus_w.append(p.piece_length)
            plus_g.append(p.piece_grad)
        else:
            minus_w.append(p.piece_length)
            minus_g.append(p.piece_grad)
    sminus_len = float(np.concatenate(minus_w).sum()) if minus_w else 0.0
    max_minus = float(np.concatenate(minus_g).max()) if minus_g else 0.0
    if not plus_w:
        return OptimalityReport(
            c_est=float("nan"),
            cv_on_splus=float("nan"),
            max_on_sminus=max_minus,
            splus_length=0.0,
            sminus_length=sminus_len,
            c_defined=False,
        )
    w = np.concatenate(plus_w)
    g = np.concatenate(plus_g)
    total = float(w.sum())
    c = float(np.dot(w, g) / total)
    var = float(np.dot(w, (g - c) ** 2) / total)
    cv = float(np.sqrt(var) / c) if c > 0 else float("inf")
    return OptimalityReport(
        c_est=c,
        cv_on_splus=cv,
        max_on_sminus=max_minus,
        splus_length=total,
        sminus_length=sminus_len,
        c_defined=True,
    )


# -- 1D oscillating-multiplicity example -------------------------------------


@dataclass(frozen=True)
class HomogRecord:
    periods: int
    elements: int
    E_n: float
    E_harmonic: float
    E_arithmetic: float


def _solve_1d(theta_per_element: np.ndarray, grid: np.ndarray) -> float:
    """Minimum of int (theta/2)|u'|^2 - s*u over [-1, 1] with free endpoints
    via P1 elements; the load s has zero mean so the Neumann problem is
    solvable and the energy equals -1/2 b.u."""
    h = np.diff(grid)
    n = len(grid)
    k_main = np.zeros(n)
    k_off = -theta_per_element / h
    k_main[:-1] -= k_off
    k_main[1:] -= k_off
    K = sp.diags([k_off, k_main, k_off], [-1, 0, 1], format="csc")
    # exact load integration: rho(s) = s is linear, so M @ nodal values is exact
    m_off = h / 6.0
    m_main = np.zeros(n)
    m_main[:-1] += h / 3.0
    m_main[1:] += h / 3.0
    M = sp.diags([m_off, m_main, m_off], [-1, 0, 1], format="csc")
    b = M @ grid
    # pin the first node (energy is shift-invariant since b sums to zero)
    u = np.zeros(n)
    u[1:] = spla.splu(K[1:, 1:]).solve(b[1:])
    return -0.5 * float(np.dot(b, u))


def homog1d(periods: int, elements_per_period: int = 16) -> HomogRecord:
    """Energy of the 1D free-endpoint problem with multiplicity alternating
    between 1 and 2 over ``periods`` periods on [-1, 1], load rho(s) = s,
    next to the constant-coefficient minima for the harmonic-mean (4/3) and
    arithmetic-mean (3/2) coefficients, both of which equal -2/(15 a) in
    closed form.

    As periods grow, E_n approaches the harmonic value -0.1, strictly below
    the arithmetic value, which is the energy gap of oscillating
    multiplicities."""
    if periods < 1:
        raise ValueError("periods must be >= 1")
    if elements_per_period < 2 or elements_per_period % 2:
        raise ValueError("elements_per_period must be even and >= 2")
    n_el = periods * elements_per_period
    grid = np.linspace(-1.0, 1.0, n_el + 1)
    mid = 0.5 * (grid[:-1] + grid[1:])
    # multiplicity pattern g(n s): 2-periodic, 1 on [-1, 0), 2 on [0, 1)
    residue = np.mod(periods * mid, 2.0)
    theta = np.where(residue < 1.0, 2.0, 1.0)
    e_n = _solve_1d(theta, grid)
    e_harm = _solve_1d(np.full(n_el, 4.0 / 3.0), grid)
    e_arith = _solve_1d(np.full(n_el, 3.0 / 2.0), grid)
    return HomogRecord(
        periods=periods,
        elements=n_el,
        E_n=e_n,
        E_harmonic=e_harm,
        E_arithmetic=e_arith,
    )


# -- Dirac degeneracy probe ---------------------------------------------------


def dirac_probe(
    A,
    B,
    L: float,
    refinements,
    m: float = 0.5,
    radius: float = 1.0,
    factor_convention: str = "energy_consistent",
) -> list[tuple[int, float, int, float]]:
    """Energy of a fixed admissible network of mass L under the load
    delta_A - delta_B across nested refinements.

    For L < |A-B| the network is the length-L segment centered between A and
    B (reaching neither), so the energies diverge as the mesh refines; for
    L = |A-B| it is the segment [A, B] and the energies stabilize.

    Returns rows (refinement, h, n_triangles, energy)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    dist = float(np.hypot(*(B - A)))
    if dist <= 0:
        raise ValueError("A and B must be distinct")
    if L > dist * (1.0 + 1e-12):
        raise ValueError("dirac_probe covers only L <= |A - B|")
    if abs(L - dist) <= 1e-12 * max(1.0, dist):
        seg_a, seg_b = A, B
    else:
        mid = 0.5 * (A + B)
        d = (B - A) / dist
        seg_a = mid - 0.5 * L * d
        seg_b = mid + 0.5 * L * d
    net = WeightedNetwork(points=[seg_a, seg_b], edges=[[0, 1]], theta=[1.0])
    load = LoadSpec.dirac([((A[0], A[1]), 1.0), ((B[0], B[1]), -1.0)])
    cfg = SolveConfig(m=m, factor_convention=factor_convention)

    rows = []
    for r in refinements:
        mesh = generate_disk_mesh(radius, r)
        fem = assemble_fem(mesh)
        index = SpatialIndex(mesh)
        ev = Evaluator(mesh, fem, index, load, cfg, L=max(L, 1e-9))
        energy = ev.network_cost(net)
        rows.append((int(r), radius / 2**r, mesh.n_triangles, float(energy)))
    return rows


# -- mesh convergence ---------------------------------------------------------


def richardson_extrapolate(energies) -> tuple[float, float]:
    """Limit estimate from the last three values of a (near) geometrically
    converging sequence; returns (limit, observed order)."""
    e = list(energies)
    if len(e) < 3:
        return float(e[-1]), float("nan")
    e0, e1, e2 = e[-3], e[-2], e[-1]
    d0, d1 = e1 - e0, e2 - e1
    if d1 == 0 or d0 / d1 <= 1.0:
        return float(e2), float("nan")
    p = float(np.log2(d0 / d1))
    return float(e2 + d1 / (2.0**p - 1.0)), p


def convergence_study(
    load: LoadSpec,
    network: WeightedNetwork | None,
    refinements,
    m: float = 0.5,
    L: float | None = None,
    radius: float = 1.0,
    factor_convention: str = "energy_consistent",
) -> dict:
    """Energies across nested disk refinements plus the Richardson limit.

    ``network=None`` evaluates the unreinforced membrane."""
    cfg = SolveConfig(m=m, factor_convention=factor_convention)
    rows = []
    for r in refinements:
        mesh = generate_disk_mesh(radius, r)
        fem = assemble_fem(mesh)
        index = SpatialIndex(mesh)
        if network is None:
            ev = Evaluator(mesh, fem, index, load, cfg, L=1.0)
            energy, _ = ev.bare()
        else:
            budget = L if L is not None else network.mass()
            ev = Evaluator(mesh, fem, index, load, cfg, L=budget)
            energy = ev.network_cost(network)
        rows.append((mesh.n_triangles, float(energy)))
    limit, order = richardson_extrapolate([e for _, e in rows])
    return {"rows": rows, "extrapolated": limit, "order": order}


# -- CSV emitters -------------------------------------------------------------


def write_profile_csv(path, net: WeightedNetwork, profiles: list[ArcProfile]) -> None:
    """Polyline CSV (x0, y0, x1, y1, theta, grad_tau), one row per piece."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x0", "y0", "x1", "y1", "theta", "grad_tau"])
        for p in profiles:
            i, j = net.edges[p.arc]
            a = net.points[int(i)]
            b = net.points[int(j)]
            for t0, t1, g in zip(p.piece_t0, p.piece_t1, p.piece_grad):
                q0 = a + t0 * (b - a)
                q1 = a + t1 * (b - a)
                writer.writerow(
                    [f"{q0[0]:.17g}", f"{q0[1]:.17g}", f"{q1[0]:.17g}", f"{q1[1]:.17g}",
                     f"{p.theta:.17g}", f"{g:.17g}"]
                )


def write_table_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
