"""Coupling the 1D network to the 2D mesh: segment-triangle intersection
lengths, the per-triangle weighted-length vector, and load assembly
(constant, nodal, and Dirac loads).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .mesh import FemSystem, TriangleMesh
from .network import WeightedNetwork
from .spatial import OUTSIDE, SpatialIndex

__all__ = [
    "LoadSpec",
    "GeometryError",
    "segment_triangle_length",
    "ArcPieces",
    "arc_pieces",
    "accumulate_vlengths",
    "assemble_load",
]


class GeometryError(RuntimeError):
    """A network segment escapes the triangulated region."""


@dataclass(frozen=True)
class LoadSpec:
    """Load on the membrane: a constant, nodal samples, or a finite signed
    combination of Dirac masses."""

    kind: str
    value: float = 0.0
    samples: np.ndarray | None = None
    points: np.ndarray | None = None
    weights: np.ndarray | None = None

    @staticmethod
    def constant(value: float = 1.0) -> "LoadSpec":
        return LoadSpec(kind="constant", value=float(value))

    @staticmethod
    def nodal(samples) -> "LoadSpec":
        return LoadSpec(kind="nodal", samples=np.asarray(samples, dtype=float))

    @staticmethod
    def dirac(masses) -> "LoadSpec":
        """masses: iterable of ((x, y), weight)."""
        pts = np.asarray([[p[0][0], p[0][1]] for p in masses], dtype=float)
        w = np.asarray([p[1] for p in masses], dtype=float)
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise ValueError("dirac points and weights must be finite")
        return LoadSpec(kind="dirac", points=pts, weights=w)


def segment_triangle_length(a, b, tri_vertices) -> float:
    """Length of [a, b] intersected with the closed triangle, by clipping the
    segment parameter interval against the three half-planes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    v = np.asarray(tri_vertices, dtype=float).reshape(3, 2)
    # ensure ccw
    area2 = (v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[1, 1] - v[0, 1]) * (
        v[2, 0] - v[0, 0]
    )
    if area2 == 0:
        raise ValueError("degenerate triangle")
    if area2 < 0:
        v = v[::-1]
    t0, t1 = 0.0, 1.0
    for k in range(3):
        p = v[k]
        q = v[(k + 1) % 3]
        ex, ey = q[0] - p[0], q[1] - p[1]
        da = ex * (a[1] - p[1]) - ey * (a[0] - p[0])
        db = ex * (b[1] - p[1]) - ey * (b[0] - p[0])
        if da < 0.0 and db < 0.0:
            return 0.0
        if da < 0.0:
            t0 = max(t0, da / (da - db))
        elif db < 0.0:
            t1 = min(t1, da / (da - db))
    if t1 <= t0:
        return 0.0
    return float((t1 - t0) * np.hypot(b[0] - a[0], b[1] - a[1]))


@dataclass(frozen=True)
class ArcPieces:
    """Flat arrays describing every arc-triangle intersection piece of a
    network: arc id, triangle id, parameter interval, piece length."""

    arc: np.ndarray
    tri: np.ndarray
    t0: np.ndarray
    t1: np.ndarray
    length: np.ndarray


def arc_pieces(index: SpatialIndex, mesh: TriangleMesh, net: WeightedNetwork) -> ArcPieces:
    """Intersect every arc with the mesh triangles.

    Pieces along shared mesh edges are attributed to the lowest-index incident
    triangle only; an arc whose in-mesh pieces do not add up to its length
    (endpoint outside the triangulation beyond tolerance) is a geometry error.
    """
    impl = kernels.active()
    tol = index.tol
    pts = net.points
    a = pts[net.edges[:, 0]]
    b = pts[net.edges[:, 1]]
    seg_len = np.hypot(b[:, 0] - a[:, 0], b[:, 1] - a[:, 1])
    live = np.flatnonzero(seg_len > 0.0)

    if live.size == 0:
        empty_i = np.empty(0, dtype=np.int64)
        empty_f = np.empty(0, dtype=float)
        return ArcPieces(arc=empty_i, tri=empty_i.copy(), t0=empty_f, t1=empty_f.copy(),
                         length=empty_f.copy())

    arc_local, tri, t0, t1 = impl.network_pieces(
        np.ascontiguousarray(a[live, 0]),
        np.ascontiguousarray(a[live, 1]),
        np.ascontiguousarray(b[live, 0]),
        np.ascontiguousarray(b[live, 1]),
        mesh.vertices,
        mesh.triangles,
        mesh.tri_bboxes,
        mesh.neighbors,
        tol,
    )
    arc = live[arc_local]
    length = (t1 - t0) * seg_len[arc]

    covered = np.zeros(len(net.edges))
    np.add.at(covered, arc, length)
    gap = np.abs(covered[live] - seg_len[live])
    bad = gap > 1e-8 * np.maximum(1.0, seg_len[live]) + 10.0 * tol
    if bad.any():
        worst = int(live[np.argmax(gap * bad)])
        raise GeometryError(
            f"arc {worst} leaves the mesh "
            f"(covered {covered[worst]:.12g} of {seg_len[worst]:.12g})"
        )
    return ArcPieces(arc=arc, tri=tri, t0=t0, t1=t1, length=length)


def accumulate_vlengths(
    index: SpatialIndex,
    mesh: TriangleMesh,
    net: WeightedNetwork,
    pieces: ArcPieces | None = None,
) -> np.ndarray:
    """Per-triangle theta-weighted network length: entry T holds
    sum_i theta_i * |arc_i inside T|, so the vector sums to the network mass."""
    if pieces is None:
        pieces = arc_pieces(index, mesh, net)
    v = np.zeros(mesh.n_triangles)
    np.add.at(v, pieces.tri, net.theta[pieces.arc] * pieces.length)
    return v


def assemble_load(
    mesh: TriangleMesh,
    fem: FemSystem,
    f: LoadSpec,
    index: SpatialIndex | None = None,
) -> np.ndarray:
    """Right-hand-side vector for the load.

    Constant/nodal loads give M @ F with F the nodal samples; a Dirac mass of
    weight w at p spreads w over the containing triangle's vertices by
    barycentric coordinates, so b . U approximates w * u(p) for P1 fields.
    """
    n_p = mesh.n_vertices
    if f.kind == "constant":
        return fem.M @ np.full(n_p, f.value)
    if f.kind == "nodal":
        samples = np.asarray(f.samples, dtype=float)
        if samples.shape != (n_p,):
            raise ValueError(f"nodal samples must have shape ({n_p},)")
        return fem.M @ samples
    if f.kind == "dirac":
        if index is None:
            index = SpatialIndex(mesh)
        b = np.zeros(n_p)
        for (x, y), w in zip(f.points, f.weights):
            t = index.locate((x, y))
            if t == OUTSIDE:
                raise ValueError(f"dirac point ({x}, {y}) lies outside the mesh")
            tri = mesh.triangles[t]
            p0, p1, p2 = mesh.vertices[tri]
            det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
            l1 = ((x - p0[0]) * (p2[1] - p0[1]) - (y - p0[1]) * (p2[0] - p0[0])) / det
            l2 = ((p1[0] - p0[0]) * (y - p0[1]) - (p1[1] - p0[1]) * (x - p0[0])) / det
            bary = np.array([1.0 - l1 - l2, l1, l2])
            b[tri] += w * bary
        return b
    raise ValueError(f"unknown load kind {f.kind!r}")
