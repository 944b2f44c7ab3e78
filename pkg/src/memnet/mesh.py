"""Triangular meshes of the computational domain and P1 finite-element
operators.

The disk mesher refines a hexagonal fan by uniform midpoint subdivision,
snapping boundary midpoints radially onto the circle, so a refinement level
``r`` carries ``segments * 4**r`` triangles and every boundary vertex sits on
the circle to machine precision.

``assemble_fem`` produces the stiffness matrix ``K``, the mass matrix ``M``
and the per-triangle differentiation operators ``Kx``/``Ky`` of piecewise
linear elements, tied together by the identity

    K == Kx^T diag(areas) Kx + Ky^T diag(areas) Ky.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .geometry import PolygonDomain, as_points

__all__ = [
    "TriangleMesh",
    "FemSystem",
    "MeshFormatError",
    "MeshValidationError",
    "generate_disk_mesh",
    "load_mesh",
    "save_mesh",
    "assemble_fem",
    "domain_from_mesh",
]


class MeshFormatError(ValueError):
    """Malformed mesh file; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MeshValidationError(ValueError):
    """Mesh data violates a structural invariant (bounds, conformity...)."""


class TriangleMesh:
    """Conforming triangulation: vertex coordinates, triangle connectivity
    and boundary-vertex flags.

    Triangles are normalized to counter-clockwise orientation on
    construction; zero-area triangles and non-conforming connectivity
    (an edge shared by more than two triangles, duplicated triangles,
    out-of-range indices) are rejected.
    """

    def __init__(self, vertices, triangles, validate: bool = True):
        self.vertices = as_points(vertices)
        tris = np.asarray(triangles, dtype=np.int64)
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise MeshValidationError(f"triangles must be (n, 3), got {tris.shape}")
        self.triangles = tris.copy()
        if validate:
            self._validate_and_normalize()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def _signed_areas(self) -> np.ndarray:
        v = self.vertices
        t = self.triangles
        a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        return 0.5 * (
            (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
            - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        )

    def _validate_and_normalize(self):
        n_p = self.n_vertices
        t = self.triangles
        if len(t) == 0:
            raise MeshValidationError("mesh has no triangles")
        if t.min() < 0 or t.max() >= n_p:
            bad = int(np.flatnonzero((t < 0).any(axis=1) | (t >= n_p).any(axis=1))[0])
            raise MeshValidationError(f"triangle {bad} references a vertex out of range")
        same = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
        if same.any():
            raise MeshValidationError(
                f"triangle {int(np.flatnonzero(same)[0])} has repeated vertex indices"
            )
        areas = self._signed_areas()
        flip = areas < 0
        if flip.any():
            self.triangles[flip] = self.triangles[flip][:, ::-1]
            areas = np.abs(areas)
        scale = max(float(np.abs(self.vertices).max()), 1.0)
        degenerate = areas <= 1e-14 * scale * scale
        if degenerate.any():
            raise MeshValidationError(
                f"triangle {int(np.flatnonzero(degenerate)[0])} is degenerate (zero area)"
            )
        sorted_tris = np.sort(self.triangles, axis=1)
        _, counts = np.unique(sorted_tris, axis=0, return_counts=True)
        if (counts > 1).any():
            raise MeshValidationError("duplicated triangle (non-conforming mesh)")
        if (self._edge_counts > 2).any():
            raise MeshValidationError(
                "an edge is shared by more than two triangles (non-conforming mesh)"
            )

    # -- derived connectivity (computed lazily, immutable afterwards) --------

    @cached_property
    def _edge_data(self):
        """Unique undirected edges, their use counts, and the inverse map
        giving the edge id of local edge k (vertices k, k+1 mod 3) of each
        triangle."""
        t = self.triangles
        pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        pairs = np.sort(pairs, axis=1)
        edges, inverse, counts = np.unique(
            pairs, axis=0, return_inverse=True, return_counts=True
        )
        return edges, inverse.reshape(3, -1).T, counts

    @property
    def edges(self) -> np.ndarray:
        return self._edge_data[0]

    @property
    def _edge_counts(self) -> np.ndarray:
        return self._edge_data[2]

    @cached_property
    def boundary_vertex(self) -> np.ndarray:
        """Boolean flag per vertex: incident to an edge used by one triangle."""
        edges, _, counts = self._edge_data
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[edges[counts == 1].ravel()] = True
        return flags

    @cached_property
    def neighbors(self) -> np.ndarray:
        """(n_t, 3) triangle adjacency: entry [t, k] is the triangle sharing
        local edge k (vertices k, k+1 mod 3) of triangle t, or -1 on the
        boundary."""
        edges, edge_of, counts = self._edge_data
        n_t = self.n_triangles
        first = np.full(len(edges), -1, dtype=np.int64)
        second = np.full(len(edges), -1, dtype=np.int64)
        flat_edge = edge_of.T.ravel()  # local edge k of triangle t at k * n_t + t
        tri_ids = np.tile(np.arange(n_t, dtype=np.int64), 3)
        order = np.argsort(flat_edge, kind="stable")
        sorted_edges = flat_edge[order]
        sorted_tris = tri_ids[order]
        starts = np.searchsorted(sorted_edges, np.arange(len(edges)))
        first[:] = sorted_tris[starts]
        has_two = counts == 2
        second[has_two] = sorted_tris[starts[has_two] + 1]
        nbr = np.full((n_t, 3), -1, dtype=np.int64)
        for k in range(3):
            e = edge_of[:, k]
            own = np.arange(n_t)
            other = np.where(first[e] == own, second[e], first[e])
            nbr[:, k] = other
        return nbr

    @cached_property
    def tri_bboxes(self) -> np.ndarray:
        """(n_t, 4) per-triangle bounding boxes (xmin, ymin, xmax, ymax)."""
        v = self.vertices
        t = self.triangles
        xs = v[t, 0]
        ys = v[t, 1]
        return np.column_stack([xs.min(1), ys.min(1), xs.max(1), ys.max(1)])

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        v = self.vertices
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return float(np.hypot(x1 - x0, y1 - y0))

    def total_area(self) -> float:
        return float(np.sum(self._signed_areas()))


def generate_disk_mesh(
    radius: float = 1.0,
    refinement: int = 0,
    segments: int = 6,
    center: tuple[float, float] = (0.0, 0.0),
) -> TriangleMesh:
    """Mesh the disk by uniform subdivision of an inscribed fan.

    Level 0 is a fan of ``segments`` triangles around the center; each
    refinement splits every triangle in four, snapping boundary-edge
    midpoints radially back onto the circle.

    Parameters
    ----------
    radius : float
        Disk radius (> 0).
    refinement : int
        Uniform subdivision levels; level r carries ``segments * 4**r``
        triangles.
    segments : int
        Fan size of the level-0 mesh (>= 3); 6 gives the hexagonal fan.
    center : (float, float)
        Disk center.

    Returns
    -------
    TriangleMesh
        Conforming mesh with every boundary vertex at distance ``radius``
        from the center (to machine precision).
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if refinement < 0:
        raise ValueError("refinement must be >= 0")
    if segments < 3:
        raise ValueError("need at least 3 fan segments")
    cx, cy = center
    angles = 2.0 * np.pi * np.arange(segments) / segments
    verts = np.empty((segments + 1, 2))
    verts[0] = (cx, cy)
    verts[1:, 0] = cx + radius * np.cos(angles)
    verts[1:, 1] = cy + radius * np.sin(angles)
    ring = 1 + np.arange(segments)
    tris = np.column_stack(
        [np.zeros(segments, dtype=np.int64), ring, np.roll(ring, -1)]
    )

    for _ in range(refinement):
        verts, tris = _subdivide(verts, tris, radius, (cx, cy))

    return TriangleMesh(verts, tris)


def _subdivide(verts, tris, radius, center):
    """One uniform refinement step with radial snapping of boundary midpoints."""
    pairs = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    pairs = np.sort(pairs, axis=1)
    edges, inverse, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    mid = 0.5 * (verts[edges[:, 0]] + verts[edges[:, 1]])
    on_boundary = counts == 1
    if on_boundary.any():
        dx = mid[on_boundary, 0] - center[0]
        dy = mid[on_boundary, 1] - center[1]
        scale = radius / np.hypot(dx, dy)
        mid[on_boundary, 0] = center[0] + dx * scale
        mid[on_boundary, 1] = center[1] + dy * scale
    mid_ids = len(verts) + np.arange(len(edges))
    m = mid_ids[inverse].reshape(3, -1).T  # m01, m12, m20 per triangle
    v0, v1, v2 = tris[:, 0], tris[:, 1], tris[:, 2]
    m01, m12, m20 = m[:, 0], m[:, 1], m[:, 2]
    new_tris = np.concatenate(
        [
            np.column_stack([v0, m01, m20]),
            np.column_stack([v1, m12, m01]),
            np.column_stack([v2, m20, m12]),
            np.column_stack([m01, m12, m20]),
        ]
    )
    return np.concatenate([verts, mid]), new_tris


def save_mesh(mesh: TriangleMesh, path) -> None:
    """Write the plain-text mesh format.

    Line 1: ``n_p n_t``; then ``n_p`` lines ``x y b`` with full double
    precision and boundary flag b in {0, 1}; then ``n_t`` lines ``i j k``
    (0-based vertex indices).
    """
    flags = mesh.boundary_vertex.astype(int)
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for (x, y), b in zip(mesh.vertices, flags):
            fh.write(f"{x:.17g} {y:.17g} {b}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def load_mesh(path) -> TriangleMesh:
    """Read the plain-text mesh format; see :func:`save_mesh`.

    Raises :class:`MeshFormatError` with the offending line number on parse
    failures, and :class:`MeshValidationError` when the data is structurally
    invalid (bad indices, duplicated triangles, boundary flags inconsistent
    with the connectivity).
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MeshFormatError("empty file", 1)

    def tokens(idx, n, kind):
        if idx >= len(lines):
            raise MeshFormatError("unexpected end of file", len(lines) + 1)
        parts = lines[idx].split()
        if len(parts) != n:
            raise MeshFormatError(f"expected {n} {kind} fields, got {len(parts)}", idx + 1)
        return parts

    head = tokens(0, 2, "header")
    try:
        n_p, n_t = int(head[0]), int(head[1])
    except ValueError:
        raise MeshFormatError("header must be two integers 'n_p n_t'", 1) from None
    if n_p < 3 or n_t < 1:
        raise MeshFormatError("mesh must have at least 3 vertices and 1 triangle", 1)

    verts = np.empty((n_p, 2))
    flags = np.empty(n_p, dtype=bool)
    for i in range(n_p):
        parts = tokens(1 + i, 3, "vertex")
        try:
            verts[i] = (float(parts[0]), float(parts[1]))
            b = int(parts[2])
        except ValueError:
            raise MeshFormatError("vertex line must be 'x y b'", 2 + i) from None
        if b not in (0, 1):
            raise MeshFormatError("boundary flag must be 0 or 1", 2 + i)
        flags[i] = bool(b)

    tris = np.empty((n_t, 3), dtype=np.int64)
    for j in range(n_t):
        parts = tokens(1 + n_p + j, 3, "triangle")
        try:
            tris[j] = (int(parts[0]), int(parts[1]), int(parts[2]))
        except ValueError:
            raise MeshFormatError("triangle line must be 'i j k'", 2 + n_p + j) from None

    mesh = TriangleMesh(verts, tris)
    if not np.array_equal(mesh.boundary_vertex, flags):
        raise MeshValidationError(
            "stored boundary flags disagree with the mesh connectivity"
        )
    return mesh


@dataclass(frozen=True)
class FemSystem:
    """Assembled P1 operators: stiffness K, mass M (both n_p x n_p),
    differentiation operators Kx/Ky (n_t x n_p), triangle areas, and the
    boundary flags carried over from the mesh."""

    K: sp.csr_matrix
    M: sp.csr_matrix
    Kx: sp.csr_matrix
    Ky: sp.csr_matrix
    areas: np.ndarray
    boundary: np.ndarray

    @property
    def n_vertices(self) -> int:
        return self.K.shape[0]

    @property
    def n_triangles(self) -> int:
        return len(self.areas)

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary)


def assemble_fem(mesh: TriangleMesh, lumped_mass: bool = False) -> FemSystem:
    """Assemble P1 stiffness, mass and differentiation operators.

    The stiffness entries come from the exact per-triangle formula
    (b_i b_j + c_i c_j) / (4A); the mass matrix uses exact P1 quadrature
    (A/6 diagonal, A/12 off-diagonal pattern) unless ``lumped_mass`` asks
    for the row-sum lumped variant.
    """
    v = mesh.vertices
    t = mesh.triangles
    n_p, n_t = mesh.n_vertices, mesh.n_triangles
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    # Gradient coefficients of the three barycentric basis functions:
    # grad(lambda_i) = (b_i, c_i) / (2A).
    b = np.column_stack([p1[:, 1] - p2[:, 1], p2[:, 1] - p0[:, 1], p0[:, 1] - p1[:, 1]])
    c = np.column_stack([p2[:, 0] - p1[:, 0], p0[:, 0] - p2[:, 0], p1[:, 0] - p0[:, 0]])
    areas = 0.5 * (
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    )
    if np.any(areas <= 0):
        bad = int(np.flatnonzero(areas <= 0)[0])
        raise MeshValidationError(f"triangle {bad} is degenerate or mis-oriented")

    rows = np.repeat(np.arange(n_t), 3)
    Kx = sp.csr_matrix(
        (0.5 * (b / areas[:, None]).ravel(), (rows, t.ravel())), shape=(n_t, n_p)
    )
    Ky = sp.csr_matrix(
        (0.5 * (c / areas[:, None]).ravel(), (rows, t.ravel())), shape=(n_t, n_p)
    )

    ii = np.repeat(t, 3, axis=1).ravel()  # i index of all 9 local pairs
    jj = np.tile(t, (1, 3)).ravel()
    k_local = (
        b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    ) / (4.0 * areas[:, None, None])
    K = sp.csr_matrix((k_local.ravel(), (ii, jj)), shape=(n_p, n_p))

    if lumped_mass:
        m_local = np.broadcast_to((areas / 3.0)[:, None], (n_t, 3))
        M = sp.csr_matrix((m_local.ravel(), (t.ravel(), t.ravel())), shape=(n_p, n_p))
    else:
        pattern = (np.ones((3, 3)) + np.eye(3)) / 12.0
        m_local = areas[:, None, None] * pattern
        M = sp.csr_matrix((m_local.ravel(), (ii, jj)), shape=(n_p, n_p))

    K.sum_duplicates()
    M.sum_duplicates()
    return FemSystem(K=K, M=M, Kx=Kx, Ky=Ky, areas=areas, boundary=mesh.boundary_vertex.copy())


def domain_from_mesh(mesh: TriangleMesh) -> PolygonDomain:
    """Convex polygon spanned by the mesh boundary vertices.

    Used as the clamping domain when evaluating networks on a mesh: the
    admissible set must stay inside the triangulated region, which for
    boundary-snapped disk meshes is the inscribed polygon, not the ideal
    circle.
    """
    from scipy.spatial import ConvexHull

    pts = mesh.vertices[mesh.boundary_vertex]
    hull = ConvexHull(pts)
    return PolygonDomain(pts[hull.vertices])
