"""Point location in a triangulation: quadtree over triangle bounding boxes
plus a uniform hash grid over the vertices.

``locate`` is boundary-inclusive and breaks ties (points on shared edges or
vertices) toward the lowest triangle index, so results are deterministic.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

__all__ = ["SpatialIndex", "build_spatial_index", "locate", "OUTSIDE"]

OUTSIDE = -1

_MAX_LEAF = 16
_MAX_DEPTH = 14


class _QuadNode:
    __slots__ = ("x0", "y0", "x1", "y1", "items", "children")

    def __init__(self, x0, y0, x1, y1):
        self.x0, self.y0, self.x1, self.y1 = x0, y0, x1, y1
        self.items: list[int] = []
        self.children = None


class SpatialIndex:
    """Quadtree of triangle bounding boxes and a vertex hash grid for a fixed
    mesh. Immutable once built; safe for concurrent queries."""

    def __init__(self, mesh: TriangleMesh):
        self.mesh = mesh
        self.tol = 1e-9 * max(mesh.diameter, 1e-300)
        bx0, by0, bx1, by1 = mesh.bbox
        pad = self.tol
        self._root = _QuadNode(bx0 - pad, by0 - pad, bx1 + pad, by1 + pad)
        boxes = mesh.tri_bboxes
        for t in range(mesh.n_triangles):
            self._insert(self._root, t, boxes[t], 0)
        self._build_vertex_grid()

    # -- quadtree ------------------------------------------------------------

    def _insert(self, node, tri, box, depth):
        while True:
            if node.children is None:
                node.items.append(tri)
                if len(node.items) > _MAX_LEAF and depth < _MAX_DEPTH:
                    self._split(node)
                    items, node.items = node.items, []
                    boxes = self.mesh.tri_bboxes
                    for it in items:
                        self._insert(node, it, boxes[it], depth)
                return
            child = self._child_for(node, box)
            if child is None:
                node.items.append(tri)  # straddles the split lines
                return
            node = child
            depth += 1

    @staticmethod
    def _split(node):
        mx = 0.5 * (node.x0 + node.x1)
        my = 0.5 * (node.y0 + node.y1)
        node.children = (
            _QuadNode(node.x0, node.y0, mx, my),
            _QuadNode(mx, node.y0, node.x1, my),
            _QuadNode(node.x0, my, mx, node.y1),
            _QuadNode(mx, my, node.x1, node.y1),
        )

    @staticmethod
    def _child_for(node, box):
        mx = 0.5 * (node.x0 + node.x1)
        my = 0.5 * (node.y0 + node.y1)
        left = box[2] <= mx
        right = box[0] >= mx
        bottom = box[3] <= my
        top = box[1] >= my
        if left and bottom:
            return node.children[0]
        if right and bottom:
            return node.children[1]
        if left and top:
            return node.children[2]
        if right and top:
            return node.children[3]
        return None

    def point_candidates(self, x: float, y: float) -> list[int]:
        """Triangles whose bounding box contains (x, y), via the quadtree."""
        tol = self.tol
        boxes = self.mesh.tri_bboxes
        out: list[int] = []
        stack = [self._root]
        while stack:
            node = stack.pop()
            if x < node.x0 - tol or x > node.x1 + tol or y < node.y0 - tol or y > node.y1 + tol:
                continue
            for t in node.items:
                bx0, by0, bx1, by1 = boxes[t]
                if bx0 - tol <= x <= bx1 + tol and by0 - tol <= y <= by1 + tol:
                    out.append(t)
            if node.children is not None:
                stack.extend(node.children)
        return out

    def segment_candidates(self, a, b) -> np.ndarray:
        """Triangles whose bounding box overlaps the bounding box of segment
        [a, b]. Vectorized scan; candidates are exact up to the padding
        tolerance, final clipping decides membership."""
        tol = self.tol
        x0, x1 = (a[0], b[0]) if a[0] <= b[0] else (b[0], a[0])
        y0, y1 = (a[1], b[1]) if a[1] <= b[1] else (b[1], a[1])
        boxes = self.mesh.tri_bboxes
        mask = (
            (boxes[:, 0] <= x1 + tol)
            & (boxes[:, 2] >= x0 - tol)
            & (boxes[:, 1] <= y1 + tol)
            & (boxes[:, 3] >= y0 - tol)
        )
        return np.flatnonzero(mask)

    # -- vertex hash grid ----------------------------------------------------

    def _build_vertex_grid(self):
        v = self.mesh.vertices
        bx0, by0, bx1, by1 = self.mesh.bbox
        n_cells = max(1, int(np.sqrt(len(v))))
        self._grid_origin = (bx0, by0)
        self._grid_step = (
            max((bx1 - bx0) / n_cells, 1e-300),
            max((by1 - by0) / n_cells, 1e-300),
        )
        self._grid_n = n_cells
        ix = np.clip(((v[:, 0] - bx0) / self._grid_step[0]).astype(int), 0, n_cells - 1)
        iy = np.clip(((v[:, 1] - by0) / self._grid_step[1]).astype(int), 0, n_cells - 1)
        cells: dict[tuple[int, int], list[int]] = {}
        for idx, key in enumerate(zip(ix.tolist(), iy.tolist())):
            cells.setdefault(key, []).append(idx)
        self._vertex_cells = cells

    def vertices_near(self, x: float, y: float, r: float) -> list[int]:
        """Vertex ids within distance r of (x, y)."""
        ox, oy = self._grid_origin
        sx, sy = self._grid_step
        n = self._grid_n
        ix0 = max(0, int((x - r - ox) / sx))
        ix1 = min(n - 1, int((x + r - ox) / sx))
        iy0 = max(0, int((y - r - oy) / sy))
        iy1 = min(n - 1, int((y + r - oy) / sy))
        v = self.mesh.vertices
        out = []
        for cx in range(ix0, ix1 + 1):
            for cy in range(iy0, iy1 + 1):
                for idx in self._vertex_cells.get((cx, cy), ()):
                    if (v[idx, 0] - x) ** 2 + (v[idx, 1] - y) ** 2 <= r * r:
                        out.append(idx)
        return out

    # -- queries ---------------------------------------------------------------

    def locate(self, point) -> int:
        """Containing triangle id (lowest index on ties) or ``OUTSIDE``."""
        x, y = float(point[0]), float(point[1])
        cand = self.point_candidates(x, y)
        if not cand:
            return OUTSIDE
        cand_arr = np.asarray(cand, dtype=np.int64)
        hit = self.contains_mask(cand_arr, x, y)
        if not hit.any():
            return OUTSIDE
        return int(cand_arr[hit].min())

    def contains_mask(self, tris: np.ndarray, x: float, y: float) -> np.ndarray:
        """Boundary-inclusive point-in-triangle test for the given triangles."""
        v = self.mesh.vertices
        t = self.mesh.triangles[tris]
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        tol = self.tol

        def side(a, b):
            ex = b[:, 0] - a[:, 0]
            ey = b[:, 1] - a[:, 1]
            cross = ex * (y - a[:, 1]) - ey * (x - a[:, 0])
            return cross >= -tol * np.hypot(ex, ey)

        return side(p0, p1) & side(p1, p2) & side(p2, p0)


def build_spatial_index(mesh: TriangleMesh) -> SpatialIndex:
    """Build the quadtree + vertex-grid index for a mesh."""
    return SpatialIndex(mesh)


def locate(index: SpatialIndex, point) -> int:
    """Triangle containing ``point`` (boundary-inclusive, lowest index on
    shared-edge ties) or ``OUTSIDE``."""
    return index.locate(point)
