"""Convex domain descriptors and the small planar-geometry helpers shared
across the package.

Points are plain ``(x, y)`` pairs stored in float64 arrays of shape ``(n, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DiskDomain",
    "PolygonDomain",
    "as_points",
    "polygon_area",
]


def as_points(points) -> np.ndarray:
    """Coerce input to a float64 array of shape (n, 2) and reject non-finite
    coordinates."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def polygon_area(vertices: np.ndarray) -> float:
    """Signed area of a polygon (positive for counter-clockwise order)."""
    v = as_points(vertices)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


@dataclass(frozen=True)
class DiskDomain:
    """Closed disk of given center and radius."""

    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return (cx - r, cy - r, cx + r, cy + r)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def contains(self, points) -> np.ndarray:
        pts = as_points(points)
        d = np.hypot(pts[:, 0] - self.center[0], pts[:, 1] - self.center[1])
        return d <= self.radius

    def clamp(self, points) -> np.ndarray:
        """Replace each point by its closest point of the closed disk."""
        pts = as_points(points).copy()
        dx = pts[:, 0] - self.center[0]
        dy = pts[:, 1] - self.center[1]
        d = np.hypot(dx, dy)
        outside = d > self.radius
        if np.any(outside):
            scale = self.radius / d[outside]
            pts[outside, 0] = self.center[0] + dx[outside] * scale
            pts[outside, 1] = self.center[1] + dy[outside] * scale
        return pts


@dataclass(frozen=True)
class PolygonDomain:
    """Closed convex polygon given by its vertices in counter-clockwise order.

    Convexity is assumed (the admissible-network machinery relies on clamping
    being 1-Lipschitz, which holds only for convex sets); a degenerate or
    clockwise polygon is rejected.
    """

    vertices: tuple[tuple[float, float], ...]

    def __init__(self, vertices):
        v = as_points(vertices)
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if polygon_area(v) <= 0:
            raise ValueError("polygon vertices must be in counter-clockwise order")
        object.__setattr__(self, "vertices", tuple(map(tuple, v)))

    @property
    def _verts(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        v = self._verts
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    @property
    def diameter(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return float(np.hypot(x1 - x0, y1 - y0))

    def contains(self, points) -> np.ndarray:
        pts = as_points(points)
        v = self._verts
        w = np.roll(v, -1, axis=0)
        ex = w[:, 0] - v[:, 0]
        ey = w[:, 1] - v[:, 1]
        # cross(edge, p - v) >= 0 for all edges <=> inside (ccw polygon)
        cross = ex[None, :] * (pts[:, 1:2] - v[None, :, 1]) - ey[None, :] * (
            pts[:, 0:1] - v[None, :, 0]
        )
        tol = -1e-12 * max(self.diameter, 1.0) ** 2
        return np.all(cross >= tol, axis=1)

    def clamp(self, points) -> np.ndarray:
        """Replace each point by its closest point of the closed polygon.

        Interior points are returned unchanged (bitwise)."""
        pts = as_points(points).copy()
        inside = self.contains(pts)
        if np.all(inside):
            return pts
        out = np.flatnonzero(~inside)
        v = self._verts
        w = np.roll(v, -1, axis=0)
        e = w - v
        ee = np.einsum("ij,ij->i", e, e)
        for k in out:
            p = pts[k]
            t = np.clip(((p - v) * e).sum(axis=1) / ee, 0.0, 1.0)
            proj = v + t[:, None] * e
            d2 = ((proj - p) ** 2).sum(axis=1)
            pts[k] = proj[np.argmin(d2)]
        return pts
