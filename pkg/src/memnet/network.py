"""Candidate reinforcements: movable points, their canonical spanning tree,
and weighted networks (segments with multiplicity theta >= 1).

The optimizer's genotype is a :class:`NetworkParams` triplet (points, raw
per-edge weights, scale); the admissible phenotype is a
:class:`WeightedNetwork` produced by :func:`memnet.projection.make_admissible`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import as_points

__all__ = [
    "NetworkParams",
    "SpanningTree",
    "WeightedNetwork",
    "DegenerateNetworkError",
    "build_mst",
    "apply_homothety",
    "clamp_to_domain",
    "resample_network",
    "save_network",
    "load_network",
]

DEDUP_EPS_REL = 1e-12


class DegenerateNetworkError(ValueError):
    """Candidate cannot form a network (all points coincident, zero length)."""


@dataclass
class NetworkParams:
    """Raw optimizer triplet: n_d points, n_d - 1 per-edge weights (before
    projection) and a scale factor in (0, 1)."""

    points: np.ndarray
    weights: np.ndarray
    scale: float

    def __post_init__(self):
        self.points = as_points(self.points)
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.points) < 2:
            raise ValueError("need at least 2 points")
        if self.weights.shape != (len(self.points) - 1,):
            raise ValueError(
                f"expected {len(self.points) - 1} weights, got {self.weights.shape}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        if not (0.0 < self.scale < 1.0):
            raise ValueError("scale must lie in (0, 1)")

    @property
    def n_points(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class SpanningTree:
    """Spanning tree over a point set: n - 1 vertex-index pairs (each row
    (i, j) with i < j, rows in lexicographic order) and their Euclidean
    lengths."""

    edges: np.ndarray
    lengths: np.ndarray

    @property
    def total_length(self) -> float:
        return float(self.lengths.sum())


@dataclass
class WeightedNetwork:
    """Admissible reinforcement: connected polygonal set with per-arc
    multiplicity. Stored as unique points + arcs (index pairs) + theta, which
    is also the on-disk JSON layout."""

    points: np.ndarray
    edges: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.points = as_points(self.points)
        self.edges = np.asarray(self.edges, dtype=np.int64)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.edges.ndim != 2 or self.edges.shape[1] != 2:
            raise ValueError("edges must be (n, 2) index pairs")
        if len(self.theta) != len(self.edges):
            raise ValueError("need one theta per edge")
        if len(self.edges) and (self.edges.min() < 0 or self.edges.max() >= len(self.points)):
            raise ValueError("edge index out of range")

    @property
    def lengths(self) -> np.ndarray:
        d = self.points[self.edges[:, 1]] - self.points[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def segments(self):
        """Iterate (endpoint a, endpoint b, theta) per arc."""
        for (i, j), th in zip(self.edges, self.theta):
            yield self.points[i], self.points[j], float(th)

    def mass(self) -> float:
        """Weighted length sum(theta_i * length_i)."""
        return float(np.dot(self.lengths, self.theta))

    def total_length(self) -> float:
        return float(self.lengths.sum())

    def is_connected(self) -> bool:
        n = len(self.points)
        parent = list(range(n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for i, j in self.edges:
            ri, rj = find(int(i)), find(int(j))
            if ri != rj:
                parent[ri] = rj
        roots = {find(v) for v in range(n)}
        return len(roots) <= 1


def _dedupe(points: np.ndarray, eps: float) -> np.ndarray:
    """Indices of representative points, keeping the first of each eps-cluster."""
    keep: list[int] = []
    for i, p in enumerate(points):
        dup = False
        for j in keep:
            q = points[j]
            if abs(p[0] - q[0]) <= eps and abs(p[1] - q[1]) <= eps:
                dup = True
                break
        if not dup:
            keep.append(i)
    return np.asarray(keep, dtype=np.int64)


def _prim_mst(points: np.ndarray) -> np.ndarray:
    """Prim's algorithm, O(n^2), deterministic tie-break by
    (length, min index, max index). Returns edges as sorted (i, j) rows in
    lexicographic order."""
    n = len(points)
    dx = points[:, 0:1] - points[:, 0:1].T
    dy = points[:, 1:2] - points[:, 1:2].T
    dist = np.hypot(dx, dy)

    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_d = dist[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    edges = []
    for _ in range(n - 1):
        cand = np.flatnonzero(~in_tree)
        d = best_d[cand]
        a = np.minimum(best_from[cand], cand)
        b = np.maximum(best_from[cand], cand)
        order = np.lexsort((b, a, d))
        v = int(cand[order[0]])
        edges.append((min(int(best_from[v]), v), max(int(best_from[v]), v)))
        in_tree[v] = True
        dv = dist[v]
        better = dv < best_d
        # tie: prefer the lexicographically smaller (min idx, max idx) pair
        tie = dv == best_d
        if tie.any():
            idx = np.flatnonzero(tie & ~in_tree)
            for u in idx:
                old = (min(int(best_from[u]), int(u)), max(int(best_from[u]), int(u)))
                new = (min(v, int(u)), max(v, int(u)))
                if new < old:
                    best_from[u] = v
        best_from[better] = v
        best_d = np.minimum(best_d, dv)

    e = np.asarray(sorted(edges), dtype=np.int64)
    return e


def build_mst(points, dedupe: bool = True) -> SpanningTree:
    """Euclidean minimum spanning tree over the points (no extra branching
    points), per-edge lengths included.

    Points closer than 1e-12 times the point-set diameter are merged before
    the tree is built when ``dedupe`` is set; with fewer than two distinct
    points the input is degenerate.
    """
    pts = as_points(points)
    if len(pts) < 2:
        raise DegenerateNetworkError("need at least 2 points")
    if dedupe:
        diam = float(np.hypot(*(pts.max(0) - pts.min(0))))
        keep = _dedupe(pts, DEDUP_EPS_REL * max(diam, 1e-300))
        if len(keep) < 2:
            raise DegenerateNetworkError("fewer than 2 distinct points")
        pts_used = pts[keep]
    else:
        keep = np.arange(len(pts), dtype=np.int64)
        pts_used = pts
    edges_local = _prim_mst(pts_used)
    edges = keep[edges_local]
    edges = np.sort(edges, axis=1)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    d = pts[edges[:, 1]] - pts[edges[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    return SpanningTree(edges=edges, lengths=lengths)


def apply_homothety(points, center, ratio: float) -> np.ndarray:
    """Scale points about ``center`` by ``ratio`` (> 0)."""
    if not ratio > 0:
        raise ValueError("ratio must be positive")
    pts = as_points(points)
    ctr = np.asarray(center, dtype=float)
    return ctr + ratio * (pts - ctr)


def clamp_to_domain(points, domain) -> np.ndarray:
    """Replace each point by its closest point of the closed convex domain."""
    return domain.clamp(points)


def _canonical(net: WeightedNetwork) -> WeightedNetwork:
    """Merge coincident points and drop the zero-length edges between them
    (they carry neither geometry nor mass); the polygonal set is unchanged."""
    pts = net.points
    diam = float(np.hypot(*(pts.max(0) - pts.min(0)))) if len(pts) else 0.0
    keep = _dedupe(pts, DEDUP_EPS_REL * max(diam, 1e-300))
    if len(keep) == len(pts):
        return net
    remap = np.empty(len(pts), dtype=np.int64)
    for new_id, old_id in enumerate(keep):
        remap[old_id] = new_id
    for i, p in enumerate(pts):
        if i not in keep:
            q = pts[keep]
            d = np.hypot(q[:, 0] - p[0], q[:, 1] - p[1])
            remap[i] = int(np.argmin(d))
    edges = remap[net.edges]
    live = edges[:, 0] != edges[:, 1]
    return WeightedNetwork(points=pts[keep], edges=np.sort(edges[live], axis=1),
                           theta=net.theta[live])


def resample_network(net: WeightedNetwork, target_nd: int) -> NetworkParams:
    """Insert points along arcs (proportionally to arc length) so that the
    polygonal set and the piecewise-constant theta are preserved, and return
    the equivalent raw parameter triplet with ``target_nd`` points.

    The scale of the result is sum(lengths)/mass (shaved below 1), so that
    re-projecting reproduces the same geometry and multiplicities.
    """
    n_raw = len(net.points)
    if target_nd < n_raw:
        raise ValueError(f"target_nd={target_nd} below current point count {n_raw}")
    net = _canonical(net)
    n_now = len(net.points)
    lengths = net.lengths
    total = float(lengths.sum())
    if total <= 0:
        raise DegenerateNetworkError("network has zero length")

    extra = target_nd - n_now
    shares = extra * lengths / total
    counts = np.floor(shares).astype(int)
    rem = extra - int(counts.sum())
    if rem > 0:
        frac = shares - counts
        order = np.lexsort((np.arange(len(frac)), -frac))
        counts[order[:rem]] += 1

    new_pts = [net.points]
    expected = set()
    seg_theta: dict[tuple[int, int], float] = {}
    next_id = n_now
    for e_idx, ((i, j), k) in enumerate(zip(net.edges, counts)):
        a, b = net.points[int(i)], net.points[int(j)]
        chain = [int(i)]
        for s in range(1, k + 1):
            t = s / (k + 1)
            new_pts.append((a + t * (b - a)).reshape(1, 2))
            chain.append(next_id)
            next_id += 1
        chain.append(int(j))
        for u, v in zip(chain[:-1], chain[1:]):
            key = (min(u, v), max(u, v))
            expected.add(key)
            seg_theta[key] = float(net.theta[e_idx])
    points = np.concatenate(new_pts)

    tree = build_mst(points, dedupe=False)
    got = {tuple(e) for e in tree.edges.tolist()}
    if got != expected:
        raise ValueError(
            "resampled point set has a different spanning tree; cannot preserve the network"
        )
    weights = np.array([seg_theta[tuple(e)] for e in tree.edges.tolist()])

    mass = net.mass()
    if mass <= 0:
        raise DegenerateNetworkError("network has zero mass")
    scale = min(total / mass, 1.0 - 1e-9)
    scale = max(scale, 1e-12)
    return NetworkParams(points=points, weights=weights, scale=scale)


def save_network(net: WeightedNetwork, path) -> None:
    """Write the JSON network format {points, edges, theta}."""
    payload = {
        "points": [[float(x), float(y)] for x, y in net.points],
        "edges": [[int(i), int(j)] for i, j in net.edges],
        "theta": [float(t) for t in net.theta],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_network(path) -> WeightedNetwork:
    """Read the JSON network format and validate connectivity."""
    with open(path) as fh:
        data = json.load(fh)
    try:
        net = WeightedNetwork(
            points=np.asarray(data["points"], dtype=float),
            edges=np.asarray(data["edges"], dtype=np.int64).reshape(-1, 2),
            theta=np.asarray(data["theta"], dtype=float),
        )
    except KeyError as exc:
        raise ValueError(f"network file missing key {exc}") from None
    if not net.is_connected():
        raise ValueError("network segments do not form a connected set")
    return net
