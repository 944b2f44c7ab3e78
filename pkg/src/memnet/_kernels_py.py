"""Pure numpy implementation of the geometry kernels.

Same contract as the compiled module ``memnet._kernels``; selected at import
time by :mod:`memnet.kernels` when the extension is unavailable (or forced
via ``MEMNET_PURE_PYTHON=1``).
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def segment_pieces(ax, ay, bx, by, cand, verts, tris, neighbors, tol):
    """Clip the segment (ax,ay)-(bx,by) against each candidate triangle.

    Parameters mirror the compiled kernel: ``cand`` holds triangle ids,
    ``verts``/``tris``/``neighbors`` the mesh arrays, ``tol`` the absolute
    distance tolerance for on-edge classification.

    Returns ``(tri_ids, t0, t1)``: per intersected triangle, the parameter
    interval of the clipped sub-segment. A sub-segment collinear with a
    shared mesh edge is reported for the lowest-index incident triangle only.
    """
    cand = np.asarray(cand, dtype=np.int64)
    if cand.size == 0:
        return _EMPTY_I, _EMPTY_F, _EMPTY_F

    tri = tris[cand]  # (m, 3)
    P = verts[tri]  # (m, 3, 2)
    Q = P[:, [1, 2, 0], :]
    ex = Q[..., 0] - P[..., 0]
    ey = Q[..., 1] - P[..., 1]
    # signed side values of both endpoints w.r.t. each (ccw) edge
    da = ex * (ay - P[..., 1]) - ey * (ax - P[..., 0])
    db = ex * (by - P[..., 1]) - ey * (bx - P[..., 0])
    etol = tol * np.hypot(ex, ey)
    on_edge = (np.abs(da) <= etol) & (np.abs(db) <= etol)

    neg_a = da < 0.0
    neg_b = db < 0.0
    reject = ((~on_edge) & neg_a & neg_b).any(axis=1)

    crossing = (~on_edge) & (neg_a ^ neg_b)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstar = np.where(crossing, da / (da - db), 0.0)
    t0 = np.where(crossing & neg_a, tstar, 0.0).max(axis=1)
    t1 = np.where(crossing & neg_b, tstar, 1.0).min(axis=1)

    valid = (~reject) & (t1 - t0 > 0.0)

    has_edge = on_edge.any(axis=1)
    check = valid & has_edge
    if np.any(check):
        k = np.argmax(on_edge[check], axis=1)
        own = cand[check]
        nb = neighbors[own, k]
        keep = (nb < 0) | (own < nb)
        drop_idx = np.flatnonzero(check)[~keep]
        valid[drop_idx] = False

    return cand[valid], t0[valid], t1[valid]


def network_pieces(ax, ay, bx, by, verts, tris, tri_bboxes, neighbors, tol):
    """Clip every arc of a network against the mesh.

    ``ax..by`` are per-arc endpoint coordinate arrays; candidate triangles
    come from a bounding-box prefilter against ``tri_bboxes``. Returns flat
    arrays (arc_idx, tri_idx, t0, t1) over all pieces.
    """
    arcs_out, tris_out, t0_out, t1_out = [], [], [], []
    for i in range(len(ax)):
        x0, x1 = (ax[i], bx[i]) if ax[i] <= bx[i] else (bx[i], ax[i])
        y0, y1 = (ay[i], by[i]) if ay[i] <= by[i] else (by[i], ay[i])
        mask = (
            (tri_bboxes[:, 0] <= x1 + tol)
            & (tri_bboxes[:, 2] >= x0 - tol)
            & (tri_bboxes[:, 1] <= y1 + tol)
            & (tri_bboxes[:, 3] >= y0 - tol)
        )
        cand = np.flatnonzero(mask)
        ids, t0, t1 = segment_pieces(
            ax[i], ay[i], bx[i], by[i], cand, verts, tris, neighbors, tol
        )
        arcs_out.append(np.full(len(ids), i, dtype=np.int64))
        tris_out.append(ids)
        t0_out.append(t0)
        t1_out.append(t1)
    if not arcs_out:
        return _EMPTY_I, _EMPTY_I.copy(), _EMPTY_F, _EMPTY_F.copy()
    return (
        np.concatenate(arcs_out),
        np.concatenate(tris_out),
        np.concatenate(t0_out),
        np.concatenate(t1_out),
    )
