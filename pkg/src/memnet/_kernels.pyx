# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled geometry kernels (segment-triangle clipping).

Same contract as the numpy fallback in ``memnet._kernels_py``; see there for
the documented semantics.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

IMPLEMENTATION = "cython"


def segment_pieces(double ax, double ay, double bx, double by,
                   cand, verts, tris, neighbors, double tol):
    cdef cnp.int64_t[::1] cand_v = np.ascontiguousarray(cand, dtype=np.int64)
    cdef double[:, ::1] verts_v = verts
    cdef cnp.int64_t[:, ::1] tris_v = tris
    cdef cnp.int64_t[:, ::1] nbr_v = neighbors

    cdef Py_ssize_t m = cand_v.shape[0]
    out_tri = np.empty(m, dtype=np.int64)
    out_t0 = np.empty(m, dtype=np.float64)
    out_t1 = np.empty(m, dtype=np.float64)
    cdef cnp.int64_t[::1] otri = out_tri
    cdef double[::1] ot0 = out_t0
    cdef double[::1] ot1 = out_t1

    cdef Py_ssize_t i, n_out = 0
    cdef cnp.int64_t t, nb
    cdef int k, k_next, edge_k
    cdef double px[3]
    cdef double py_[3]
    cdef double exk, eyk, elen, da, db, etol, tstar, t0, t1
    cdef bint reject, on_edge

    for i in range(m):
        t = cand_v[i]
        for k in range(3):
            px[k] = verts_v[tris_v[t, k], 0]
            py_[k] = verts_v[tris_v[t, k], 1]
        t0 = 0.0
        t1 = 1.0
        reject = False
        edge_k = -1
        for k in range(3):
            k_next = k + 1 if k < 2 else 0
            exk = px[k_next] - px[k]
            eyk = py_[k_next] - py_[k]
            da = exk * (ay - py_[k]) - eyk * (ax - px[k])
            db = exk * (by - py_[k]) - eyk * (bx - px[k])
            elen = (exk * exk + eyk * eyk) ** 0.5
            etol = tol * elen
            on_edge = (da <= etol and da >= -etol and db <= etol and db >= -etol)
            if on_edge:
                if edge_k < 0:
                    edge_k = k
                continue
            if da < 0.0:
                if db < 0.0:
                    reject = True
                    break
                tstar = da / (da - db)
                if tstar > t0:
                    t0 = tstar
            elif db < 0.0:
                tstar = da / (da - db)
                if tstar < t1:
                    t1 = tstar
        if reject or t1 - t0 <= 0.0:
            continue
        if edge_k >= 0:
            nb = nbr_v[t, edge_k]
            if nb >= 0 and nb < t:
                continue
        otri[n_out] = t
        ot0[n_out] = t0
        ot1[n_out] = t1
        n_out += 1

    return out_tri[:n_out], out_t0[:n_out], out_t1[:n_out]


def network_pieces(ax, ay, bx, by, verts, tris, tri_bboxes, neighbors, double tol):
    """Clip every arc of a network against the mesh; candidates come from an
    in-loop bounding-box prefilter. Returns (arc_idx, tri_idx, t0, t1)."""
    cdef double[::1] ax_v = np.ascontiguousarray(ax, dtype=np.float64)
    cdef double[::1] ay_v = np.ascontiguousarray(ay, dtype=np.float64)
    cdef double[::1] bx_v = np.ascontiguousarray(bx, dtype=np.float64)
    cdef double[::1] by_v = np.ascontiguousarray(by, dtype=np.float64)
    cdef double[:, ::1] verts_v = verts
    cdef cnp.int64_t[:, ::1] tris_v = tris
    cdef double[:, ::1] boxes_v = tri_bboxes
    cdef cnp.int64_t[:, ::1] nbr_v = neighbors

    cdef Py_ssize_t n_arcs = ax_v.shape[0]
    cdef Py_ssize_t n_t = tris_v.shape[0]
    cdef Py_ssize_t capacity = 256
    out_arc = np.empty(capacity, dtype=np.int64)
    out_tri = np.empty(capacity, dtype=np.int64)
    out_t0 = np.empty(capacity, dtype=np.float64)
    out_t1 = np.empty(capacity, dtype=np.float64)
    cdef cnp.int64_t[::1] oarc = out_arc
    cdef cnp.int64_t[::1] otri = out_tri
    cdef double[::1] ot0 = out_t0
    cdef double[::1] ot1 = out_t1

    cdef Py_ssize_t i, t, n_out = 0
    cdef cnp.int64_t nb
    cdef int k, k_next, edge_k
    cdef double pax, pay, pbx, pby, x0, x1, y0, y1
    cdef double px[3]
    cdef double py_[3]
    cdef double exk, eyk, elen, da, db, etol, tstar, t0, t1
    cdef bint reject, on_edge

    for i in range(n_arcs):
        pax = ax_v[i]; pay = ay_v[i]; pbx = bx_v[i]; pby = by_v[i]
        x0 = pax if pax <= pbx else pbx
        x1 = pbx if pax <= pbx else pax
        y0 = pay if pay <= pby else pby
        y1 = pby if pay <= pby else pay
        for t in range(n_t):
            if boxes_v[t, 0] > x1 + tol or boxes_v[t, 2] < x0 - tol:
                continue
            if boxes_v[t, 1] > y1 + tol or boxes_v[t, 3] < y0 - tol:
                continue
            for k in range(3):
                px[k] = verts_v[tris_v[t, k], 0]
                py_[k] = verts_v[tris_v[t, k], 1]
            t0 = 0.0
            t1 = 1.0
            reject = False
            edge_k = -1
            for k in range(3):
                k_next = k + 1 if k < 2 else 0
                exk = px[k_next] - px[k]
                eyk = py_[k_next] - py_[k]
                da = exk * (pay - py_[k]) - eyk * (pax - px[k])
                db = exk * (pby - py_[k]) - eyk * (pbx - px[k])
                elen = (exk * exk + eyk * eyk) ** 0.5
                etol = tol * elen
                on_edge = (da <= etol and da >= -etol and db <= etol and db >= -etol)
                if on_edge:
                    if edge_k < 0:
                        edge_k = k
                    continue
                if da < 0.0:
                    if db < 0.0:
                        reject = True
                        break
                    tstar = da / (da - db)
                    if tstar > t0:
                        t0 = tstar
                elif db < 0.0:
                    tstar = da / (da - db)
                    if tstar < t1:
                        t1 = tstar
            if reject or t1 - t0 <= 0.0:
                continue
            if edge_k >= 0:
                nb = nbr_v[t, edge_k]
                if nb >= 0 and nb < t:
                    continue
            if n_out == capacity:
                capacity *= 2
                out_arc = np.concatenate([out_arc, np.empty(capacity - n_out, dtype=np.int64)])
                out_tri = np.concatenate([out_tri, np.empty(capacity - n_out, dtype=np.int64)])
                out_t0 = np.concatenate([out_t0, np.empty(capacity - n_out, dtype=np.float64)])
                out_t1 = np.concatenate([out_t1, np.empty(capacity - n_out, dtype=np.float64)])
                oarc = out_arc
                otri = out_tri
                ot0 = out_t0
                ot1 = out_t1
            oarc[n_out] = i
            otri[n_out] = t
            ot0[n_out] = t0
            ot1[n_out] = t1
            n_out += 1

    return out_arc[:n_out], out_tri[:n_out], out_t0[:n_out], out_t1[:n_out]
