"""Mapping raw parameter triplets to admissible weighted networks.

``project_weights`` is the exact Euclidean projection onto
{theta : theta_i >= 1, sum(l_i * theta_i) = L}: the KKT system reduces to a
single monotone piecewise-linear equation in the multiplier, solved exactly
by a sorted breakpoint walk.

``make_admissible`` runs the full three-step normalization: measure the
tree, rescale it about the center of mass to length scale*L, clamp into the
domain, then project the weights against the post-clamp edge lengths.
"""

from __future__ import annotations

import numpy as np

from .network import (
    DegenerateNetworkError,
    NetworkParams,
    WeightedNetwork,
    apply_homothety,
    build_mst,
    clamp_to_domain,
)

__all__ = ["project_weights", "make_admissible", "InfeasibleProjectionError"]


class InfeasibleProjectionError(ValueError):
    """sum(lengths) exceeds the mass budget: no feasible theta exists."""


def project_weights(lengths, weights, L: float) -> np.ndarray:
    """Euclidean projection of ``weights`` onto
    {theta : theta_i >= 1, sum(lengths_i * theta_i) = L}.

    The optimum has the form theta = max(1, weights + lam * lengths) for a
    scalar multiplier lam; g(lam) = sum(l * theta(lam)) is nondecreasing and
    piecewise linear with breakpoints (1 - w_i) / l_i, so lam is found
    exactly by walking the sorted breakpoints. Zero-length entries carry no
    mass and project to max(1, w).

    Parameters
    ----------
    lengths : array, nonnegative
        Arc lengths; their sum must not exceed L.
    weights : array, same shape
        Raw multiplicities to project.
    L : float
        Mass budget of the equality constraint.

    Returns
    -------
    array
        The projected multiplicities, exact up to roundoff.
    """
    l = np.asarray(lengths, dtype=float)
    w = np.asarray(weights, dtype=float)
    if l.shape != w.shape or l.ndim != 1:
        raise ValueError("lengths and weights must be 1-d arrays of equal size")
    if np.any(l < 0):
        raise ValueError("lengths must be nonnegative")
    total = float(l.sum())
    if total > L * (1.0 + 1e-12) + 1e-300:
        raise InfeasibleProjectionError(
            f"sum(lengths)={total} exceeds mass budget L={L}"
        )

    pos = l > 0
    theta = np.maximum(1.0, w)
    if not pos.any():
        return theta
    if total >= L * (1.0 - 1e-14):
        # Budget exhausted by unit multiplicities: theta = 1 is the only
        # feasible point (up to roundoff in the clamped lengths).
        theta[pos] = 1.0
        return theta
    lp = l[pos]
    wp = w[pos]

    # g(lam) = sum_i l_i * max(1, w_i + lam*l_i) is nondecreasing, piecewise
    # linear with breakpoints (1 - w_i)/l_i, equals `total` below the first
    # breakpoint and grows without bound; find its first crossing of L.
    bp = (1.0 - wp) / lp
    order = np.argsort(bp, kind="stable")
    bps = bp[order]
    ls = lp[order]
    ws = wp[order]
    lw_cum = np.cumsum(ls * ws)
    l2_cum = np.cumsum(ls * ls)
    l_cum = np.cumsum(ls)

    n = len(bps)
    lam = None
    for k in range(n):
        slope = l2_cum[k]
        const = lw_cum[k] + (total - l_cum[k])  # bound entries contribute l_i
        if k + 1 < n:
            g_hi = const + slope * bps[k + 1]
            if g_hi < L:
                continue
        lam = (L - const) / slope
        break

    theta[pos] = np.maximum(1.0, wp + lam * lp)
    return theta


def make_admissible(params: NetworkParams, L: float, domain) -> WeightedNetwork:
    """Run the full projection: spanning tree, homothety about the center of
    mass with ratio scale*L/length, clamp into the domain, project weights
    on the post-clamp lengths.

    Raises :class:`DegenerateNetworkError` when the candidate's points all
    coincide (the tree has zero length); the cost evaluator maps that to the
    worst-possible energy instead of aborting a population.
    """
    if not L > 0:
        raise ValueError("mass budget L must be positive")
    # Keep the tree over all n_d points (coincident ones form zero-length
    # edges) so raw weights stay in 1:1 correspondence with tree edges.
    tree = build_mst(params.points, dedupe=False)
    length = tree.total_length
    if length <= 1e-15 * max(1.0, L):
        raise DegenerateNetworkError("all candidate points coincide")

    center = params.points.mean(axis=0)
    ratio = params.scale * L / length
    pts = apply_homothety(params.points, center, ratio)
    pts = clamp_to_domain(pts, domain)

    d = pts[tree.edges[:, 1]] - pts[tree.edges[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    if float(lengths.sum()) <= 1e-12 * max(1.0, L):
        # the whole scaled tree sat outside the domain and collapsed onto a
        # single boundary point; no positive-length network can carry mass L
        raise DegenerateNetworkError("network collapsed to a point after clamping")
    theta = project_weights(lengths, params.weights, L)
    return WeightedNetwork(points=pts, edges=tree.edges.copy(), theta=theta)
