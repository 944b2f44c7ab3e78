import itertools

import numpy as np
import pytest

from memnet.geometry import DiskDomain
from memnet.network import DegenerateNetworkError, NetworkParams
from memnet.projection import InfeasibleProjectionError, make_admissible, project_weights


def active_set_oracle(lengths, weights, L):
    """Enumerate all active sets: entries in A are clamped at 1, the rest
    take w + lam*l with lam from the mass equality; keep KKT-feasible
    candidates and return the closest to w."""
    lengths = np.asarray(lengths, dtype=float)
    weights = np.asarray(weights, dtype=float)
    n = len(lengths)
    best, best_d = None, np.inf
    for mask in itertools.product([0, 1], repeat=n):
        active = np.array(mask, dtype=bool)  # at the bound theta=1
        free = ~active
        denom = float(np.sum(lengths[free] ** 2))
        if denom == 0:
            theta = np.ones(n)
            lam = None
            if abs(float(lengths @ theta) - L) > 1e-9 * max(1.0, L):
                continue
        else:
            lam = (L - float(lengths[active].sum()) - float(lengths[free] @ weights[free])) / denom
            theta = np.ones(n)
            theta[free] = weights[free] + lam * lengths[free]
            if np.any(theta[free] < 1.0 - 1e-9):
                continue
            # KKT sign condition for the clamped entries
            if np.any(weights[active] + lam * lengths[active] > 1.0 + 1e-9):
                continue
        d = float(np.sum((theta - weights) ** 2))
        if d < best_d - 1e-15:
            best, best_d = theta, d
    return best


class TestProjectWeights:
    def test_hand_kkt_example(self):
        assert np.allclose(project_weights([1, 1], [0.5, 3.5], 4.0), [1.0, 3.0], atol=1e-12)

    def test_symmetric_kkt(self):
        assert np.allclose(project_weights([1, 1], [1.0, 1.0], 3.0), [1.5, 1.5], atol=1e-12)

    def test_idempotent_on_feasible_point(self):
        lengths = np.array([0.5, 0.25, 0.25])
        theta = np.array([2.0, 1.0, 3.0])
        L = float(lengths @ theta)
        assert np.allclose(project_weights(lengths, theta, L), theta, atol=1e-12)

    def test_kkt_structure(self, rng):
        for _ in range(200):
            n = rng.integers(1, 10)
            lengths = rng.uniform(0.05, 1.0, n)
            L = float(lengths.sum()) * rng.uniform(1.0, 3.0)
            w = rng.normal(0, 3, n)
            theta = project_weights(lengths, w, L)
            assert np.all(theta >= 1.0 - 1e-9)
            assert abs(float(lengths @ theta) - L) < 1e-8 * max(1.0, L)
            # theta must have the single-multiplier form max(1, w + lam*l)
            free = theta > 1.0 + 1e-12
            if free.any():
                lam = (theta[free] - w[free]) / lengths[free]
                assert np.ptp(lam) < 1e-8 * max(1.0, np.abs(lam).max())

    def test_matches_active_set_oracle(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 7))
            lengths = rng.uniform(0.05, 1.0, n)
            L = float(lengths.sum()) * rng.uniform(1.0, 2.5)
            w = rng.normal(0, 2, n)
            expected = active_set_oracle(lengths, w, L)
            got = project_weights(lengths, w, L)
            assert np.allclose(got, expected, atol=1e-8)

    def test_nonexpansive_and_idempotent(self, rng):
        lengths = rng.uniform(0.1, 1.0, 8)
        L = float(lengths.sum()) * 1.7
        for _ in range(100):
            w1 = rng.normal(0, 3, 8)
            w2 = rng.normal(0, 3, 8)
            p1 = project_weights(lengths, w1, L)
            p2 = project_weights(lengths, w2, L)
            assert np.linalg.norm(p1 - p2) <= np.linalg.norm(w1 - w2) + 1e-10
            assert np.allclose(project_weights(lengths, p1, L), p1, atol=1e-10)

    def test_zero_length_edges(self):
        theta = project_weights([1.0, 0.0], [0.5, 5.0], 2.0)
        assert np.allclose(theta, [2.0, 5.0])

    def test_infeasible_raises(self):
        with pytest.raises(InfeasibleProjectionError):
            project_weights([1.0, 1.0], [1.0, 1.0], 1.5)


class TestMakeAdmissible:
    def test_worked_example(self):
        params = NetworkParams(points=[(0, 0), (0.5, 0)], weights=[1.0], scale=0.5)
        net = make_admissible(params, 2.0, DiskDomain((0, 0), 1.0))
        assert np.allclose(net.points, [(-0.25, 0), (0.75, 0)], atol=1e-14)
        assert np.allclose(net.lengths, [1.0])
        assert np.allclose(net.theta, [2.0])
        assert np.isclose(net.mass(), 2.0, atol=1e-12)

    def test_fixed_point(self):
        # tree already at length scale*L with feasible weights: geometry kept
        params = NetworkParams(points=[(-0.5, 0.0), (0.5, 0.0)], weights=[2.0], scale=0.5)
        net = make_admissible(params, 2.0, DiskDomain((0, 0), 1.0))
        assert np.allclose(sorted(net.points[:, 0]), [-0.5, 0.5], atol=1e-14)
        assert np.allclose(net.theta, [2.0], atol=1e-12)

    def test_far_point_clamped_into_domain(self):
        dom = DiskDomain((0, 0), 1.0)
        params = NetworkParams(
            points=[(0, 0), (0.1, 0), (2.5, 0)], weights=[1.0, 1.0], scale=0.9
        )
        net = make_admissible(params, 2.0, dom)
        assert np.all(np.hypot(*net.points.T) <= 1.0 + 1e-12)
        assert np.isclose(net.mass(), 2.0, atol=1e-8)

    def test_fully_outside_tree_is_degenerate(self):
        # both scaled points clamp onto the same boundary point
        dom = DiskDomain((0, 0), 1.0)
        params = NetworkParams(points=[(0, 0), (40.0, 0)], weights=[1.0], scale=0.5)
        with pytest.raises(DegenerateNetworkError):
            make_admissible(params, 1.0, dom)

    def test_degenerate_candidate(self):
        params = NetworkParams(points=[(0.3, 0.3), (0.3, 0.3), (0.3, 0.3)], weights=[1, 1], scale=0.5)
        with pytest.raises(DegenerateNetworkError):
            make_admissible(params, 1.0, DiskDomain((0, 0), 1.0))

    def test_mass_invariant_random(self, rng):
        dom = DiskDomain((0, 0), 1.0)
        for _ in range(500):
            n = int(rng.integers(2, 12))
            params = NetworkParams(
                points=rng.uniform(-1.5, 1.5, size=(n, 2)),
                weights=rng.uniform(0.0, 4.0, n - 1),
                scale=float(rng.uniform(0.05, 0.95)),
            )
            L = float(rng.uniform(0.5, 4.0))
            net = make_admissible(params, L, dom)
            assert np.isclose(net.mass(), L, atol=1e-8)
            assert np.all(net.theta >= 1.0 - 1e-9)
            assert net.is_connected()
