import numpy as np
import pytest

from memnet.mesh import TriangleMesh, generate_disk_mesh
from memnet.network import WeightedNetwork
from memnet.spatial import SpatialIndex
from memnet.transfer import (
    GeometryError,
    LoadSpec,
    accumulate_vlengths,
    arc_pieces,
    assemble_load,
    segment_triangle_length,
)

UNIT_TRI = [(0, 0), (1, 0), (0, 1)]


class TestSegmentTriangleLength:
    def test_horizontal_cut(self):
        assert np.isclose(
            segment_triangle_length((-0.5, 0.25), (1.5, 0.25), UNIT_TRI), 0.75, atol=1e-14
        )

    def test_inside_segment(self):
        a, b = (0.1, 0.1), (0.3, 0.2)
        expected = np.hypot(0.2, 0.1)
        assert np.isclose(segment_triangle_length(a, b, UNIT_TRI), expected, atol=1e-14)

    def test_disjoint(self):
        assert segment_triangle_length((2, 2), (3, 3), UNIT_TRI) == 0.0

    def test_along_edge(self):
        assert np.isclose(segment_triangle_length((0, 0), (1, 0), UNIT_TRI), 1.0, atol=1e-14)

    def test_symmetry_and_additivity(self, rng):
        for _ in range(300):
            a = rng.uniform(-0.5, 1.5, 2)
            b = rng.uniform(-0.5, 1.5, 2)
            la = segment_triangle_length(a, b, UNIT_TRI)
            lb = segment_triangle_length(b, a, UNIT_TRI)
            assert np.isclose(la, lb, atol=1e-12)
            t = rng.uniform(0, 1)
            mid = a + t * (b - a)
            split = segment_triangle_length(a, mid, UNIT_TRI) + segment_triangle_length(
                mid, b, UNIT_TRI
            )
            assert np.isclose(la, split, atol=1e-12)


class TestVlengths:
    def test_single_interior_segment(self, disk3):
        mesh, _, index = disk3
        # a short segment strictly inside one triangle
        t0 = mesh.triangles[0]
        tri = mesh.vertices[t0]
        c = tri.mean(axis=0)
        d = 0.15 * (tri[0] - c)
        net = WeightedNetwork(points=[c - d, c + d], edges=[[0, 1]], theta=[2.0])
        v = accumulate_vlengths(index, mesh, net)
        expected = 2.0 * np.hypot(*(2 * d))
        assert np.isclose(v[0], expected, atol=1e-14)
        assert np.isclose(v.sum(), expected, atol=1e-14)
        assert np.count_nonzero(v) == 1

    def test_mass_conservation_equals_budget(self, disk3, rng):
        from memnet.mesh import domain_from_mesh
        from memnet.network import NetworkParams
        from memnet.projection import make_admissible

        mesh, _, index = disk3
        dom = domain_from_mesh(mesh)
        for _ in range(100):
            n = int(rng.integers(2, 10))
            params = NetworkParams(
                points=rng.uniform(-1, 1, size=(n, 2)),
                weights=rng.uniform(0, 3, n - 1),
                scale=float(rng.uniform(0.1, 0.9)),
            )
            L = float(rng.uniform(0.5, 3.0))
            net = make_admissible(params, L, dom)
            v = accumulate_vlengths(index, mesh, net)
            assert abs(v.sum() - L) < 1e-8

    def test_against_monte_carlo_oracle(self, disk3, rng):
        # independent line quadrature: sample points along each arc, locate
        # them with the lowest-index tie-break, and histogram theta-weighted
        # arc length per triangle
        mesh, _, index = disk3
        net = WeightedNetwork(
            points=[(-0.6, -0.2), (0.4, 0.3), (0.1, -0.5)],
            edges=[[0, 1], [1, 2]],
            theta=[2.0, 1.25],
        )
        v = accumulate_vlengths(index, mesh, net)
        assert np.isclose(v.sum(), net.mass(), atol=1e-8)

        samples_per_arc = 200_000
        v_mc = np.zeros(mesh.n_triangles)
        for (i, j), theta in zip(net.edges, net.theta):
            a, b = net.points[i], net.points[j]
            length = float(np.hypot(*(b - a)))
            ts = (np.arange(samples_per_arc) + rng.uniform(0, 1)) / samples_per_arc
            pts = a + ts[:, None] * (b - a)
            for p in pts[:: 50]:  # thinned exact locate for the histogram
                tri = index.locate(p)
                v_mc[tri] += theta * length / (samples_per_arc // 50)
        err = np.abs(v_mc - v)
        # Monte-Carlo noise: 4000 samples/arc => ~2% of a typical entry
        assert err.max() < 0.05 * max(v.max(), 1e-9) + 1e-12
        assert np.isclose(v_mc.sum(), net.mass(), rtol=1e-12)

    def test_edge_aligned_segment_counted_once(self, disk3):
        mesh, _, index = disk3
        # the x axis is covered by mesh edges on the fan meshes
        net = WeightedNetwork(points=[(-1, 0), (1, 0)], edges=[[0, 1]], theta=[1.0])
        v = accumulate_vlengths(index, mesh, net)
        assert np.isclose(v.sum(), 2.0, atol=1e-9)

    def test_translation_consistency(self):
        mesh = generate_disk_mesh(1.0, 3)
        shift = np.array([2.0, -1.0])
        mesh2 = TriangleMesh(mesh.vertices + shift, mesh.triangles)
        net = WeightedNetwork(points=[(-0.4, 0.1), (0.5, 0.3)], edges=[[0, 1]], theta=[1.7])
        net2 = WeightedNetwork(points=net.points + shift, edges=[[0, 1]], theta=[1.7])
        v1 = accumulate_vlengths(SpatialIndex(mesh), mesh, net)
        v2 = accumulate_vlengths(SpatialIndex(mesh2), mesh2, net2)
        assert np.allclose(v1, v2, atol=1e-9)

    def test_escaping_segment_raises(self, disk3):
        mesh, _, index = disk3
        net = WeightedNetwork(points=[(0, 0), (1.5, 0)], edges=[[0, 1]], theta=[1.0])
        with pytest.raises(GeometryError):
            accumulate_vlengths(index, mesh, net)

    def test_zero_length_arcs_ignored(self, disk3):
        mesh, _, index = disk3
        net = WeightedNetwork(
            points=[(0.1, 0.1), (0.1, 0.1), (0.4, 0.1)],
            edges=[[0, 1], [1, 2]],
            theta=[5.0, 1.0],
        )
        v = accumulate_vlengths(index, mesh, net)
        assert np.isclose(v.sum(), 0.3, atol=1e-12)

    def test_pieces_cover_each_arc(self, disk3, rng):
        mesh, _, index = disk3
        for _ in range(50):
            pts = rng.uniform(-0.7, 0.7, size=(3, 2))
            net = WeightedNetwork(points=pts, edges=[[0, 1], [1, 2]], theta=[1.0, 1.0])
            pieces = arc_pieces(index, mesh, net)
            for arc_id in range(2):
                ln = float(np.hypot(*(pts[arc_id + 1] - pts[arc_id])))
                got = pieces.length[pieces.arc == arc_id].sum()
                assert np.isclose(got, ln, atol=1e-10)


class TestAssembleLoad:
    def test_constant_load_sums_to_area(self, disk3):
        mesh, fem, _ = disk3
        b = assemble_load(mesh, fem, LoadSpec.constant(1.0))
        assert np.isclose(b.sum(), mesh.total_area(), atol=1e-12)

    def test_nodal_matches_constant(self, disk3):
        mesh, fem, _ = disk3
        b1 = assemble_load(mesh, fem, LoadSpec.constant(2.5))
        b2 = assemble_load(mesh, fem, LoadSpec.nodal(np.full(mesh.n_vertices, 2.5)))
        assert np.allclose(b1, b2, atol=1e-15)

    def test_dirac_at_vertex(self, disk3):
        mesh, fem, index = disk3
        p = mesh.vertices[10]
        b = assemble_load(mesh, fem, LoadSpec.dirac([((p[0], p[1]), 1.0)]), index)
        assert np.isclose(b[10], 1.0, atol=1e-12)
        assert np.isclose(b.sum(), 1.0, atol=1e-12)
        assert np.count_nonzero(np.abs(b) > 1e-12) <= 3

    def test_dirac_pair_cancels(self, disk3):
        mesh, fem, index = disk3
        b = assemble_load(
            mesh, fem, LoadSpec.dirac([((-0.5, 0.0), 1.0), ((0.5, 0.0), -1.0)]), index
        )
        assert abs(b.sum()) < 1e-12

    def test_dirac_same_point_cancels_to_zero(self, disk3):
        mesh, fem, index = disk3
        b = assemble_load(
            mesh, fem, LoadSpec.dirac([((0.2, 0.1), 1.0), ((0.2, 0.1), -1.0)]), index
        )
        assert np.all(b == 0.0)

    def test_dirac_outside_raises(self, disk3):
        mesh, fem, index = disk3
        with pytest.raises(ValueError, match="outside"):
            assemble_load(mesh, fem, LoadSpec.dirac([((2.0, 2.0), 1.0)]), index)

    def test_dirac_pairing_approximates_point_value(self, disk3, rng):
        # b . U ~ w * u(p) for the P1 interpolant of a smooth u
        mesh, fem, index = disk3
        U = np.cos(mesh.vertices[:, 0]) * mesh.vertices[:, 1]
        for _ in range(10):
            p = rng.uniform(-0.5, 0.5, 2)
            b = assemble_load(mesh, fem, LoadSpec.dirac([((p[0], p[1]), 1.0)]), index)
            exact = np.cos(p[0]) * p[1]
            assert abs(b @ U - exact) < 5e-3
