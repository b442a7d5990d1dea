import numpy as np
import pytest

from backend.errors import ComputationLimitError
from backend.tools.metric_core import FiniteMetricSpace
from backend.tools.rips_homology import (
    betti_numbers,
    boundary_matrix,
    boundary_squares_vanish,
    build_rips,
    connectedness_certificate,
    default_scale,
    euler_characteristic,
    gf2_rank,
    mst_bottleneck,
    skeleton_betti_numbers,
)
from tests.conftest import cycle, path, random_connected_graph, random_tree


class TestBuild:
    def test_triangle(self, triangle):
        K = build_rips(triangle, 1.5, maxdim=2)
        assert K.counts() == [3, 3, 1]
        assert betti_numbers(K, 1) == [1, 0]

    def test_strict_diameter(self, triangle):
        K = build_rips(triangle, 1.0, maxdim=2)
        assert K.counts() == [3, 0, 0]
        assert betti_numbers(K, 1) == [3, 0]

    def test_simplices_are_sorted(self, hexagon):
        K = build_rips(hexagon, 2.5, maxdim=2)
        assert K.simplices[1][0] == (0, 1)
        assert all(list(s) == sorted(s) for level in K.simplices for s in level)

    def test_counts_grow_with_scale(self, rng):
        G = random_connected_graph(rng, 10, extra=0.2, weights=(1, 2, 3))
        previous = None
        for d in [0.5, 1.5, 2.5, 3.5, 5.0]:
            counts = build_rips(G, d, maxdim=3).counts()
            if previous is not None:
                assert all(c >= p for c, p in zip(counts, previous))
            previous = counts

    @pytest.mark.parametrize("d, maxdim", [(0.0, 2), (-1.0, 2), (1.0, -1)])
    def test_invalid_arguments(self, triangle, d, maxdim):
        with pytest.raises(ValueError):
            build_rips(triangle, d, maxdim)

    def test_simplex_limit(self):
        with pytest.raises(ComputationLimitError):
            build_rips(cycle(10), 100.0, maxdim=3, limit=50)


class TestHomology:
    def test_hexagon_circle(self, hexagon):
        K = build_rips(hexagon, 1.5, maxdim=2)
        assert betti_numbers(K, 1) == [1, 1]

    def test_hexagon_octahedron(self, hexagon):
        K = build_rips(hexagon, 2.5, maxdim=3)
        assert K.counts() == [6, 12, 8, 0]
        assert betti_numbers(K, 2) == [1, 0, 1]
        assert euler_characteristic(K) == 2

    def test_boundary_matrix(self, triangle):
        K = build_rips(triangle, 1.5, maxdim=2)
        assert boundary_matrix(K, 2).ravel().tolist() == [1, 1, 1]
        with pytest.raises(ValueError):
            boundary_matrix(K, 0)

    def test_betti_range(self, triangle):
        with pytest.raises(ValueError):
            betti_numbers(build_rips(triangle, 1.5, maxdim=2), 2)

    def test_boundary_squares_and_euler(self, rng):
        for _ in range(10):
            G = random_connected_graph(rng, 9, extra=0.3, weights=(1, 2))
            K = build_rips(G, float(rng.choice([1.5, 2.5, 3.5])), maxdim=3)
            assert boundary_squares_vanish(K)
            skeleton = skeleton_betti_numbers(K)
            assert euler_characteristic(K) == sum((-1) ** k * b for k, b in enumerate(skeleton))

    @pytest.mark.parametrize(
        "matrix, rank",
        [
            (np.eye(3), 3),
            ([[1, 1], [1, 1]], 1),
            ([[1, 1, 0], [0, 1, 1], [1, 0, 1]], 2),
            (np.zeros((2, 4)), 0),
            ([[1, 0], [0, 1], [1, 1], [1, 0]], 2),
        ],
    )
    def test_gf2_rank(self, matrix, rank):
        assert gf2_rank(np.asarray(matrix)) == rank


class TestCertificate:
    def test_hexagon_fails_at_small_scale(self, hexagon):
        certificate = connectedness_certificate(hexagon, 1.0, 1, d=1.5)
        assert certificate.reduced_betti == [0, 1]
        assert not certificate.passes
        assert certificate.boundary_ok and certificate.euler_consistent

    def test_trees_pass(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            T = random_tree(rng, int(rng.integers(2, 16)), weights=(1, 2, 3))
            n = int(rng.integers(0, 3))
            certificate = connectedness_certificate(T, 0.0, n)
            assert certificate.scale > max(w for _, _, w in T.edges)
            assert certificate.passes, certificate
            assert len(certificate.reduced_betti) == n + 1

    def test_trees_pass_at_every_connecting_scale(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            T = random_tree(rng, int(rng.integers(3, 15)), weights=(1, 2, 3))
            bottleneck = mst_bottleneck(T)
            assert bottleneck == max(w for _, _, w in T.edges)
            for extra in [0.01, 0.5, 1.0, 2.5, float(T.dist.max()) + 1.0]:
                certificate = connectedness_certificate(T, 0.0, 2, d=bottleneck + extra)
                assert certificate.scale == bottleneck + extra
                assert certificate.passes, (extra, certificate)

    def test_default_scale(self, path4):
        assert mst_bottleneck(path4) == 1.0
        assert default_scale(path4, 0.5) == pytest.approx(4.0)

    def test_single_point(self):
        point = FiniteMetricSpace(np.zeros((1, 1)))
        assert default_scale(point, 0.0) == 1.0
        assert connectedness_certificate(point, 0.0, 2).passes

    def test_invalid_arguments(self, path4):
        with pytest.raises(ValueError):
            connectedness_certificate(path4, -1.0, 1)
        with pytest.raises(ValueError):
            connectedness_certificate(path4, 0.0, -1)

    def test_path_notes_mention_convention(self):
        certificate = connectedness_certificate(path(5), 0.0, 1)
        assert certificate.passes
        assert any("diameter < d" in note for note in certificate.notes)
