import math

import numpy as np
import pytest

from backend.tools.group_actions import PermutationAction, cone_quotient
from backend.tools.hyperbolic_cone import (
    APEX,
    ConePoint,
    ConeSpace,
    angle,
    cone_over_subspace,
    mu,
    mu_cubic_lower_bound,
    mu_linear_lower_bound,
    projection_audit,
    r0_constraint,
)
from backend.tools.metric_core import SLACK, four_point_delta
from backend.tools.subspace_geometry import Subspace
from tests.conftest import cycle, path, random_tree


@pytest.fixture(params=[0.5, 1.0, 2.0])
def r0(request):
    return request.param


def grid(r0, points=1000):
    return np.linspace(0.0, 2 * math.pi * math.sinh(r0), points)


class TestMu:
    def test_zero(self, r0):
        assert mu(0.0, r0) == 0.0

    def test_scalar_and_array(self):
        assert isinstance(mu(1.0, 1.0), float)
        assert mu(np.array([0.0, 1.0]), 1.0).shape == (2,)

    def test_non_decreasing(self, r0):
        assert np.all(np.diff(mu(grid(r0), r0)) >= -SLACK)

    def test_subadditive(self, r0):
        values = mu(grid(r0), r0)
        half = len(values) // 2
        for i in range(0, half, 7):
            for j in range(0, half, 11):
                assert values[i + j] <= values[i] + values[j] + SLACK

    def test_midpoint_concave(self, r0):
        values = mu(grid(r0), r0)
        assert np.all(values[1:-1] >= 0.5 * (values[:-2] + values[2:]) - 1e-12)

    def test_between_chord_and_identity(self, r0):
        t = grid(r0)
        values = mu(t, r0)
        assert np.all(values <= t + SLACK)
        assert np.all(mu_linear_lower_bound(t, r0) <= values + SLACK)

    def test_plateau(self, r0):
        t = grid(r0)
        plateau = t >= math.pi * math.sinh(r0)
        assert np.allclose(mu(t[plateau], r0), 2 * r0, atol=1e-9)

    def test_cubic_lower_bound_near_zero(self, r0):
        t = np.linspace(0.0, 1.0, 1000)
        assert np.all(mu(t, r0) >= mu_cubic_lower_bound(t) - SLACK)

    def test_rejects_negative_t(self):
        with pytest.raises(ValueError):
            mu(-1.0, 1.0)

    def test_rejects_non_positive_r0(self):
        with pytest.raises(ValueError):
            mu(1.0, 0.0)


class TestConeSpace:
    def test_apex_and_rim(self):
        C = ConeSpace(path(4).metric, 1.0)
        assert C.points[0] == APEX
        assert C.distance(APEX, ConePoint(2, 0.5)) == 0.5
        assert C.distance(C.iota(0), C.iota(3)) == pytest.approx(mu(3.0, 1.0))
        assert C.radii[-1] == 1.0 and len(C.radii) == 8

    def test_iota_and_proj(self):
        C = ConeSpace(path(4).metric, 1.0)
        assert C.proj(C.iota(2)) == 2
        with pytest.raises(ValueError, match="apex"):
            C.proj(APEX)

    def test_rejects_points_outside_the_cone(self):
        C = ConeSpace(path(4).metric, 1.0)
        with pytest.raises(ValueError):
            C.distance(ConePoint(0, 2.0), APEX)
        with pytest.raises(ValueError):
            C.index(ConePoint(0, 0.3))

    def test_rejects_radii_outside_range(self):
        with pytest.raises(ValueError):
            ConeSpace(path(4).metric, 1.0, radii=[0.0, 0.5])
        with pytest.raises(ValueError):
            ConeSpace(path(4).metric, 1.0, radii=[1.5])

    def test_same_base_is_radial(self):
        C = ConeSpace(cycle(5).metric, 2.0)
        assert C.distance(ConePoint(1, 0.5), ConePoint(1, 2.0)) == pytest.approx(1.5)

    def test_materialised_matrix_is_a_metric(self):
        C = ConeSpace(cycle(12).metric, 1.0, radii=[0.25, 0.5, 0.75], validate=True)
        matrix = C.distance_matrix
        k = C.index(ConePoint(3, 0.5))
        assert matrix[0, k] == 0.5
        assert matrix[k, C.index(ConePoint(7, 1.0))] == pytest.approx(C.distance(ConePoint(3, 0.5), ConePoint(7, 1.0)))

    def test_cone_over_circle_is_a_disc(self):
        r0, n = 1.0, 256
        step = 2 * math.pi * math.sinh(r0) / n
        C = ConeSpace(cycle(n, step).metric, r0)
        radius = np.array([p.radius for p in C.points])
        base = np.array([0 if p.is_apex else p.base for p in C.points])
        theta = C.base.dist[np.ix_(base, base)] / math.sinh(r0)
        expected = np.cosh(radius)[:, None] * np.cosh(radius)[None, :] - np.sinh(radius)[:, None] * np.sinh(radius)[None, :] * np.cos(theta)
        relative = np.abs(np.cosh(C.distance_matrix) - expected) / expected
        assert relative.max() <= 1e-9

    def test_angle(self, path4):
        assert angle(path4, 0, 1, 1.0) == pytest.approx(1 / math.sinh(1.0))
        assert angle(path4, 0, 3, 0.5) == pytest.approx(math.pi)

    def test_cone_over_subspace_restricts_the_metric(self):
        P = path(5)
        C = cone_over_subspace(Subspace(P, frozenset({1, 3})), 1.0)
        assert C.base.n == 2
        assert C.base.distance(0, 1) == 2.0


class TestTreeCone:
    def test_delta_below_ln3(self, r0):
        rng = np.random.default_rng(int(r0 * 10))
        for _ in range(5):
            T = random_tree(rng, int(rng.integers(4, 11)), weights=(1, 2, 3))
            C = ConeSpace(T.metric, r0)
            assert four_point_delta(C.as_metric_space(), mode="exact") <= math.log(3.0) + SLACK

    def test_cone_over_subtree(self):
        T = random_tree(np.random.default_rng(6), 14)
        C = cone_over_subspace(Subspace(T, frozenset(T.geodesic(0, 13).vertices)), 1.0)
        assert four_point_delta(C.as_metric_space()) <= math.log(3.0) + SLACK


class TestProjection:
    def test_bounds_hold_on_cycle_cone(self):
        audit = projection_audit(ConeSpace(cycle(12).metric, 1.0), samples=2000, seed=4)
        assert audit.lower_ok and audit.upper_ok and audit.lipschitz_ok
        assert audit.pairs == 2000

    def test_bounds_hold_for_large_radius(self):
        audit = projection_audit(ConeSpace(cycle(30, 0.5).metric, 2.0), samples=2000, seed=1)
        assert audit.lower_ok and audit.upper_ok and audit.lipschitz_ok


class TestConeQuotient:
    def test_antipodal_quotient_of_hexagon_cone(self, hexagon):
        C = ConeSpace(hexagon, 1.0)
        action = PermutationAction(cycle(6), {"s": [3, 4, 5, 0, 1, 2]})
        Q = cone_quotient(C, action)
        assert Q.base.n == 3
        assert np.allclose(Q.base.dist + np.eye(3), 1.0)
        rim = min(C.distance(C.iota(0), C.iota(1)), C.distance(C.iota(0), C.iota(4)))
        assert Q.distance(Q.iota(0), Q.iota(1)) == pytest.approx(rim)

    def test_action_on_another_space(self, hexagon):
        with pytest.raises(ValueError):
            cone_quotient(ConeSpace(hexagon, 1.0), PermutationAction(cycle(4), {"s": [1, 2, 3, 0]}))


def test_r0_constraint():
    assert not r0_constraint(1.0, 0.1)
    assert r0_constraint(2e6, 0.1)
