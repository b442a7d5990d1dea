"""Quasi-convexity, neighbourhoods, cylinders and the largest-piece constant."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from backend.tools.metric_core import SLACK, FiniteMetricSpace, WeightedGraph, as_metric
from utils.logger import logger

logger = logger(__name__)

EMPTY = float("-inf")


@dataclass(frozen=True)
class Subspace:
    """Non-empty set of points of an ambient space."""

    ambient: FiniteMetricSpace | WeightedGraph
    members: frozenset[int]
    name: str | None = None

    def __post_init__(self):
        members = frozenset(int(m) for m in self.members)
        if not members:
            raise ValueError(f"subspace {self.name or '<unnamed>'} is empty")
        n = as_metric(self.ambient).n
        outside = sorted(m for m in members if not 0 <= m < n)
        if outside:
            raise ValueError(f"subspace {self.name or '<unnamed>'} has points {outside} outside [0, {n})")
        object.__setattr__(self, "members", members)

    @property
    def metric(self) -> FiniteMetricSpace:
        return as_metric(self.ambient)

    @property
    def points(self) -> tuple[int, ...]:
        return tuple(sorted(self.members))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, x: int) -> bool:
        return x in self.members

    def with_members(self, members, name: str | None = None) -> "Subspace":
        return Subspace(self.ambient, frozenset(members), name)

    def _graph(self) -> WeightedGraph:
        if not isinstance(self.ambient, WeightedGraph):
            raise ValueError("geodesic quantities need a graph ambient space")
        return self.ambient


def _ball_mask(Y: Subspace, radius: float) -> np.ndarray:
    dist = Y.metric.dist
    return (dist[list(Y.points)] <= radius + SLACK).any(axis=0)


def neighborhood(Y: Subspace, alpha: float) -> Subspace:
    """All ambient points within ``alpha`` of some member of ``Y``."""
    if alpha < 0:
        raise ValueError(f"neighbourhood radius must be non-negative, got {alpha}")
    return Y.with_members(np.flatnonzero(_ball_mask(Y, alpha)).tolist())


def _geodesic_points(G: WeightedGraph, pairs) -> list[int]:
    seen: set[int] = set()
    for a, b in pairs:
        seen.update(G.geodesic(a, b).vertices)
    return sorted(seen)


def quasi_convexity_constant(Y: Subspace) -> float:
    """Smallest alpha with every fixed geodesic between members inside Y^{+alpha}."""
    G = Y._graph()
    inner = _geodesic_points(G, combinations(Y.points, 2))
    if not inner:
        return 0.0
    return float(G.dist[np.ix_(inner, list(Y.points))].min(axis=1).max())


def cylinder(Y: Subspace, delta: float) -> Subspace:
    """Union of the 10 delta neighbourhoods of the fixed geodesics joining members."""
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    G = Y._graph()
    points = Y.points
    spine = _geodesic_points(G, combinations(points, 2)) if len(points) > 1 else list(points)
    return neighborhood(Y.with_members(spine), 10.0 * delta)


class StrongConvexity(NamedTuple):
    holds: bool
    witness: tuple[int, int] | None


def is_strongly_quasiconvex(Y: Subspace, delta: float) -> StrongConvexity:
    """Search for detours through near points of Y along fixed geodesics.

    For all x, x' in Y there must be p, p' in Y with d(x, p) <= 10 delta,
    d(x', p') <= 10 delta and [x, p], [p, p'], [p', x'] contained in Y.
    Returns the first failing pair as witness.
    """
    G = Y._graph()
    points = Y.points
    index = {y: k for k, y in enumerate(points)}
    members = Y.members
    inside = np.zeros((len(points), len(points)), dtype=bool)
    for a, b in combinations(points, 2):
        inside[index[a], index[b]] = inside[index[b], index[a]] = members.issuperset(G.geodesic(a, b).vertices)
    np.fill_diagonal(inside, True)
    near = G.dist[np.ix_(points, points)] <= 10.0 * delta + SLACK
    # reachable[k, q]: some p near points[k] with [points[k], p] and [p, points[q]] inside
    first_leg = near & inside
    reachable = (first_leg.astype(np.int64) @ inside.astype(np.int64)) > 0
    for i, j in combinations(range(len(points)), 2):
        exits = first_leg[j]
        if not np.any(reachable[i] & exits):
            logger.debug(f"strong quasi-convexity fails for ({points[i]}, {points[j]})")
            return StrongConvexity(False, (points[i], points[j]))
    return StrongConvexity(True, None)


def overlap_diameter(Y: Subspace, Z: Subspace, margin: float) -> float:
    """Diameter of Y^{+margin} ∩ Z^{+margin}; ``EMPTY`` (-inf) when disjoint."""
    if Y.ambient is not Z.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    common = np.flatnonzero(_ball_mask(Y, margin) & _ball_mask(Z, margin))
    if common.size == 0:
        return EMPTY
    return float(Y.metric.dist[np.ix_(common, common)].max())


class LargestPiece(NamedTuple):
    value: float
    pair: tuple[int, int] | None


def largest_piece_detail(family: Sequence[Subspace], delta: float) -> LargestPiece:
    seen: dict[frozenset[int], int] = {}
    for k, Y in enumerate(family):
        if Y.members in seen:
            raise ValueError(f"family members {seen[Y.members]} and {k} coincide")
        seen[Y.members] = k
    best = LargestPiece(0.0, None)
    for i, j in combinations(range(len(family)), 2):
        value = max(overlap_diameter(family[i], family[j], 20.0 * delta), 0.0)
        if best.pair is None or value > best.value:
            best = LargestPiece(value, (i, j))
    return best


def largest_piece(family: Sequence[Subspace], delta: float) -> float:
    """Sup over i != j of the 20 delta overlap diameter; empty overlaps count as 0."""
    return largest_piece_detail(family, delta).value


class OverlapCheck(NamedTuple):
    lhs: float
    rhs: float
    alpha: float
    passes: bool


def overlap_inequality_check(Y: Subspace, Z: Subspace, A: float, delta: float) -> OverlapCheck:
    """diam(Y^{+A} ∩ Z^{+A}) <= diam(Y^{+a+10d} ∩ Z^{+a+10d}) + 2A + 20d for a-quasi-convex Y, Z."""
    alpha = max(quasi_convexity_constant(Y), quasi_convexity_constant(Z))
    lhs = max(overlap_diameter(Y, Z, A), 0.0)
    rhs = max(overlap_diameter(Y, Z, alpha + 10.0 * delta), 0.0) + 2.0 * A + 20.0 * delta
    return OverlapCheck(lhs, rhs, alpha, lhs <= rhs + SLACK)


class CylinderCheck(NamedTuple):
    contained: bool
    strongly_quasiconvex: bool


def cylinder_check(Y: Subspace, delta: float) -> CylinderCheck:
    cyl = cylinder(Y, delta)
    contained = cyl.members <= neighborhood(Y, 20.0 * delta).members
    return CylinderCheck(contained, is_strongly_quasiconvex(cyl, delta).holds)
