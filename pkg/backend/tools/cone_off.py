"""Cone-off of a graph along a family of subspaces, with the chain metric.

Materialised points are the base vertices, then for every cone its apex and
its points (y, r) for each sample radius r < r0. The rim point (y, r0) is the
base vertex y itself. The chain metric is the shortest-path metric of the
graph whose edge weights are the two-scale distance ``sc_distance``; only
base edges and pairs inside one cone carry finite weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from backend.tools.hyperbolic_cone import DEFAULT_RADII, LN3, ConePoint, ConeSpace, default_radii, mu
from backend.tools.metric_core import SLACK, FiniteMetricSpace, WeightedGraph, four_point_delta, resolve_delta_mode
from backend.tools.subspace_geometry import Subspace, is_strongly_quasiconvex
from utils.logger import logger

logger = logger(__name__)


class CPoint(NamedTuple):
    kind: str  # "base" | "apex" | "cone"
    cone: int
    base: int
    radius: float


def _sparse(weights: dict[tuple[int, int], float], n: int) -> csr_matrix:
    if not weights:
        return csr_matrix((n, n))
    rows, cols = zip(*weights)
    return csr_matrix((list(weights.values()), (rows, cols)), shape=(n, n))


def _keep_min(weights: dict[tuple[int, int], float], a: int, b: int, w: float) -> None:
    key = (a, b) if a < b else (b, a)
    if w < weights.get(key, math.inf):
        weights[key] = w


class ConeOffSpace:
    """Base graph with one hyperbolic cone of radius r0 glued along each family member.

    Args:
        base: The base graph.
        family: Pairwise distinct subspaces of ``base``.
        r0: Cone radius.
        radii: Sample radii (default r0 k / m, k = 1..m).
        m: Radii count when ``radii`` is not given.

    Raises:
        ValueError: If a member lives elsewhere or two members coincide.
    """

    def __init__(
        self,
        base: WeightedGraph,
        family: Sequence[Subspace],
        r0: float,
        radii: Sequence[float] | None = None,
        m: int = DEFAULT_RADII,
    ):
        seen: set[frozenset[int]] = set()
        for Y in family:
            if Y.ambient is not base:
                raise ValueError("family members must be subspaces of the base graph")
            if Y.members in seen:
                raise ValueError("family members must be pairwise distinct")
            seen.add(Y.members)
        self.base = base
        self.family = list(family)
        self.r0 = float(r0)
        radii = default_radii(r0, m) if radii is None else radii
        self.cones = [ConeSpace(base.metric.restrict(Y.points), self.r0, radii) for Y in self.family]
        self.radii = self.cones[0].radii if self.cones else tuple(sorted(set(radii) | {self.r0}))

        points = [CPoint("base", -1, y, self.r0) for y in range(base.n)]
        self._members: list[list[int]] = []
        for i, Y in enumerate(self.family):
            start = len(points)
            points.append(CPoint("apex", i, -1, 0.0))
            points.extend(CPoint("cone", i, y, r) for y in Y.points for r in self.radii if r < self.r0)
            self._members.append(list(Y.points) + list(range(start, len(points))))
        self.points: tuple[CPoint, ...] = tuple(points)
        self.apexes = [members[len(Y)] for members, Y in zip(self._members, self.family)]
        self.memberships: list[set[int]] = [set() for _ in range(base.n)]
        for i, Y in enumerate(self.family):
            for y in Y.points:
                self.memberships[y].add(i)
        logger.info(f"cone-off materialised: {len(self.points)} points, {len(self.family)} cones")

    def __len__(self) -> int:
        return len(self.points)

    def check(self, x: int) -> CPoint:
        if not 0 <= x < len(self.points):
            raise ValueError(f"point {x} is not materialised")
        return self.points[x]

    def cone_point(self, i: int, x: int) -> ConePoint:
        """Point of ``self.cones[i]`` for the materialised point x of that cone."""
        p = self.points[x]
        if p.kind == "apex":
            return self.cones[i].points[0]
        position = self.family[i].points.index(p.base)
        return ConePoint(position, p.radius)

    def _cone_block(self, i: int) -> np.ndarray:
        cone = self.cones[i]
        order = [cone.index(self.cone_point(i, x)) for x in self._members[i]]
        return cone.distance_matrix[np.ix_(order, order)]

    def _cones_through(self, p: CPoint) -> set[int]:
        return {p.cone} if p.kind != "base" else self.memberships[p.base]

    def sc_distance(self, x: int, y: int) -> float:
        """Two-scale distance; ``inf`` when no base step or single cone joins the points."""
        p, q = self.check(x), self.check(y)
        if x == y:
            return 0.0
        common = self._cones_through(p) & self._cones_through(q)
        if p.kind == "base" and q.kind == "base":
            d = float(self.base.dist[p.base, q.base])
            return mu(d, self.r0) if common else d
        if not common:
            return math.inf
        return min(self.cones[i].distance(self.cone_point(i, x), self.cone_point(i, y)) for i in common)

    @cached_property
    def sc_graph(self) -> csr_matrix:
        """Sparse graph of the finite sc steps, duplicate pairs keeping the smaller weight."""
        weights: dict[tuple[int, int], float] = {}
        for u, v, _ in self.base.edges:
            _keep_min(weights, u, v, float(self.base.dist[u, v]))
        for i, members in enumerate(self._members):
            block = self._cone_block(i)
            for a, b in combinations(range(len(members)), 2):
                _keep_min(weights, members[a], members[b], float(block[a, b]))
        return _sparse(weights, len(self.points))

    def distances_from(self, sources: Sequence[int], limit: float = np.inf, predecessors: bool = False):
        return dijkstra(self.sc_graph, directed=False, indices=list(sources), limit=limit, return_predecessors=predecessors)

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        matrix = dijkstra(self.sc_graph, directed=False)
        matrix = np.minimum(matrix, matrix.T)
        matrix.setflags(write=False)
        return matrix

    def chain_metric(self, x: int, y: int) -> float:
        self.check(x)
        self.check(y)
        return float(self.distances_from([x])[0, y])

    def realising_chain(self, x: int, y: int) -> "Chain":
        self.check(x)
        self.check(y)
        if x == y:
            return Chain((x, y))
        _, pred = self.distances_from([x], predecessors=True)
        path = [y]
        while path[-1] != x:
            path.append(int(pred[0, path[-1]]))
        return Chain(tuple(reversed(path)))

    def project(self, x: int) -> int:
        p = self.check(x)
        if p.kind == "apex":
            raise ValueError("apexes have no projection to the base")
        return p.base

    def label(self, x: int) -> str:
        p = self.check(x)
        if p.kind == "base":
            return str(p.base)
        if p.kind == "apex":
            return f"v{p.cone}"
        return f"c{p.cone}({p.base},{p.radius:.6g})"

    def as_metric_space(self) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.distance_matrix, validate=False)


def sc_distance(S: ConeOffSpace, x: int, y: int) -> float:
    return S.sc_distance(x, y)


def chain_metric(S: ConeOffSpace, x: int, y: int) -> float:
    return S.chain_metric(x, y)


def coneoff_project(S: ConeOffSpace, x: int) -> int:
    return S.project(x)


@dataclass(frozen=True)
class Chain:
    """Finite sequence of materialised point indices."""

    points: tuple[int, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a chain has at least two points")

    def __len__(self) -> int:
        return len(self.points)

    def length(self, S: ConeOffSpace) -> float:
        return float(sum(S.sc_distance(a, b) for a, b in zip(self.points, self.points[1:])))


def base_normal_form(S: ConeOffSpace, chain: Chain) -> Chain:
    """Drop interior cone points while doing so does not lengthen the chain."""
    points = list(chain.points)
    j = 1
    while j < len(points) - 1:
        if S.points[points[j]].kind != "base":
            shortcut = S.sc_distance(points[j - 1], points[j + 1])
            detour = S.sc_distance(points[j - 1], points[j]) + S.sc_distance(points[j], points[j + 1])
            if shortcut <= detour + SLACK:
                del points[j]
                j = max(1, j - 1)
                continue
        j += 1
    return Chain(tuple(points))


def chain_reduce(S: ConeOffSpace, chain: Chain, eta: float) -> Chain:
    """Subchain keeping few points at small cost.

    Keeps the first two points; from z_{j_k} it steps to the next point when
    that gap exceeds eta, otherwise it jumps to the farthest j <= n - 1 still
    within eta of z_{j_k}. The last point is always kept. The result
    satisfies l(C_eta) <= l(C) + m eta^3.

    Raises:
        ValueError: If eta is outside (0, 1) or an interior point is not in the base.
    """
    if not 0 < eta < 1:
        raise ValueError(f"eta must lie in (0, 1), got {eta}")
    pts = chain.points
    n = len(pts)
    if n <= 2:
        return chain
    if any(S.points[z].kind != "base" for z in pts[1:-1]):
        raise ValueError("interior chain points must lie in the base; use base_normal_form first")
    dist = S.base.dist

    def gap(a: int, b: int) -> float:
        return dist[S.points[pts[a]].base, S.points[pts[b]].base]

    kept = [0, 1]
    current = 1
    while current < n - 2:
        if gap(current, current + 1) > eta:
            current += 1
        else:
            current = max(j for j in range(current + 1, n - 1) if gap(current, j) <= eta)
        kept.append(current)
    kept.append(n - 1)
    return Chain(tuple(pts[k] for k in kept))


class ReductionBounds(NamedTuple):
    original_length: float
    reduced_length: float
    points: int
    length_bound: float
    count_bound: float
    length_ok: bool
    count_ok: bool


def reduction_bounds(S: ConeOffSpace, chain: Chain, reduced: Chain, eta: float, A: float | None = None) -> ReductionBounds:
    """Compare a reduced chain against l(C) + m eta^3 and, for eta <= 1/4, the 100 A / eta point count."""
    original = chain.length(S)
    shorter = reduced.length(S)
    m = len(reduced)
    A = max(1.0, original) if A is None else A
    length_bound = original + m * eta ** 3
    count_bound = 100.0 * A / eta
    applies = eta <= 0.25 and original <= A + 1
    return ReductionBounds(
        original, shorter, m, length_bound, count_bound, shorter <= length_bound + SLACK, (not applies) or m <= count_bound
    )


def uniform_approximation_bound(A: float, epsilon: float) -> tuple[float, float]:
    """(eta, M) with eta = sqrt(eps / 2A) / 10 and M = 1000 A sqrt(2A / eps)."""
    if not A > 0 or not epsilon > 0:
        raise ValueError("A and epsilon must be positive")
    return 0.1 * math.sqrt(epsilon / (2 * A)), 1000.0 * A * math.sqrt(2 * A / epsilon)


class LocalBall(NamedTuple):
    center: int
    points: int
    delta: float


def local_ball_delta(S: ConeOffSpace, center: int, radius: float, seed: int = 0) -> LocalBall:
    """Four-point delta of the materialised ball B(center, radius) in the chain metric."""
    S.check(center)
    reach = S.distances_from([center], limit=radius + SLACK)[0]
    members = np.flatnonzero(reach <= radius + SLACK)
    block = S.distances_from(members, limit=2 * radius + SLACK)[:, members]
    block = np.minimum(block, block.T)
    space = FiniteMetricSpace(block, validate=False)
    return LocalBall(center, int(members.size), four_point_delta(space, mode=resolve_delta_mode(space.n, "auto"), seed=seed))


@dataclass
class PathGap:
    gap: float
    envelope_ok: bool
    worst_envelope_excess: float
    delta: float
    pairs: int
    strongly_quasiconvex: list[bool] = field(default_factory=list)


def _realised_graph(S: ConeOffSpace) -> csr_matrix:
    weights: dict[tuple[int, int], float] = {}
    for u, v, _ in S.base.edges:
        _keep_min(weights, u, v, float(S.base.dist[u, v]))
    for i, (Y, members) in enumerate(zip(S.family, S._members)):
        inside = {
            (a, b): Y.members.issuperset(S.base.geodesic(a, b).vertices) for a, b in combinations(Y.points, 2)
        }
        block = S._cone_block(i)
        for a, b in combinations(range(len(members)), 2):
            p, q = S.points[members[a]], S.points[members[b]]
            if p.kind != "apex" and q.kind != "apex" and p.base != q.base:
                if not inside[min(p.base, q.base), max(p.base, q.base)]:
                    continue
            _keep_min(weights, members[a], members[b], float(block[a, b]))
    return _sparse(weights, len(S.points))


def path_metric_gap(S: ConeOffSpace, sample: Sequence[tuple[int, int]], delta: float) -> PathGap:
    """Largest excess of realised-path distance over the chain metric.

    A step is realised when it is a base edge, a radial leg, or a cone pair
    over a fixed geodesic lying in the subspace. Each unrealised step of the
    realising chain may cost up to 40 delta, so the envelope for a pair is
    40 delta times that count.
    """
    convex = [is_strongly_quasiconvex(Y, delta).holds for Y in S.family]
    if not sample:
        return PathGap(0.0, True, -math.inf, delta, 0, convex)
    realised = _realised_graph(S).todok()
    sources = sorted({x for x, _ in sample})
    row = {x: k for k, x in enumerate(sources)}
    path = dijkstra(realised.tocsr(), directed=False, indices=sources)
    chain, pred = S.distances_from(sources, predecessors=True)
    gap, worst = 0.0, -math.inf
    for x, y in sample:
        k = row[x]
        excess = float(path[k, y] - chain[k, y])
        unrealised = 0
        node = y
        while node != x:
            prev = int(pred[k, node])
            w = realised.get((min(prev, node), max(prev, node)), 0.0)
            if w == 0.0 or w > S.sc_distance(prev, node) + SLACK:
                unrealised += 1
            node = prev
        gap = max(gap, excess)
        worst = max(worst, excess - 40.0 * delta * unrealised)
    logger.debug(f"path metric gap {gap:.6g} over {len(sample)} pairs")
    return PathGap(gap, worst <= SLACK, worst, delta, len(sample), convex)


@dataclass
class ConeOffAudit:
    points: int
    delta: float
    delta_mode: str
    symmetric: bool
    chain_below_sc: bool
    mu_lower_bound_ok: bool
    projection_pairs: int
    projection_ok: bool
    tree_bound: float | None
    tree_bound_ok: bool | None


def coneoff_audit(S: ConeOffSpace, delta_mode: str = "auto", seed: int = 0, workers: int = 1) -> ConeOffAudit:
    """Check the metric and comparison inequalities on every materialised pair.

    When the base is a tree and members pairwise share at most one vertex,
    the four-point delta is also compared with ln 3.
    """
    D = S.distance_matrix
    n = len(S.points)
    symmetric = bool(np.allclose(D, D.T, atol=SLACK))
    sc = np.array([[S.sc_distance(x, y) for y in range(n)] for x in range(n)]) if n <= 400 else None
    chain_below_sc = True if sc is None else bool(np.all(D <= sc + SLACK))
    nb = S.base.n
    mu_ok = bool(np.all(D[:nb, :nb] >= mu(S.base.dist, S.r0) - SLACK))

    constant = 3 * math.pi * math.sinh(S.r0) / S.r0
    apex_far = D[:, S.apexes].min(axis=1) >= S.r0 / 2 if S.apexes else np.ones(n, dtype=bool)
    apex_far[S.apexes] = False
    base_of = np.array([max(p.base, 0) for p in S.points])
    projectable = np.array([p.kind != "apex" for p in S.points])
    pairs = apex_far[:, None] & projectable[None, :] & (D < S.r0 / 3)
    rows, cols = np.nonzero(pairs)
    excess = S.base.dist[base_of[rows], base_of[cols]] - constant * D[rows, cols]
    projection_ok = bool(np.all(excess <= SLACK))

    mode = resolve_delta_mode(n, delta_mode)
    delta = four_point_delta(S.as_metric_space(), mode=mode, seed=seed, workers=workers)
    tree_bound = tree_ok = None
    if S.base.is_tree and all(len(Y.members & Z.members) <= 1 for Y, Z in combinations(S.family, 2)):
        tree_bound = LN3
        tree_ok = delta <= LN3 + 1e-6
    logger.info(f"cone-off audit: delta {delta:.6g} over {n} points")
    return ConeOffAudit(n, delta, mode, symmetric, chain_below_sc, mu_ok, int(rows.size), projection_ok, tree_bound, tree_ok)
