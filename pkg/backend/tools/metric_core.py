"""Finite metric spaces, graph-induced metrics, Gromov products and
hyperbolicity constants.

Geodesics in a ``WeightedGraph`` are fixed once per unordered pair: the path
is walked from the lower index to the higher one, always stepping to the
smallest-index neighbour that stays on a shortest path. Every
geodesic-dependent constant in the toolkit (thinness, quasi-convexity,
cylinders) is relative to that choice.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from backend.errors import MetricValidationError
from utils.logger import logger

logger = logger(__name__)

SLACK = 1e-9
EXACT_DELTA_LIMIT = 150
DEFAULT_DELTA_SAMPLES = 1_000_000
_DELTA_CHUNK = 2_000_000
_SAMPLE_BATCH = 200_000


class FiniteMetricSpace:
    """Immutable point set ``0..n-1`` with a validated distance matrix."""

    def __init__(self, dist, *, validate: bool = True):
        matrix = np.array(dist, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise MetricValidationError(f"distance matrix must be square, got shape {matrix.shape}")
        if validate:
            validate_metric(matrix)
        matrix.setflags(write=False)
        self._dist = matrix

    @classmethod
    def from_entries(cls, n: int, entries: Iterable[tuple[int, int, float]]) -> "FiniteMetricSpace":
        """Build a space from ``(i, j, d)`` triples covering every pair once."""
        matrix = np.full((n, n), np.nan)
        np.fill_diagonal(matrix, 0.0)
        for i, j, d in entries:
            if not (0 <= i < n and 0 <= j < n):
                raise MetricValidationError(f"dist entry ({i}, {j}) out of range [0, {n})")
            if i == j:
                raise MetricValidationError(f"dist entry ({i}, {j}) on the diagonal")
            if not np.isnan(matrix[i, j]):
                raise MetricValidationError(f"dist entry ({i}, {j}) given twice")
            matrix[i, j] = matrix[j, i] = d
        missing = np.argwhere(np.isnan(matrix))
        if len(missing):
            i, j = missing[0]
            raise MetricValidationError(f"dist entry ({i}, {j}) missing")
        return cls(matrix)

    @property
    def dist(self) -> np.ndarray:
        return self._dist

    @property
    def n(self) -> int:
        return self._dist.shape[0]

    def __len__(self) -> int:
        return self.n

    def check_point(self, x: int) -> int:
        if not 0 <= x < self.n:
            raise ValueError(f"point {x} out of range [0, {self.n})")
        return int(x)

    def distance(self, x: int, y: int) -> float:
        return float(self._dist[self.check_point(x), self.check_point(y)])

    def diameter(self) -> float:
        return float(self._dist.max()) if self.n else 0.0

    def min_positive_distance(self) -> float:
        positive = self._dist[self._dist > 0]
        return float(positive.min()) if positive.size else 0.0

    def restrict(self, points: Sequence[int]) -> "FiniteMetricSpace":
        index = np.asarray(points, dtype=np.intp)
        return FiniteMetricSpace(self._dist[np.ix_(index, index)], validate=False)

    def scaled(self, factor: float) -> "FiniteMetricSpace":
        return FiniteMetricSpace(self._dist * factor, validate=False)


def validate_metric(matrix: np.ndarray) -> None:
    """Raise MetricValidationError unless ``matrix`` satisfies the metric axioms.

    The triangle inequality check is O(n^3), vectorised one pivot at a time.
    """
    n = matrix.shape[0]
    if not np.all(np.isfinite(matrix)):
        raise MetricValidationError("distances must be finite")
    if np.any(np.abs(np.diag(matrix)) > 0):
        raise MetricValidationError("d(x, x) must be 0")
    asym = np.argwhere(np.abs(matrix - matrix.T) > SLACK)
    if len(asym):
        i, j = asym[0]
        raise MetricValidationError(f"d({i}, {j}) != d({j}, {i})")
    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (matrix <= 0))
    if len(bad):
        i, j = bad[0]
        raise MetricValidationError(f"d({i}, {j}) must be positive for distinct points")
    for k in range(n):
        detour = matrix[:, k:k + 1] + matrix[k:k + 1, :]
        violated = np.argwhere(matrix > detour + SLACK)
        if len(violated):
            i, j = violated[0]
            raise MetricValidationError(f"triangle inequality fails for ({i}, {k}, {j})")


class DiscreteGeodesic(NamedTuple):
    vertices: tuple[int, ...]
    length: float


class WeightedGraph:
    """Connected, loop-free graph with positive edge weights.

    Args:
        n (int): Vertex count; vertices are ``0..n-1``.
        edges (Iterable[tuple[int, int, float]]): Undirected weighted edges.

    Raises:
        MetricValidationError: On self-loops, duplicate edges, non-positive
            weights or a disconnected graph.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int, float]]):
        graph = nx.Graph()
        graph.add_nodes_from(range(n))
        kept = []
        for u, v, w in edges:
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < n and 0 <= v < n):
                raise MetricValidationError(f"edge ({u}, {v}) out of range [0, {n})")
            if u == v:
                raise MetricValidationError(f"self-loop at {u}")
            if not np.isfinite(w) or w <= 0:
                raise MetricValidationError(f"edge ({u}, {v}) has non-positive weight {w}")
            if graph.has_edge(u, v):
                raise MetricValidationError(f"duplicate edge ({u}, {v})")
            graph.add_edge(u, v, weight=w)
            kept.append((u, v, w))
        if n > 0 and not nx.is_connected(graph):
            raise MetricValidationError("graph is not connected")
        self._graph = graph
        self._edges = tuple(kept)
        self._geodesics: dict[tuple[int, int], tuple[int, ...]] = {}

    @property
    def n(self) -> int:
        return self._graph.number_of_nodes()

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        return self._edges

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    @property
    def is_tree(self) -> bool:
        return nx.is_tree(self._graph) if self.n else False

    @cached_property
    def metric(self) -> FiniteMetricSpace:
        n = self.n
        if not self._edges:
            return FiniteMetricSpace(np.zeros((n, n)), validate=False)
        rows, cols, weights = zip(*self._edges)
        adjacency = csr_matrix((weights, (rows, cols)), shape=(n, n))
        dist = shortest_path(adjacency, method="D", directed=False)
        logger.debug(f"metric closure computed for {n} vertices, {len(self._edges)} edges")
        return FiniteMetricSpace(dist, validate=False)

    @cached_property
    def _adjacency(self) -> tuple[tuple[tuple[int, float], ...], ...]:
        return tuple(
            tuple(sorted((v, data["weight"]) for v, data in self._graph[u].items()))
            for u in range(self.n)
        )

    @property
    def dist(self) -> np.ndarray:
        return self.metric.dist

    def distance(self, u: int, v: int) -> float:
        return self.metric.distance(u, v)

    def geodesic(self, u: int, v: int) -> DiscreteGeodesic:
        """The fixed geodesic from ``u`` to ``v``."""
        u, v = self.metric.check_point(u), self.metric.check_point(v)
        lo, hi = min(u, v), max(u, v)
        path = self._geodesics.get((lo, hi))
        if path is None:
            path = self._walk(lo, hi)
            self._geodesics[(lo, hi)] = path
        if u > v:
            path = path[::-1]
        return DiscreteGeodesic(path, float(self.dist[u, v]))

    def _walk(self, source: int, target: int) -> tuple[int, ...]:
        dist = self.dist
        path = [source]
        current = source
        while current != target:
            remaining = dist[current, target]
            for neighbour, weight in self._adjacency[current]:
                if abs(remaining - (weight + dist[neighbour, target])) <= SLACK:
                    current = neighbour
                    break
            else:
                raise MetricValidationError(f"no shortest-path step from {current} towards {target}")
            path.append(current)
        return tuple(path)

    def geodesic_mask(self) -> np.ndarray:
        """Boolean array ``mask[a, b, u]``: u lies on the fixed geodesic [a, b]."""
        n = self.n
        mask = np.zeros((n, n, n), dtype=bool)
        for a in range(n):
            mask[a, a, a] = True
            for b in range(a + 1, n):
                path = list(self.geodesic(a, b).vertices)
                mask[a, b, path] = True
                mask[b, a, path] = True
        return mask

    def subdivide(self) -> "WeightedGraph":
        """Replace every edge of integer weight k by a path of k unit edges."""
        next_vertex = self.n
        edges = []
        for u, v, w in self._edges:
            steps = int(round(w))
            if abs(steps - w) > SLACK or steps < 1:
                raise MetricValidationError(f"edge ({u}, {v}) has non-integer weight {w}")
            chain = [u] + list(range(next_vertex, next_vertex + steps - 1)) + [v]
            next_vertex += steps - 1
            edges.extend((a, b, 1.0) for a, b in zip(chain, chain[1:]))
        return WeightedGraph(next_vertex, edges)


def as_metric(space: FiniteMetricSpace | WeightedGraph) -> FiniteMetricSpace:
    return space.metric if isinstance(space, WeightedGraph) else space


def gromov_product(X: FiniteMetricSpace | WeightedGraph, y: int, z: int, x: int) -> float:
    """(y, z)_x = (d(x, y) + d(x, z) - d(y, z)) / 2."""
    X = as_metric(X)
    value = 0.5 * (X.distance(x, y) + X.distance(x, z) - X.distance(y, z))
    return max(value, 0.0)


def resolve_delta_mode(n: int, mode: str = "auto") -> str:
    if mode == "auto":
        return "exact" if n <= EXACT_DELTA_LIMIT else "sampled"
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown delta mode {mode!r}")
    return mode


def four_point_delta(
    X: FiniteMetricSpace | WeightedGraph,
    mode: str = "auto",
    samples: int = DEFAULT_DELTA_SAMPLES,
    seed: int = 0,
    workers: int = 1,
) -> float:
    """Four-point hyperbolicity constant.

    For every quadruple the three pair sums d(x,y)+d(z,t), d(x,z)+d(y,t),
    d(x,t)+d(y,z) are compared; delta is half the largest gap between the
    biggest and the second biggest sum. This is the smallest delta with
    (x,z)_t >= min((x,y)_t, (y,z)_t) - delta.

    Args:
        X: The space.
        mode: "exact", "sampled" or "auto" (exact up to 150 points).
        samples: Quadruples drawn in sampled mode.
        seed: Seed of the sampling generator.
        workers: Threads used by the exact scan.

    Returns:
        float: The constant (0 for spaces with fewer than four points).
    """
    dist = as_metric(X).dist
    n = dist.shape[0]
    if n < 4:
        return 0.0
    mode = resolve_delta_mode(n, mode)
    if mode == "sampled":
        return _delta_sampled(dist, samples, seed)
    return _delta_exact(dist, workers)


def _quadruple_gap(first: np.ndarray, second: np.ndarray, third: np.ndarray) -> float:
    largest = np.maximum(np.maximum(first, second), third)
    smallest = np.minimum(np.minimum(first, second), third)
    middle = first + second + third - largest - smallest
    return float((largest - middle).max())


def _delta_from_base(dist: np.ndarray, x: int) -> float:
    # quadruples whose smallest index is x; repeated points contribute 0
    block = dist[x + 1:, x + 1:]
    row = dist[x, x + 1:]
    m = block.shape[0]
    if m < 3:
        return 0.0
    chunk = max(1, _DELTA_CHUNK // (m * m))
    best = 0.0
    for start in range(0, m, chunk):
        ys = slice(start, min(start + chunk, m))
        first = row[ys, None, None] + block[None, :, :]
        second = row[None, :, None] + block[ys][:, None, :]
        third = row[None, None, :] + block[ys][:, :, None]
        best = max(best, _quadruple_gap(first, second, third))
    return best


def _delta_exact(dist: np.ndarray, workers: int) -> float:
    n = dist.shape[0]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gaps = list(pool.map(lambda x: _delta_from_base(dist, x), range(n)))
    else:
        gaps = [_delta_from_base(dist, x) for x in range(n)]
    return 0.5 * max(gaps)


def _delta_sampled(dist: np.ndarray, samples: int, seed: int) -> float:
    rng = np.random.default_rng(seed)
    n = dist.shape[0]
    best = 0.0
    remaining = samples
    while remaining > 0:
        batch = min(remaining, _SAMPLE_BATCH)
        x, y, z, t = rng.integers(0, n, size=(4, batch))
        gap = _quadruple_gap(dist[x, y] + dist[z, t], dist[x, z] + dist[y, t], dist[x, t] + dist[y, z])
        best = max(best, gap)
        remaining -= batch
    logger.debug(f"sampled four-point scan over {samples} quadruples", extra={"extra_data": {"seed": seed}})
    return 0.5 * best


def thin_triangle_constant(G: WeightedGraph) -> float:
    """Fixed-geodesic thinness of vertex triangles.

    Smallest tau such that every vertex of a fixed side [x, y] is within tau of
    the union of the fixed sides [x, z] and [z, y], over all triples.
    """
    n = G.n
    if n < 2:
        return 0.0
    dist = G.dist
    mask = G.geodesic_mask()
    tau = 0.0
    for x in range(n):
        for y in range(x + 1, n):
            side = list(G.geodesic(x, y).vertices)
            others = mask[x] | mask[y]
            reach = np.where(others[:, None, :], dist[side][None, :, :], np.inf).min(axis=2)
            tau = max(tau, float(reach.max()))
    return tau


def thin_quadrilateral_violations(G: WeightedGraph, delta: float) -> list[tuple[int, int, int, int, int]]:
    """Quadruples breaking the 8-delta quadrilateral property.

    For u on [x, x'] with d(x, u) > d(x, y) + 8 delta and
    d(x', u) > d(x', y') + 8 delta, u must lie within 8 delta of [y, y'].
    Returns the violating ``(x, x', y, y', u)`` tuples.
    """
    n = G.n
    dist = G.dist
    mask = G.geodesic_mask()
    margin = 8.0 * delta
    violations = []
    for x in range(n):
        for xp in range(n):
            if x == xp:
                continue
            path = np.array(G.geodesic(x, xp).vertices)
            far_from_y = dist[x, path][None, :] > dist[x, :, None] + margin + SLACK
            far_from_yp = dist[xp, path][None, :] > dist[xp, :, None] + margin + SLACK
            for y in np.flatnonzero(far_from_y.any(axis=1)):
                candidates = far_from_y[y][None, :] & far_from_yp
                for yp in np.flatnonzero(candidates.any(axis=1)):
                    reach = dist[np.ix_(path, np.flatnonzero(mask[y, yp]))].min(axis=1)
                    bad = candidates[yp] & (reach > margin + SLACK)
                    violations.extend((x, xp, int(y), int(yp), int(path[u])) for u in np.flatnonzero(bad))
    return violations


def quasi_isometry_defect(
    f: Sequence[int] | Mapping[int, int],
    X: FiniteMetricSpace | WeightedGraph,
    Y: FiniteMetricSpace | WeightedGraph,
) -> float:
    """Smallest eta with |d_Y(fx, fx') - d_X(x, x')| <= eta for all pairs."""
    X, Y = as_metric(X), as_metric(Y)
    if X.n == 0:
        return 0.0
    try:
        image = np.array([Y.check_point(f[x]) for x in range(X.n)], dtype=np.intp)
    except (KeyError, IndexError) as e:
        raise ValueError(f"map is not total on the source space: {e}") from e
    return float(np.abs(Y.dist[np.ix_(image, image)] - X.dist).max())


class QuasiIsometryCheck(NamedTuple):
    defect: float
    target_delta: float
    source_delta: float
    passes: bool


def quasi_isometry_hyperbolicity_check(
    f: Sequence[int] | Mapping[int, int],
    X: FiniteMetricSpace | WeightedGraph,
    Y: FiniteMetricSpace | WeightedGraph,
    mode: str = "auto",
) -> QuasiIsometryCheck:
    """A (1, eta)-quasi-isometric source of a delta-hyperbolic target is (delta + 3 eta)-hyperbolic."""
    eta = quasi_isometry_defect(f, X, Y)
    target_delta = four_point_delta(Y, mode=mode)
    source_delta = four_point_delta(X, mode=mode)
    return QuasiIsometryCheck(eta, target_delta, source_delta, source_delta <= target_delta + 3 * eta + SLACK)
