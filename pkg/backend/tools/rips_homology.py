"""Rips complexes P_d(X) and their mod-2 homology.

A simplex is a subset of diameter strictly less than d, so P_d(X) is the
clique complex of the graph joining points at distance < d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from backend.errors import ComputationLimitError
from backend.tools.metric_core import FiniteMetricSpace, WeightedGraph, as_metric
from utils.logger import logger

logger = logger(__name__)

DEFAULT_MAXDIM = 3
SIMPLEX_LIMIT = 500_000
CONVENTION = "diameter < d"

Simplex = tuple[int, ...]


@dataclass
class RipsComplex:
    scale: float
    maxdim: int
    simplices: list[list[Simplex]] = field(default_factory=list)
    convention: str = CONVENTION

    def __len__(self) -> int:
        return sum(len(level) for level in self.simplices)

    def counts(self) -> list[int]:
        return [len(level) for level in self.simplices]


def build_rips(X: FiniteMetricSpace | WeightedGraph, d: float, maxdim: int = DEFAULT_MAXDIM, limit: int = SIMPLEX_LIMIT) -> RipsComplex:
    """All simplices of P_d(X) up to dimension ``maxdim``.

    Raises:
        ValueError: If d <= 0 or maxdim < 0.
        ComputationLimitError: If more than ``limit`` simplices are produced.
    """
    if not d > 0:
        raise ValueError(f"Rips scale must be positive, got {d}")
    if maxdim < 0:
        raise ValueError(f"maxdim must be non-negative, got {maxdim}")
    dist = as_metric(X).dist
    n = dist.shape[0]
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    rows, cols = np.nonzero(np.triu(dist < d, k=1))
    graph.add_edges_from(zip(rows.tolist(), cols.tolist()))

    levels: list[list[Simplex]] = [[] for _ in range(maxdim + 1)]
    total = 0
    for clique in nx.enumerate_all_cliques(graph):
        if len(clique) > maxdim + 1:
            break
        levels[len(clique) - 1].append(tuple(sorted(clique)))
        total += 1
        if total > limit:
            raise ComputationLimitError(f"Rips complex at scale {d} exceeds {limit} simplices")
    for level in levels:
        level.sort()
    logger.info(f"Rips complex at scale {d}: simplex counts {[len(level) for level in levels]}")
    return RipsComplex(float(d), maxdim, levels)


def boundary_matrix(K: RipsComplex, k: int) -> np.ndarray:
    """Mod-2 boundary from k-simplices (columns) to (k-1)-simplices (rows)."""
    if not 1 <= k <= K.maxdim:
        raise ValueError(f"boundary dimension {k} outside [1, {K.maxdim}]")
    faces = {simplex: row for row, simplex in enumerate(K.simplices[k - 1])}
    matrix = np.zeros((len(K.simplices[k - 1]), len(K.simplices[k])), dtype=np.uint8)
    for col, simplex in enumerate(K.simplices[k]):
        for face in combinations(simplex, k):
            matrix[faces[face], col] = 1
    return matrix


def gf2_rank(matrix: np.ndarray) -> int:
    """Rank over the two-element field by Gaussian elimination with XOR row operations."""
    R = (np.asarray(matrix, dtype=np.uint8) % 2).copy()
    if R.shape[0] > R.shape[1]:
        R = R.T.copy()
    m, n = R.shape
    rank = 0
    for col in range(n):
        if rank == m:
            break
        pivots = np.flatnonzero(R[rank:, col]) + rank
        if pivots.size == 0:
            continue
        if pivots[0] != rank:
            R[[rank, pivots[0]]] = R[[pivots[0], rank]]
        below = np.flatnonzero(R[rank + 1:, col]) + rank + 1
        if below.size:
            R[below] ^= R[rank]
        rank += 1
    return rank


def _ranks(K: RipsComplex, top: int) -> list[int]:
    # ranks[k] = rank of the boundary out of dimension k; ranks[0] = 0
    ranks = [0]
    for k in range(1, top + 1):
        ranks.append(gf2_rank(boundary_matrix(K, k)) if K.simplices[k] and K.simplices[k - 1] else 0)
    return ranks


def betti_numbers(K: RipsComplex, up_to: int) -> list[int]:
    """Mod-2 Betti numbers b_0..b_{up_to}.

    Raises:
        ValueError: If up_to > maxdim - 1.
    """
    if not 0 <= up_to <= K.maxdim - 1:
        raise ValueError(f"Betti numbers up to {up_to} need boundaries up to dimension {up_to + 1}, maxdim is {K.maxdim}")
    ranks = _ranks(K, up_to + 1)
    return [len(K.simplices[k]) - ranks[k] - ranks[k + 1] for k in range(up_to + 1)]


def euler_characteristic(K: RipsComplex) -> int:
    return sum((-1) ** k * len(level) for k, level in enumerate(K.simplices))


def skeleton_betti_numbers(K: RipsComplex) -> list[int]:
    """Betti numbers of the maxdim-skeleton itself, top boundary taken as zero."""
    ranks = _ranks(K, K.maxdim) + [0]
    return [len(K.simplices[k]) - ranks[k] - ranks[k + 1] for k in range(K.maxdim + 1)]


def boundary_squares_vanish(K: RipsComplex) -> bool:
    for k in range(2, K.maxdim + 1):
        if not K.simplices[k]:
            continue
        product = boundary_matrix(K, k - 1).astype(np.int64) @ boundary_matrix(K, k).astype(np.int64)
        if np.any(product % 2):
            return False
    return True


def mst_bottleneck(X: FiniteMetricSpace | WeightedGraph) -> float:
    """Longest edge of a minimum spanning tree: the smallest connecting scale for the non-strict graph."""
    dist = as_metric(X).dist
    if dist.shape[0] < 2:
        return 0.0
    tree = minimum_spanning_tree(dist)
    return float(tree.data.max()) if tree.nnz else 0.0


def default_scale(X: FiniteMetricSpace | WeightedGraph, delta: float) -> float:
    """4 delta + MST bottleneck + smallest positive distance (1 on a single point)."""
    X = as_metric(X)
    smallest = X.min_positive_distance() or 1.0
    return 4.0 * delta + mst_bottleneck(X) + smallest


@dataclass
class ConnectednessCertificate:
    scale: float
    n: int
    counts: list[int]
    reduced_betti: list[int]
    passes: bool
    euler_characteristic: int
    euler_consistent: bool
    boundary_ok: bool
    notes: list[str]


def connectedness_certificate(
    X: FiniteMetricSpace | WeightedGraph,
    delta: float,
    n: int,
    d: float | None = None,
    limit: int = SIMPLEX_LIMIT,
) -> ConnectednessCertificate:
    """Reduced mod-2 Betti numbers of P_d(X) in dimensions 0..n.

    Passing is a necessary condition for n-connectedness only; neither the
    fundamental group nor torsion is examined.
    """
    if delta < 0:
        raise ValueError(f"delta must be non-negative, got {delta}")
    if n < 0:
        raise ValueError(f"certificate dimension must be non-negative, got {n}")
    scale = default_scale(X, delta) if d is None else d
    K = build_rips(X, scale, n + 1, limit)
    betti = betti_numbers(K, n)
    reduced = [betti[0] - 1] + betti[1:]
    euler = euler_characteristic(K)
    skeleton = skeleton_betti_numbers(K)
    consistent = euler == sum((-1) ** k * b for k, b in enumerate(skeleton))
    boundary_ok = boundary_squares_vanish(K)
    if not boundary_ok:
        logger.error(f"boundary of boundary is non-zero at scale {scale}")
    notes = [
        f"simplices have {CONVENTION}",
        "necessary condition only: mod-2 coefficients, torsion and the fundamental group are not certified",
    ]
    if d is None:
        notes.append("scale = 4 delta + longest MST edge + smallest positive distance")
    return ConnectednessCertificate(
        scale=scale,
        n=n,
        counts=K.counts(),
        reduced_betti=reduced,
        passes=all(b == 0 for b in reduced),
        euler_characteristic=euler,
        euler_consistent=consistent,
        boundary_ok=boundary_ok,
        notes=notes,
    )
