"""Hyperbolic cones of radius r0 over finite bases.

A cone point is ``(y, r)`` with ``0 < r <= r0``; every ``(y, 0)`` collapses to
the apex. Two points at radii r, r' over base points at angle theta are at
distance arccosh(cosh r cosh r' - sinh r sinh r' cos theta), where
theta = min(pi, d(y, y') / sinh r0).
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from backend.tools.metric_core import SLACK, FiniteMetricSpace, WeightedGraph, as_metric, validate_metric
from backend.tools.subspace_geometry import Subspace
from utils.logger import logger

logger = logger(__name__)

DEFAULT_RADII = 8
LN3 = math.log(3.0)


class ConePoint(NamedTuple):
    base: int | None
    radius: float

    @property
    def is_apex(self) -> bool:
        return self.base is None


APEX = ConePoint(None, 0.0)


def arccosh1p(u):
    """arccosh(1 + u), accurate for small u; negative u (rounding) clamps to 0."""
    u = np.maximum(np.asarray(u, dtype=np.float64), 0.0)
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def _angle(d, r0: float):
    return np.minimum(np.pi, np.asarray(d, dtype=np.float64) / math.sinh(r0))


def cone_metric(d, r, r_prime, r0: float):
    """Vectorised cone distance from base distance ``d`` and radii ``r``, ``r_prime``."""
    r = np.asarray(r, dtype=np.float64)
    r_prime = np.asarray(r_prime, dtype=np.float64)
    half = 0.5 * _angle(d, r0)
    excess = 2.0 * np.sinh(0.5 * (r - r_prime)) ** 2 + 2.0 * np.sinh(r) * np.sinh(r_prime) * np.sin(half) ** 2
    return arccosh1p(excess)


def angle(Y: FiniteMetricSpace | WeightedGraph, y: int, y_prime: int, r0: float) -> float:
    """min(pi, d(y, y') / sinh r0)."""
    _check_r0(r0)
    return float(_angle(as_metric(Y).distance(y, y_prime), r0))


def mu(t, r0: float):
    """Distance on the rim of the cone as a function of base distance.

    Non-decreasing, concave and subadditive; equals 2 r0 once
    t >= pi sinh r0. Accepts scalars or arrays.
    """
    _check_r0(r0)
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("mu is defined for t >= 0")
    value = cone_metric(t, r0, r0, r0)
    return float(value) if value.ndim == 0 else value


def mu_linear_lower_bound(t, r0: float):
    return 2.0 * r0 / (math.pi * math.sinh(r0)) * np.minimum(math.pi * math.sinh(r0), t)


def mu_cubic_lower_bound(t):
    """t - t^3, a lower bound for mu on [0, 1] once r0 >= 1/2."""
    t = np.asarray(t, dtype=np.float64)
    return t - t ** 3


def r0_constraint(r0: float, epsilon: float) -> bool:
    """Whether r0 exceeds 10^6 (ln 3 + epsilon), the radius used for the cancellation theorem."""
    return r0 > 1e6 * (LN3 + epsilon)


def default_radii(r0: float, m: int = DEFAULT_RADII) -> tuple[float, ...]:
    if m < 1:
        raise ValueError(f"radii sampling needs m >= 1, got {m}")
    return tuple(r0 * k / m for k in range(1, m + 1))


def _check_r0(r0: float) -> None:
    if not r0 > 0:
        raise ValueError(f"r0 must be positive, got {r0}")


class ConeSpace:
    """Materialised cone: apex plus every base point at every sample radius.

    Points are ordered apex first, then by base point, then by radius.

    Args:
        base: Base metric (a restriction, when built over a subspace).
        r0: Cone radius.
        radii: Sample radii in (0, r0]; r0 is always added.
        validate: Check the metric axioms of the materialised distance matrix.
    """

    def __init__(self, base: FiniteMetricSpace, r0: float, radii: Sequence[float] | None = None, *, validate: bool = False):
        _check_r0(r0)
        radii = default_radii(r0) if radii is None else radii
        if any(not 0 < r <= r0 for r in radii):
            raise ValueError(f"radii must lie in (0, {r0}]")
        self.base = base
        self.r0 = float(r0)
        self.radii = tuple(sorted(set(float(r) for r in radii) | {float(r0)}))
        self.points: tuple[ConePoint, ...] = (APEX,) + tuple(
            ConePoint(y, r) for y in range(base.n) for r in self.radii
        )
        self._index = {p: k for k, p in enumerate(self.points)}
        if validate:
            validate_metric(self.distance_matrix)

    def __len__(self) -> int:
        return len(self.points)

    def index(self, point: ConePoint) -> int:
        try:
            return self._index[point]
        except KeyError:
            raise ValueError(f"{point} is not a materialised point of this cone") from None

    def iota(self, y: int) -> ConePoint:
        return ConePoint(self.base.check_point(y), self.r0)

    def proj(self, x: ConePoint) -> int:
        if x.is_apex:
            raise ValueError("the apex has no projection to the base")
        return x.base

    def distance(self, a: ConePoint, b: ConePoint) -> float:
        for p in (a, b):
            if not p.is_apex:
                self.base.check_point(p.base)
                if not 0 < p.radius <= self.r0 + SLACK:
                    raise ValueError(f"{p} does not belong to a cone of radius {self.r0}")
        if a.is_apex or b.is_apex:
            return abs(a.radius - b.radius)
        return float(cone_metric(self.base.dist[a.base, b.base], a.radius, b.radius, self.r0))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        base = np.array([-1 if p.is_apex else p.base for p in self.points])
        radius = np.array([p.radius for p in self.points])
        d = self.base.dist[np.ix_(np.maximum(base, 0), np.maximum(base, 0))]
        matrix = cone_metric(d, radius[:, None], radius[None, :], self.r0)
        matrix[0, :] = radius
        matrix[:, 0] = radius
        matrix = 0.5 * (matrix + matrix.T)
        np.fill_diagonal(matrix, 0.0)
        matrix.setflags(write=False)
        return matrix

    def as_metric_space(self, validate: bool = False) -> FiniteMetricSpace:
        return FiniteMetricSpace(self.distance_matrix, validate=validate)


def cone_distance(C: ConeSpace, a: ConePoint, b: ConePoint) -> float:
    return C.distance(a, b)


def iota(C: ConeSpace, y: int) -> ConePoint:
    return C.iota(y)


def proj(C: ConeSpace, x: ConePoint) -> int:
    return C.proj(x)


def cone_over_subspace(Y: Subspace, r0: float, radii: Sequence[float] | None = None) -> ConeSpace:
    """Cone whose base is ``Y`` with the restricted ambient metric.

    Base index k of the cone corresponds to ``Y.points[k]``.
    """
    return ConeSpace(Y.metric.restrict(Y.points), r0, radii)


class ProjectionAudit(NamedTuple):
    pairs: int
    lower_ok: bool
    upper_ok: bool
    lipschitz_pairs: int
    lipschitz_ok: bool
    worst_lipschitz_excess: float


def projection_audit(C: ConeSpace, samples: int = 1000, seed: int = 0) -> ProjectionAudit:
    """Check the radial/angular distance bounds and the Lipschitz projection bound on random pairs."""
    rng = np.random.default_rng(seed)
    matrix = C.distance_matrix
    count = len(C.points)
    first = rng.integers(1, count, samples)
    second = rng.integers(1, count, samples)
    r = np.array([C.points[k].radius for k in first])
    rp = np.array([C.points[k].radius for k in second])
    y = np.array([C.points[k].base for k in first])
    yp = np.array([C.points[k].base for k in second])
    theta = _angle(C.base.dist[y, yp], C.r0)
    d = matrix[first, second]
    lower_ok = bool(np.all(2 * np.minimum(r, rp) * theta / np.pi <= d + SLACK))
    upper_ok = bool(np.all(d <= np.abs(r - rp) + np.sqrt(np.sinh(r) * np.sinh(rp)) * theta + SLACK))
    constant = 3 * math.pi * math.sinh(C.r0) / C.r0
    eligible = (r >= C.r0 / 2) & (d < C.r0 / 3)
    excess = C.base.dist[y, yp][eligible] - constant * d[eligible]
    return ProjectionAudit(
        pairs=samples,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        lipschitz_pairs=int(eligible.sum()),
        lipschitz_ok=bool(np.all(excess <= SLACK)),
        worst_lipschitz_excess=float(excess.max()) if excess.size else 0.0,
    )
