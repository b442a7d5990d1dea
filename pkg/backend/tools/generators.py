"""Ready-to-run demo workspaces."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from backend.tools.free_group import FreeGroupBallAction, GENERATORS, to_element, to_word
from backend.tools.group_actions import format_word
from backend.utils import (
    EdgeEntry,
    RotationEntry,
    SpaceDeclaration,
    SubspaceEntry,
    WorkspaceDocument,
    WorkspaceParams,
)
from utils.logger import logger

logger = logger(__name__)


def circle_document(n: int, r0: float) -> WorkspaceDocument:
    """Cycle of n equal edges and total length 2 pi sinh r0; the cone over it is the hyperbolic disc of radius r0."""
    if n < 3:
        raise ValueError(f"a circle needs at least 3 points, got {n}")
    if not r0 > 0:
        raise ValueError(f"r0 must be positive, got {r0}")
    step = 2 * math.pi * math.sinh(r0) / n
    edges = [EdgeEntry(u=i, v=(i + 1) % n, weight=step) for i in range(n)]
    return WorkspaceDocument(
        space=SpaceDeclaration(kind="graph", n=n, edges=edges),
        subspaces=[SubspaceEntry(name="circle", members=list(range(n)))],
        params=WorkspaceParams(r0=r0),
    )


def random_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    return [(int(rng.integers(0, k)), k) for k in range(1, n)]


def tree_family(n: int, sizes: Sequence[int], rng: np.random.Generator) -> list[list[int]]:
    """Subtrees of a random labelled tree, grown so any two share at most one vertex."""
    edges = random_tree_edges(n, rng)
    neighbours: list[list[int]] = [[] for _ in range(n)]
    for u, v in edges:
        neighbours[u].append(v)
        neighbours[v].append(u)
    family: list[list[int]] = []
    for size in sizes:
        start = int(rng.integers(0, n))
        members = [start]
        chosen = {start}
        while len(members) < size:
            frontier = sorted({w for u in members for w in neighbours[u]} - chosen)
            frontier = [w for w in frontier if all(len(chosen.intersection(other) | ({w} & set(other))) <= 1 for other in family)]
            if not frontier:
                break
            w = frontier[int(rng.integers(0, len(frontier)))]
            members.append(w)
            chosen.add(w)
        if any(set(members) == set(other) for other in family):
            continue
        family.append(sorted(members))
    return family


def tree_family_document(seed: int, sizes: Sequence[int], vertices: int | None = None, r0: float = 1.0) -> WorkspaceDocument:
    """Random unit-weight tree with subtrees pairwise sharing at most one vertex, each with trivial H_i."""
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("subtree sizes must be positive")
    n = vertices if vertices is not None else max(12, 2 * sum(sizes))
    if n < max(sizes):
        raise ValueError(f"a tree on {n} vertices has no subtree of size {max(sizes)}")
    rng = np.random.default_rng(seed)
    edges = [EdgeEntry(u=u, v=v, weight=1.0) for u, v in random_tree_edges(n, rng)]
    family = tree_family(n, sizes, rng)
    subspaces = [SubspaceEntry(name=f"T{k}", members=m) for k, m in enumerate(family)]
    rotations = [RotationEntry(label=f"R{k}", subspace=f"T{k}", subgroup=["1"]) for k in range(len(family))]
    logger.info(f"tree family demo: {n} vertices, subtree sizes {[len(m) for m in family]}")
    return WorkspaceDocument(
        space=SpaceDeclaration(kind="graph", n=n, edges=edges),
        subspaces=subspaces,
        rotations=rotations,
        params=WorkspaceParams(r0=r0, delta0=0.01, Delta0=0.1, epsilon=0.1),
    )


def free_group_document(radius: int, relator: str, translate_radius: int | None = None) -> WorkspaceDocument:
    """Cayley ball of F(a, b) with the translates g A of the relator's axis A, |g| <= translate_radius.

    Each translate is paired with <g w g^-1>. Index images under a and b are
    declared when the image translate is materialised; the rest stay undeclared.

    Raises:
        ValueError: If the relator is not cyclically reduced.
    """
    action = FreeGroupBallAction(radius)
    t = radius // 2 if translate_radius is None else translate_radius
    if not 0 <= t <= radius:
        raise ValueError(f"translate radius must lie in [0, {radius}]")
    w = to_element(relator)
    axis = action.axis(relator, reach=radius + t + 1)
    translates: dict[frozenset[int], int] = {}
    representatives = []
    for k, point in enumerate(action.points):
        if len(point) > t:
            break
        g = to_element(action.label(k))
        found = action.translate(g, axis)
        if found and found not in translates:
            translates[found] = len(representatives)
            representatives.append(g)
    subspaces, rotations = [], []
    for i, g in enumerate(representatives):
        members = sorted(action.translate(g, axis))
        subspaces.append(SubspaceEntry(name=f"Y{i}", members=members))
        images = {}
        for s in GENERATORS:
            j = translates.get(action.translate(to_element(s) * g, axis))
            if j is not None:
                images[s] = j
        subgroup = format_word(to_word(g * w * g ** -1))
        rotations.append(RotationEntry(label=f"R{i}", subspace=f"Y{i}", subgroup=[subgroup], image_under=images))
    logger.info(f"free group demo: ball radius {radius}, {len(representatives)} translates of the axis of {relator}")
    return WorkspaceDocument(
        space=SpaceDeclaration(kind="freegroup", radius=radius),
        subspaces=subspaces,
        rotations=rotations,
        params=WorkspaceParams(r0=1.0, delta0=0.1, Delta0=0.5, epsilon=0.1),
    )
