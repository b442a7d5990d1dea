"""Workspace documents: parsing, emission and the in-memory workspace.

A document is line oriented; ``#`` starts a comment::

    points 4
    edge 0 1 1
    dist 0 1 2.5              (matrix spaces, every pair once)
    freegroup radius 6        (Cayley ball of F(a, b) instead of points)
    subspace Y: 0 1 2
    generator g: 1 2 3 0
    rotation R: subspace=Y subgroup=g^2,h image_under g=1 h=0
    param r0 1.5
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

from pydantic import ValidationError

from backend.errors import DocumentError, MetricValidationError, ReferenceResolutionError
from backend.tools.free_group import GENERATORS as FREE_GENERATORS
from backend.tools.free_group import FreeGroupBallAction
from backend.tools.group_actions import PermutationAction, RotationPair, check_generator_names, parse_word
from backend.tools.metric_core import FiniteMetricSpace, WeightedGraph
from backend.tools.subspace_geometry import Subspace
from backend.utils import (
    DistEntry,
    EdgeEntry,
    GeneratorEntry,
    RotationEntry,
    SpaceDeclaration,
    SubspaceEntry,
    WorkspaceDocument,
    WorkspaceParams,
)
from utils.helpers import format_number
from utils.logger import logger

logger = logger(__name__)

PARAM_TYPES = {"r0": float, "delta0": float, "Delta0": float, "epsilon": float, "cap": int, "radii": int}


def _number(text: str, kind, line: int, what: str):
    try:
        return kind(text)
    except ValueError:
        raise DocumentError(f"{what} must be {'an integer' if kind is int else 'a number'}, got {text!r}", line) from None


def _split_header(rest: str, line: int, keyword: str) -> tuple[str, str]:
    name, sep, body = rest.partition(":")
    name = name.strip()
    if not sep or not name or " " in name:
        raise DocumentError(f"expected '{keyword} NAME: ...'", line)
    return name, body


def parse_workspace(text: str) -> WorkspaceDocument:
    """Parse a workspace document.

    Args:
        text (str): Document source.

    Returns:
        WorkspaceDocument: The parsed document with every reference resolved.

    Raises:
        DocumentError: On malformed lines, unknown keywords or duplicates (with line number).
        ReferenceResolutionError: On names or indices that do not resolve.
    """
    n: Optional[int] = None
    radius: Optional[int] = None
    edges: list[EdgeEntry] = []
    dist: list[DistEntry] = []
    subspaces: list[SubspaceEntry] = []
    generators: list[GeneratorEntry] = []
    rotations: list[RotationEntry] = []
    params: dict[str, float | int] = {}
    lines: dict[tuple[str, str], int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        keyword, _, rest = content.partition(" ")
        fields = rest.split()
        if keyword == "points":
            if n is not None or radius is not None:
                raise DocumentError("space declared twice", number)
            if len(fields) != 1:
                raise DocumentError("expected 'points N'", number)
            n = _number(fields[0], int, number, "point count")
            if n < 1:
                raise DocumentError("point count must be positive", number)
        elif keyword == "freegroup":
            if n is not None or radius is not None:
                raise DocumentError("space declared twice", number)
            if len(fields) != 2 or fields[0] != "radius":
                raise DocumentError("expected 'freegroup radius R'", number)
            radius = _number(fields[1], int, number, "ball radius")
            if radius < 1:
                raise DocumentError("ball radius must be at least 1", number)
        elif keyword in ("edge", "dist"):
            if n is None:
                raise DocumentError(f"'{keyword}' before 'points'", number)
            if len(fields) != 3:
                raise DocumentError(f"expected '{keyword} I J VALUE'", number)
            i = _number(fields[0], int, number, "point index")
            j = _number(fields[1], int, number, "point index")
            value = _number(fields[2], float, number, "length")
            for p in (i, j):
                if not 0 <= p < n:
                    raise ReferenceResolutionError(f"point {p} outside [0, {n})", number)
            if keyword == "edge":
                edges.append(EdgeEntry(u=i, v=j, weight=value))
            else:
                dist.append(DistEntry(i=i, j=j, d=value))
        elif keyword == "subspace":
            name, body = _split_header(rest, number, keyword)
            if ("subspace", name) in lines:
                raise DocumentError(f"subspace {name} declared twice", number)
            lines[("subspace", name)] = number
            members = [_number(tok, int, number, "member") for tok in body.split()]
            if not members:
                raise DocumentError(f"subspace {name} is empty", number)
            subspaces.append(SubspaceEntry(name=name, members=members))
        elif keyword == "generator":
            name, body = _split_header(rest, number, keyword)
            if ("generator", name) in lines:
                raise DocumentError(f"generator {name} declared twice", number)
            lines[("generator", name)] = number
            generators.append(GeneratorEntry(name=name, images=[_number(tok, int, number, "image") for tok in body.split()]))
        elif keyword == "rotation":
            label, body = _split_header(rest, number, keyword)
            if ("rotation", label) in lines:
                raise DocumentError(f"rotation {label} declared twice", number)
            lines[("rotation", label)] = number
            rotations.append(_parse_rotation(label, body.split(), number))
        elif keyword == "param":
            if len(fields) != 2:
                raise DocumentError("expected 'param KEY VALUE'", number)
            key, value = fields
            if key not in PARAM_TYPES:
                raise DocumentError(f"unknown param {key!r}", number)
            if key in params:
                raise DocumentError(f"param {key} given twice", number)
            params[key] = _number(value, PARAM_TYPES[key], number, key)
        else:
            raise DocumentError(f"unknown keyword {keyword!r}", number)

    if n is None and radius is None:
        raise DocumentError("no space declared: expected 'points N' or 'freegroup radius R'")
    if edges and dist:
        raise DocumentError("a space is either a graph (edge lines) or a matrix (dist lines)")
    if radius is not None:
        space = SpaceDeclaration(kind="freegroup", radius=radius)
    elif dist:
        space = SpaceDeclaration(kind="matrix", n=n, dist=dist)
    else:
        space = SpaceDeclaration(kind="graph", n=n, edges=edges)
    try:
        doc = WorkspaceDocument(
            space=space, subspaces=subspaces, generators=generators, rotations=rotations, params=WorkspaceParams(**params)
        )
    except ValidationError as e:
        raise DocumentError(str(e)) from None
    _resolve(doc, lines)
    logger.debug(f"parsed workspace: {space.kind} space, {len(subspaces)} subspaces, {len(rotations)} rotations")
    return doc


def _parse_rotation(label: str, tokens: list[str], line: int) -> RotationEntry:
    subspace = None
    subgroup: Optional[list[str]] = None
    images: dict[str, int] = {}
    in_images = False
    for token in tokens:
        key, sep, value = token.partition("=")
        if token == "image_under":
            in_images = True
        elif not sep:
            raise DocumentError(f"unexpected token {token!r} in rotation {label}", line)
        elif in_images:
            if key in images:
                raise DocumentError(f"image under {key} given twice", line)
            images[key] = _number(value, int, line, "image index")
        elif key == "subspace":
            subspace = value
        elif key == "subgroup":
            subgroup = [w for w in value.split(",") if w]
        else:
            raise DocumentError(f"unknown rotation key {key!r}", line)
    if subspace is None or not subgroup:
        raise DocumentError(f"rotation {label} needs subspace= and subgroup=", line)
    return RotationEntry(label=label, subspace=subspace, subgroup=subgroup, image_under=images)


def _generator_names(doc: WorkspaceDocument) -> tuple[str, ...]:
    return FREE_GENERATORS if doc.space.kind == "freegroup" else tuple(g.name for g in doc.generators)


def _resolve(doc: WorkspaceDocument, lines: dict[tuple[str, str], int]) -> None:
    """Check that every name and index in the document resolves."""
    size = None if doc.space.kind == "freegroup" else doc.space.n
    if doc.space.kind == "freegroup" and doc.generators:
        raise DocumentError("freegroup spaces have the fixed generators a and b", lines.get(("generator", doc.generators[0].name)))
    names = _generator_names(doc)
    try:
        check_generator_names(list(names))
    except ValueError as e:
        raise DocumentError(str(e)) from None
    for g in doc.generators:
        if len(g.images) != size:
            raise ReferenceResolutionError(f"generator {g.name} lists {len(g.images)} images for {size} points", lines.get(("generator", g.name)))
    for s in doc.subspaces:
        if size is not None:
            outside = [m for m in s.members if not 0 <= m < size]
            if outside:
                raise ReferenceResolutionError(f"subspace {s.name} has points {outside} outside [0, {size})", lines.get(("subspace", s.name)))
    declared = {s.name for s in doc.subspaces}
    for r in doc.rotations:
        line = lines.get(("rotation", r.label))
        if r.subspace not in declared:
            raise ReferenceResolutionError(f"rotation {r.label} refers to unknown subspace {r.subspace}", line)
        for word in r.subgroup:
            try:
                parse_word(word, names)
            except ValueError as e:
                raise ReferenceResolutionError(f"rotation {r.label}: {e}", line) from None
        for name, j in r.image_under.items():
            if name not in names:
                raise ReferenceResolutionError(f"rotation {r.label}: unknown generator {name}", line)
            if not 0 <= j < len(doc.rotations):
                raise ReferenceResolutionError(f"rotation {r.label}: image index {j} out of range", line)


def load_workspace(path: str) -> WorkspaceDocument:
    if not os.path.exists(path):
        raise DocumentError(f"workspace file {path} not found")
    with open(path, "r") as file:
        return parse_workspace(file.read())


def dump_workspace(doc: WorkspaceDocument) -> str:
    """Emit a document that parses back to an equal ``WorkspaceDocument``."""
    out: list[str] = []
    space = doc.space
    if space.kind == "freegroup":
        out.append(f"freegroup radius {space.radius}")
    else:
        out.append(f"points {space.n}")
        out.extend(f"edge {e.u} {e.v} {format_number(e.weight, exact=True)}" for e in space.edges)
        out.extend(f"dist {e.i} {e.j} {format_number(e.d, exact=True)}" for e in space.dist)
    out.extend(f"subspace {s.name}: {' '.join(map(str, s.members))}" for s in doc.subspaces)
    out.extend(f"generator {g.name}: {' '.join(map(str, g.images))}" for g in doc.generators)
    for r in doc.rotations:
        line = f"rotation {r.label}: subspace={r.subspace} subgroup={','.join(r.subgroup)}"
        if r.image_under:
            line += " image_under " + " ".join(f"{k}={v}" for k, v in r.image_under.items())
        out.append(line)
    for key, value in doc.params.model_dump(exclude_none=True).items():
        out.append(f"param {key} {format_number(value, exact=True)}")
    return "\n".join(out) + "\n"


@dataclass
class Workspace:
    document: WorkspaceDocument
    space: WeightedGraph | FiniteMetricSpace
    subspaces: dict[str, Subspace]
    action: PermutationAction | FreeGroupBallAction
    pairs: list[RotationPair] = field(default_factory=list)
    declared: dict[tuple[str, int], int] = field(default_factory=dict)

    @property
    def graph(self) -> WeightedGraph:
        if not isinstance(self.space, WeightedGraph):
            raise MetricValidationError("this command needs a graph space (edge lines), not a distance matrix")
        return self.space


def build_workspace(doc: WorkspaceDocument) -> Workspace:
    """Materialise the space, subspaces, action and rotation pairs of a document.

    Raises:
        MetricValidationError: If the space or the generators are invalid.
        ReferenceResolutionError: If a subspace is unusable.
    """
    _resolve(doc, {})
    if doc.space.kind == "freegroup":
        action = FreeGroupBallAction(doc.space.radius)
        space = action.graph
    else:
        if doc.space.kind == "matrix":
            space = FiniteMetricSpace.from_entries(doc.space.n, [(e.i, e.j, e.d) for e in doc.space.dist])
        else:
            space = WeightedGraph(doc.space.n, [(e.u, e.v, e.weight) for e in doc.space.edges])
        action = PermutationAction(space, {g.name: g.images for g in doc.generators})
    subspaces = {}
    for s in doc.subspaces:
        try:
            subspaces[s.name] = Subspace(space, frozenset(s.members), s.name)
        except ValueError as e:
            raise ReferenceResolutionError(str(e)) from None
    pairs = [RotationPair(r.label, subspaces[r.subspace], tuple(r.subgroup)) for r in doc.rotations]
    declared = {(name, i): j for i, r in enumerate(doc.rotations) for name, j in r.image_under.items()}
    logger.info(f"workspace built: {len(subspaces)} subspaces, {len(pairs)} rotation pairs")
    return Workspace(doc, space, subspaces, action, pairs, declared)
