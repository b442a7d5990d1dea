"""Isometric group actions on finite spaces, rotation families and the
small-cancellation verdict.

Two action backends share one duck-typed interface (``space``, ``partial``,
``element``, ``multiply``, ``inverse``, ``identity``, ``key``, ``images``,
``on_boundary``): ``PermutationAction`` below, and ``FreeGroupBallAction`` in
``free_group.py`` whose images are only defined inside a Cayley ball.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from backend.errors import ComputationLimitError, MetricValidationError
from backend.tools.cone_off import ConeOffSpace, local_ball_delta
from backend.tools.hyperbolic_cone import LN3, ConeSpace, r0_constraint
from backend.tools.metric_core import SLACK, FiniteMetricSpace, WeightedGraph, as_metric, four_point_delta, resolve_delta_mode
from backend.tools.subspace_geometry import Subspace, is_strongly_quasiconvex, largest_piece_detail
from utils.logger import logger

logger = logger(__name__)

DEFAULT_CAP = 12
ELEMENT_LIMIT = 100_000
_NAME = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")

Word = tuple[tuple[str, int], ...]


def check_generator_names(names: Sequence[str]) -> None:
    for name in names:
        if not _NAME.match(name):
            raise ValueError(f"invalid generator name {name!r}")
    for first, second in combinations(names, 2):
        if first.startswith(second) or second.startswith(first):
            raise ValueError(f"generator names cannot be prefixes of each other: {first}, {second}")


def parse_word(text: str, generators: Sequence[str]) -> Word:
    """Parse ``a^2b^-1a`` style words; ``1`` is the identity.

    Raises:
        ValueError: On an unknown generator or a malformed exponent.
    """
    source = text.replace(" ", "")
    if source in ("", "1"):
        return ()
    names = sorted(generators, key=len, reverse=True)
    word: list[tuple[str, int]] = []
    rest = source
    while rest:
        for name in names:
            if rest.startswith(name):
                rest = rest[len(name):]
                power = 1
                if rest.startswith("^"):
                    match = re.match(r"\^(-?\d+)", rest)
                    if not match:
                        raise ValueError(f"invalid power in {text!r}")
                    power = int(match.group(1))
                    rest = rest[match.end():]
                if power:
                    word.append((name, power))
                break
        else:
            raise ValueError(f"unknown generator in {text!r} at {rest!r}")
    return tuple(word)


def format_word(word: Word) -> str:
    if not word:
        return "1"
    return "".join(name if power == 1 else f"{name}^{power}" for name, power in word)


def invert_word(word: Word) -> Word:
    return tuple((name, -power) for name, power in reversed(word))


def compose(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    """p ∘ q: apply q, then p."""
    return tuple(p[i] for i in q)


def invert(p: tuple[int, ...]) -> tuple[int, ...]:
    inverse = [0] * len(p)
    for i, image in enumerate(p):
        inverse[image] = i
    return tuple(inverse)


class PermutationAction:
    """Generators acting as distance-preserving permutations of a finite space.

    Raises:
        MetricValidationError: When a generator is not a permutation or moves
            some pair to a pair at a different distance.
    """

    partial = False

    def __init__(self, space: FiniteMetricSpace | WeightedGraph, generators: Mapping[str, Sequence[int]]):
        self.space = as_metric(space)
        check_generator_names(list(generators))
        n = self.space.n
        self.generators: dict[str, tuple[int, ...]] = {}
        for name, images in generators.items():
            perm = tuple(int(i) for i in images)
            if sorted(perm) != list(range(n)):
                raise MetricValidationError(f"generator {name} is not a permutation of {n} points")
            index = np.array(perm)
            if not np.allclose(self.space.dist[np.ix_(index, index)], self.space.dist, atol=SLACK):
                raise MetricValidationError(f"generator {name} is not an isometry")
            self.generators[name] = perm
        self.identity = tuple(range(n))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.generators)

    def element(self, word: Word | str) -> tuple[int, ...]:
        if isinstance(word, str):
            word = parse_word(word, self.names)
        result = self.identity
        for name, power in word:
            if name not in self.generators:
                raise ValueError(f"unknown generator {name}")
            base = self.generators[name] if power > 0 else invert(self.generators[name])
            for _ in range(abs(power)):
                result = compose(result, base)
        return result

    def multiply(self, g, h):
        return compose(g, h)

    def inverse(self, g):
        return invert(g)

    def key(self, g):
        return g

    def is_identity(self, g) -> bool:
        return g == self.identity

    def images(self, g) -> np.ndarray:
        return np.asarray(g, dtype=np.intp)

    def on_boundary(self, x: int) -> bool:
        return False


class Element(NamedTuple):
    word: Word
    value: object


def enumerate_subgroup(action, words: Sequence[Word | str], cap: int = DEFAULT_CAP) -> list[Element]:
    """Breadth-first enumeration of <words> up to word length ``cap``.

    Elements are deduplicated by the action's key; the shortest word reaching
    each element is kept. Ordering is deterministic.
    """
    if not words:
        raise ValueError("subgroup needs at least one generating word")
    gens: list[tuple[Word, object]] = []
    for word in words:
        parsed = parse_word(word, action.names) if isinstance(word, str) else word
        value = action.element(parsed)
        gens.append((parsed, value))
        gens.append((invert_word(parsed), action.inverse(value)))
    identity = action.element(())
    seen = {action.key(identity): Element((), identity)}
    frontier = deque([(Element((), identity), 0)])
    while frontier:
        current, depth = frontier.popleft()
        if depth == cap:
            continue
        for word, value in gens:
            product = action.multiply(current.value, value)
            key = action.key(product)
            if key in seen:
                continue
            seen[key] = Element(current.word + word, product)
            if len(seen) > ELEMENT_LIMIT:
                raise ComputationLimitError(f"subgroup enumeration exceeded {ELEMENT_LIMIT} elements")
            frontier.append((seen[key], depth + 1))
    return list(seen.values())


class Displacement(NamedTuple):
    value: float
    point: int | None
    boundary: bool


def displacement(action, g, restrict_to: Sequence[int] | None = None) -> Displacement:
    """min over defined points x of d(x, g x), with the minimiser."""
    images = action.images(g)
    points = np.arange(len(images)) if restrict_to is None else np.asarray(restrict_to, dtype=np.intp)
    points = points[images[points] >= 0]
    if points.size == 0:
        return Displacement(math.inf, None, False)
    moved = action.space.dist[points, images[points]]
    k = int(np.argmin(moved))
    x = int(points[k])
    boundary = action.on_boundary(x) or action.on_boundary(int(images[x]))
    return Displacement(float(moved[k]), x, boundary)


def translation_length(action, g: Word | str, cap: int | None = None) -> float:
    """min over points x of d(x, g x).

    Raises:
        ValueError: If the word uses an unknown generator or is longer than ``cap``.
    """
    word = parse_word(g, action.names) if isinstance(g, str) else g
    if cap is not None and sum(abs(p) for _, p in word) > cap:
        raise ValueError(f"word {format_word(word)} is longer than the cap {cap}")
    return displacement(action, action.element(word)).value


class InjectivityRadius(NamedTuple):
    value: float
    word: str | None
    point: int | None
    boundary: bool
    enumerated: int
    undefined: int
    cap: int


def injectivity_radius_detail(
    action, H: Sequence[Word | str], cap: int = DEFAULT_CAP, restrict_to: Sequence[int] | None = None
) -> InjectivityRadius:
    """Minimal displacement over the enumerated nontrivial elements of <H>.

    ``undefined`` counts elements with no point whose image stays in the
    model (Cayley-ball truncation); they do not contribute.
    """
    elements = enumerate_subgroup(action, H, cap)
    best = InjectivityRadius(math.inf, None, None, False, len(elements), 0, cap)
    undefined = 0
    for element in elements:
        if action.is_identity(element.value):
            continue
        moved = displacement(action, element.value, restrict_to)
        if moved.point is None:
            undefined += 1
            continue
        if moved.value < best.value:
            best = best._replace(value=moved.value, word=format_word(element.word), point=moved.point, boundary=moved.boundary)
    return best._replace(undefined=undefined)


def injectivity_radius(action, H: Sequence[Word | str], cap: int = DEFAULT_CAP) -> float:
    return injectivity_radius_detail(action, H, cap).value


def rescale(X: FiniteMetricSpace | WeightedGraph, factor: float) -> FiniteMetricSpace | WeightedGraph:
    """Multiply every distance by ``factor``; graphs stay graphs."""
    if not factor > 0:
        raise ValueError(f"rescaling factor must be positive, got {factor}")
    if isinstance(X, WeightedGraph):
        return WeightedGraph(X.n, [(u, v, w * factor) for u, v, w in X.edges])
    return X.scaled(factor)


class Quotient(NamedTuple):
    space: FiniteMetricSpace
    orbits: tuple[tuple[int, ...], ...]


def quotient_metric(action, cap: int = DEFAULT_CAP) -> Quotient:
    """Orbit space with d(o, o') = min over representatives.

    Raises:
        ValueError: For partial actions.
        ComputationLimitError: If the enumerated elements do not close the orbits.
    """
    if action.partial:
        raise ValueError("quotients need an action defined on every point")
    n = action.space.n
    if action.names:
        elements = [e.value for e in enumerate_subgroup(action, list(action.names), cap)]
    else:
        elements = [action.identity]
    images = np.array(elements, dtype=np.intp).reshape(len(elements), n)
    assigned = np.full(n, -1)
    orbits = []
    for x in range(n):
        if assigned[x] >= 0:
            continue
        orbit = tuple(sorted(set(images[:, x].tolist())))
        assigned[list(orbit)] = len(orbits)
        orbits.append(orbit)
    for name, perm in action.generators.items():
        for orbit in orbits:
            if {perm[x] for x in orbit} != set(orbit):
                raise ComputationLimitError(f"orbit closure not reached at cap {cap} (generator {name})")
    dist = action.space.dist
    k = len(orbits)
    matrix = np.zeros((k, k))
    for i, j in combinations(range(k), 2):
        matrix[i, j] = matrix[j, i] = dist[np.ix_(orbits[i], orbits[j])].min()
    return Quotient(FiniteMetricSpace(matrix), tuple(orbits))


def cone_quotient(C: ConeSpace, action, cap: int = DEFAULT_CAP) -> ConeSpace:
    """Cone over the quotient of the base by an isometric action.

    The quotient base has one point per orbit, at distance the minimum over
    orbit representatives; the cone over it is isometric to the quotient of
    the cone by the action.
    """
    if action.space.n != C.base.n or not np.allclose(action.space.dist, C.base.dist, atol=SLACK):
        raise ValueError("the action does not act on this cone's base")
    return ConeSpace(quotient_metric(action, cap).space, C.r0, C.radii)


@dataclass(frozen=True)
class RotationPair:
    label: str
    subspace: Subspace
    subgroup: tuple[str, ...]


@dataclass
class RotationFamily:
    """Indexed pairs (Y_i, H_i) with the generator action on indices."""

    pairs: list[RotationPair]
    index_action: dict[tuple[str, int], int] = field(default_factory=dict)
    index_source: dict[tuple[str, int], str] = field(default_factory=dict)
    unmaterialised: list[tuple[str, int]] = field(default_factory=list)

    @property
    def subspaces(self) -> list[Subspace]:
        return [pair.subspace for pair in self.pairs]


def _maps_into(images: np.ndarray, source: Subspace, target: Subspace) -> tuple[bool, int]:
    mapped = [int(images[y]) for y in source.points if images[y] >= 0]
    return all(m in target.members for m in mapped), len(mapped)


def _same_translate(action, g, source: Subspace, target: Subspace) -> tuple[bool, int]:
    forward, count = _maps_into(action.images(g), source, target)
    backward, back_count = _maps_into(action.images(action.inverse(g)), target, source)
    if not action.partial:
        return forward and backward and len(source) == len(target), count
    return forward and backward and count > 0 and back_count > 0, count


def validate_rotation_family(
    action, pairs: Sequence[RotationPair], declared: Mapping[tuple[str, int], int] | None = None, cap: int = DEFAULT_CAP
) -> RotationFamily:
    """Check a rotation family against its action.

    Subspaces must be pairwise distinct, each H_i must preserve Y_i, and for
    each generator g and index i the image index j must satisfy
    g Y_i = Y_j and g H_i g^-1 = H_j (compared as enumerated subgroups).
    Image indices not declared are inferred when exactly one subspace
    matches; on partial actions unmatched translates are recorded as
    unmaterialised instead of failing.
    """
    declared = dict(declared or {})
    family = RotationFamily(list(pairs))
    seen: dict[frozenset[int], str] = {}
    for pair in pairs:
        if pair.subspace.members in seen:
            raise MetricValidationError(f"rotation {pair.label} repeats the subspace of rotation {seen[pair.subspace.members]}")
        seen[pair.subspace.members] = pair.label
        for word in pair.subgroup:
            preserved, _ = _maps_into(action.images(action.element(word)), pair.subspace, pair.subspace)
            if not preserved:
                raise MetricValidationError(f"rotation {pair.label}: {word} does not preserve its subspace")
    subgroups = [{action.key(e.value) for e in enumerate_subgroup(action, p.subgroup, cap)} for p in pairs]
    for name in action.names:
        g = action.element(((name, 1),))
        g_inv = action.inverse(g)
        for i, pair in enumerate(pairs):
            if (name, i) in declared:
                j = declared[(name, i)]
                if not 0 <= j < len(pairs):
                    raise MetricValidationError(f"rotation {pair.label}: image index {j} under {name} out of range")
                if not _same_translate(action, g, pair.subspace, pairs[j].subspace)[0]:
                    raise MetricValidationError(f"rotation {pair.label}: {name} does not map its subspace onto rotation {pairs[j].label}")
                source = "declared"
            else:
                matches = [j for j, other in enumerate(pairs) if _same_translate(action, g, pair.subspace, other.subspace)[0]]
                if len(matches) != 1:
                    if action.partial:
                        family.unmaterialised.append((name, i))
                        continue
                    raise MetricValidationError(
                        f"rotation {pair.label}: image under {name} is {'ambiguous' if matches else 'not in the family'}"
                    )
                j = matches[0]
                source = "inferred"
            for word in pair.subgroup:
                conjugate = action.multiply(g, action.multiply(action.element(word), g_inv))
                if action.key(conjugate) not in subgroups[j]:
                    raise MetricValidationError(f"rotation {pair.label}: {name} {word} {name}^-1 is not in the subgroup of rotation {pairs[j].label}")
            for word in pairs[j].subgroup:
                conjugate = action.multiply(g_inv, action.multiply(action.element(word), g))
                if action.key(conjugate) not in subgroups[i]:
                    raise MetricValidationError(f"rotation {pairs[j].label}: conjugate of {word} by {name}^-1 is not in the subgroup of rotation {pair.label}")
            family.index_action[(name, i)] = j
            family.index_source[(name, i)] = source
    logger.info(f"rotation family validated: {len(pairs)} pairs, {len(family.unmaterialised)} unmaterialised translates")
    return family


@dataclass
class ConeCheck:
    label: str
    strongly_quasiconvex: bool
    witness: tuple[int, int] | None
    rinj: InjectivityRadius
    rinj_on_subspace: float
    scaled_rinj_on_subspace: float
    precondition: bool


@dataclass
class SmallCancellationReport:
    delta: float
    delta_mode: str
    largest_piece: float
    largest_piece_pair: tuple[int, int] | None
    rho: float
    delta_ratio: float | None
    piece_ratio: float | None
    delta0: float
    Delta0: float
    r0: float
    epsilon: float
    cap: int
    passes: bool
    cones: list[ConeCheck]
    rescale_factor: float | None
    local_deltas: list[tuple[int, int, float]]
    local_target: float
    r0_constraint: bool
    unmaterialised: int
    notes: list[str]


def small_cancellation_report(
    X: WeightedGraph,
    action,
    family: RotationFamily,
    delta0: float,
    Delta0: float,
    r0: float,
    epsilon: float,
    cap: int = DEFAULT_CAP,
    radii: int = 8,
    centers: int = 8,
    delta_mode: str = "auto",
    seed: int = 0,
    workers: int = 1,
) -> SmallCancellationReport:
    """Check the hypotheses of the very small cancellation theorem.

    The verdict passes when delta / rho <= delta0, Delta / rho <= Delta0 and
    every Y_i is strongly quasi-convex. On pass, the cone-off of the space
    rescaled by 2 pi sinh r0 / rho is materialised and its four-point delta
    is measured on balls of radius r0 / 9 around base vertices.
    """
    if not r0 > 0 or not epsilon > 0:
        raise ValueError("r0 and epsilon must be positive")
    if delta0 < 0 or Delta0 < 0:
        raise ValueError("delta0 and Delta0 must be non-negative")
    notes: list[str] = [f"group elements enumerated within cap {cap}"]
    mode = resolve_delta_mode(X.n, delta_mode)
    delta = four_point_delta(X, mode=mode, seed=seed, workers=workers)
    piece = largest_piece_detail(family.subspaces, delta)
    cones: list[ConeCheck] = []
    for pair in family.pairs:
        rinj = injectivity_radius_detail(action, pair.subgroup, cap)
        on_subspace = injectivity_radius_detail(action, pair.subgroup, cap, restrict_to=pair.subspace.points)
        convex = is_strongly_quasiconvex(pair.subspace, delta)
        cones.append(ConeCheck(pair.label, convex.holds, convex.witness, rinj, on_subspace.value, math.nan, False))
        if rinj.boundary:
            notes.append(f"rotation {pair.label}: minimal displacement realised on the model boundary")
    rho = min((c.rinj.value for c in cones), default=math.inf)
    if family.unmaterialised:
        notes.append(f"{len(family.unmaterialised)} translates not materialised; Delta over them is unverified")

    bound = 2 * math.pi * math.sinh(r0)
    if rho == 0:
        notes.append("some H_i fixes a point: rho = 0, ratios undefined")
        delta_ratio = piece_ratio = None
        passes = False
        factor = None
    else:
        delta_ratio = 0.0 if math.isinf(rho) else delta / rho
        piece_ratio = 0.0 if math.isinf(rho) else piece.value / rho
        passes = delta_ratio <= delta0 and piece_ratio <= Delta0 and all(c.strongly_quasiconvex for c in cones)
        if math.isinf(rho):
            factor = 1.0
            notes.append("no nontrivial element within the cap: rho = inf, rescaling skipped")
        else:
            factor = bound / rho
    for cone in cones:
        if factor is not None:
            cone.scaled_rinj_on_subspace = cone.rinj_on_subspace * factor
            cone.precondition = cone.scaled_rinj_on_subspace >= bound - SLACK
    notes.append("rinj precondition compared with >= since rescaling maps rho onto 2 pi sinh r0 exactly")

    local: list[tuple[int, int, float]] = []
    if passes and factor is not None:
        scaled = rescale(X, factor)
        subspaces = [Subspace(scaled, p.subspace.members, p.label) for p in family.pairs]
        coneoff = ConeOffSpace(scaled, subspaces, r0, m=radii)
        step = max(1, X.n // max(centers, 1))
        for center in list(range(0, X.n, step))[:centers]:
            ball = local_ball_delta(coneoff, center, r0 / 9)
            local.append((center, ball.points, ball.delta))
    report = SmallCancellationReport(
        delta=delta,
        delta_mode=mode,
        largest_piece=piece.value,
        largest_piece_pair=piece.pair,
        rho=rho,
        delta_ratio=delta_ratio,
        piece_ratio=piece_ratio,
        delta0=delta0,
        Delta0=Delta0,
        r0=r0,
        epsilon=epsilon,
        cap=cap,
        passes=passes,
        cones=cones,
        rescale_factor=factor,
        local_deltas=local,
        local_target=LN3 + epsilon,
        r0_constraint=r0_constraint(r0, epsilon),
        unmaterialised=len(family.unmaterialised),
        notes=notes,
    )
    logger.info(f"small cancellation verdict: {'pass' if passes else 'fail'}", extra={"extra_data": {"delta": delta, "rho": rho}})
    return report
