"""Finite model of F(a, b) acting on its Cayley graph: the ball of radius R.

Ball vertices are reduced words of length <= R, indexed breadth-first with
letters tried in the order a, a^-1, b, b^-1. Group elements act by left
multiplication; an image is defined only when it stays inside the ball.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from sympy.combinatorics.free_groups import free_group

from backend.tools.group_actions import Word, format_word, parse_word
from backend.tools.metric_core import WeightedGraph

GENERATORS = ("a", "b")
_GROUP, _A, _B = free_group("a, b")
_SYMBOLS = {"a": _A, "b": _B}
_LETTER_ORDER = (1, -1, 2, -2)


def to_element(word: Word | str):
    """sympy free-group element of a word in ``a``, ``b``."""
    if isinstance(word, str):
        word = parse_word(word, GENERATORS)
    element = _GROUP.identity
    for name, power in word:
        element = element * _SYMBOLS[name] ** power
    return element


def to_word(element) -> Word:
    return tuple((str(symbol), int(power)) for symbol, power in element.array_form)


def letters(element) -> tuple[int, ...]:
    """Letter sequence with a -> 1, b -> 2 and inverses negated."""
    out: list[int] = []
    for symbol, power in element.array_form:
        letter = GENERATORS.index(str(symbol)) + 1
        out.extend([letter if power > 0 else -letter] * abs(power))
    return tuple(out)


def is_cyclically_reduced(word: Word | str) -> bool:
    element = to_element(word)
    return element.is_cyclically_reduced() and element != _GROUP.identity


def _product(left: tuple[int, ...], right: tuple[int, ...]) -> tuple[int, ...]:
    k = 0
    while k < len(left) and k < len(right) and left[-1 - k] == -right[k]:
        k += 1
    return left[:len(left) - k] + right[k:]


def _cancellation(left: tuple[int, ...], right: tuple[int, ...]) -> int:
    k = 0
    while k < len(left) and k < len(right) and left[-1 - k] == -right[k]:
        k += 1
    return k


class FreeGroupBallAction:
    """Left multiplication of F(a, b) on its Cayley ball of radius ``radius``."""

    partial = True
    names = GENERATORS

    def __init__(self, radius: int):
        if radius < 1:
            raise ValueError(f"ball radius must be at least 1, got {radius}")
        self.radius = int(radius)
        points: list[tuple[int, ...]] = [()]
        frontier = [()]
        for _ in range(self.radius):
            grown = []
            for word in frontier:
                for letter in _LETTER_ORDER:
                    if word and word[-1] == -letter:
                        continue
                    grown.append(word + (letter,))
            points.extend(grown)
            frontier = grown
        self.points: tuple[tuple[int, ...], ...] = tuple(points)
        self.index = {word: k for k, word in enumerate(self.points)}
        self.identity = _GROUP.identity
        self._images: dict[tuple[int, ...], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def graph(self) -> WeightedGraph:
        edges = [(self.index[word[:-1]], k, 1.0) for k, word in enumerate(self.points) if word]
        return WeightedGraph(len(self.points), edges)

    @property
    def space(self):
        return self.graph.metric

    def point(self, word: Word | str) -> int:
        key = letters(to_element(word))
        if key not in self.index:
            raise ValueError(f"{format_word(to_word(to_element(word)))} lies outside the ball of radius {self.radius}")
        return self.index[key]

    def label(self, index: int) -> str:
        names = {1: "a", -1: "a^-1", 2: "b", -2: "b^-1"}
        return "".join(names[letter] for letter in self.points[index]) or "1"

    def element(self, word: Word | str):
        return to_element(word)

    def multiply(self, g, h):
        return g * h

    def inverse(self, g):
        return g ** -1

    def key(self, g):
        return g

    def is_identity(self, g) -> bool:
        return g == self.identity

    def images(self, g) -> np.ndarray:
        """Index of g x for every ball point x, or -1 when g x leaves the ball."""
        word = letters(g)
        cached = self._images.get(word)
        if cached is not None:
            return cached
        out = np.full(len(self.points), -1, dtype=np.intp)
        if len(word) <= 2 * self.radius:
            for k, x in enumerate(self.points):
                if len(word) + len(x) - 2 * _cancellation(word, x) <= self.radius:
                    out[k] = self.index[_product(word, x)]
        out.setflags(write=False)
        self._images[word] = out
        return out

    def on_boundary(self, x: int) -> bool:
        return len(self.points[x]) == self.radius

    def axis(self, relator: Word | str, reach: int | None = None) -> list[tuple[int, ...]]:
        """Letter sequences of the axis of a cyclically reduced relator through 1.

        Only axis points of length <= ``reach`` (default: the ball radius) are returned.
        """
        element = to_element(relator)
        if not is_cyclically_reduced(to_word(element)):
            raise ValueError(f"relator {format_word(to_word(element))} is not cyclically reduced")
        reach = self.radius if reach is None else reach
        forward = letters(element)
        backward = letters(element ** -1)
        repeats = reach // len(forward) + 1
        line = {()}
        for direction in (forward, backward):
            ray = direction * repeats
            line.update(ray[:j] for j in range(1, min(len(ray), reach) + 1))
        return sorted(line, key=lambda w: (len(w), w))

    def translate(self, g, axis_points: list[tuple[int, ...]]) -> frozenset[int]:
        """Ball indices of g applied to the given letter sequences."""
        word = letters(g)
        found = set()
        for p in axis_points:
            image = _product(word, p)
            if image in self.index:
                found.add(self.index[image])
        return frozenset(found)
