"""Truncation-selection genetic programming over expression trees.

Trees are nested tuples: ``("add", left, right)`` for operators,
``("x", i)`` for the ``i``-th input and ``("c", value)`` for constants.
"""
from __future__ import annotations

import hashlib
import json
import math
from typing import Sequence

import numpy as np

from ..ranking import argsort_scores

OPERATORS = ("add", "sub", "mul", "div")
CONSTANTS = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0)
_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def depth(tree) -> int:
    if tree[0] in OPERATORS:
        return 1 + max(depth(tree[1]), depth(tree[2]))
    return 0


def size(tree) -> int:
    if tree[0] in OPERATORS:
        return 1 + size(tree[1]) + size(tree[2])
    return 1


def paths(tree, prefix=()):
    """All node paths in pre-order; a path is a tuple of child slots (1 or 2)."""
    yield prefix
    if tree[0] in OPERATORS:
        yield from paths(tree[1], prefix + (1,))
        yield from paths(tree[2], prefix + (2,))


def subtree(tree, path):
    for k in path:
        tree = tree[k]
    return tree


def replace(tree, path, new):
    if not path:
        return new
    k = path[0]
    children = list(tree)
    children[k] = replace(tree[k], path[1:], new)
    return tuple(children)


def evaluate_tree(tree, X: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over the rows of ``X``; division is protected."""
    op = tree[0]
    if op == "x":
        return X[:, tree[1]]
    if op == "c":
        return np.full(X.shape[0], tree[1])
    a = evaluate_tree(tree[1], X)
    b = evaluate_tree(tree[2], X)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    small = np.abs(b) < 1e-6
    return np.where(small, 1.0, a / np.where(small, 1.0, b))


def random_terminal(rng: np.random.Generator, n_features: int):
    if rng.random() < 0.5:
        return ("x", int(rng.integers(n_features)))
    return ("c", CONSTANTS[int(rng.integers(len(CONSTANTS)))])


def random_tree(rng: np.random.Generator, n_features: int, max_depth: int, full: bool):
    """Grow (``full=False``) or full tree of depth at most ``max_depth``."""
    if max_depth == 0 or (not full and rng.random() < 0.3):
        return random_terminal(rng, n_features)
    op = OPERATORS[int(rng.integers(len(OPERATORS)))]
    return (
        op,
        random_tree(rng, n_features, max_depth - 1, full),
        random_tree(rng, n_features, max_depth - 1, full),
    )


def to_string(tree) -> str:
    op = tree[0]
    if op == "x":
        return f"x{tree[1] + 1}"
    if op == "c":
        return repr(tree[1])
    return f"({to_string(tree[1])} {_SYMBOLS[op]} {to_string(tree[2])})"


class GeneticProgramming:
    """Generational GP: keep the top ``truncation`` fraction as parents.

    Offspring come from subtree crossover (probability ``p_crossover``) or
    subtree mutation of uniformly drawn parents; the best ``elitism`` trees
    pass unchanged.
    """

    def __init__(
        self,
        n_features: int,
        pop_size: int,
        seed: int = 0,
        max_depth: int = 8,
        init_depth: tuple[int, int] = (2, 6),
        truncation: float = 0.5,
        p_crossover: float = 0.9,
        elitism: int = 1,
        mutation_depth: int = 3,
    ) -> None:
        if pop_size < 2 or n_features < 1:
            raise ValueError("need pop_size >= 2 and n_features >= 1")
        if not (0 < truncation <= 1):
            raise ValueError("truncation must lie in (0, 1]")
        self.n_features = n_features
        self.pop_size = pop_size
        self.max_depth = max_depth
        self.init_depth = init_depth
        self.truncation = truncation
        self.p_crossover = p_crossover
        self.elitism = min(elitism, pop_size)
        self.mutation_depth = mutation_depth
        self.rng = np.random.default_rng(seed)
        self.generation = 0
        self.population = self._ramped_half_and_half()

    def _random_tree(self, max_depth: int, full: bool):
        return random_tree(self.rng, self.n_features, max_depth, full)

    def _ramped_half_and_half(self) -> list:
        lo, hi = self.init_depth
        depths = list(range(lo, hi + 1))
        return [
            self._random_tree(depths[i % len(depths)], full=(i // len(depths)) % 2 == 0)
            for i in range(self.pop_size)
        ]

    def _random_path(self, tree):
        all_paths = list(paths(tree))
        return all_paths[int(self.rng.integers(len(all_paths)))]

    def _crossover(self, a, b):
        for _ in range(10):
            child = replace(a, self._random_path(a), subtree(b, self._random_path(b)))
            if depth(child) <= self.max_depth:
                return child
        return a

    def _mutate(self, a):
        for _ in range(10):
            child = replace(a, self._random_path(a), self._random_tree(self.mutation_depth, full=False))
            if depth(child) <= self.max_depth:
                return child
        return a

    def ask(self) -> list:
        return list(self.population)

    def tell(self, scores: Sequence[float]) -> None:
        if len(scores) != self.pop_size:
            raise ValueError(f"expected {self.pop_size} scores, got {len(scores)}")
        order = argsort_scores(scores, "maximize")
        n_parents = max(1, math.ceil(self.truncation * self.pop_size))
        parents = [self.population[i] for i in order[:n_parents]]
        nxt = [self.population[i] for i in order[: self.elitism]]
        while len(nxt) < self.pop_size:
            if self.rng.random() < self.p_crossover:
                i, j = self.rng.integers(n_parents, size=2)
                nxt.append(self._crossover(parents[int(i)], parents[int(j)]))
            else:
                nxt.append(self._mutate(parents[int(self.rng.integers(n_parents))]))
        self.population = nxt
        self.generation += 1

    def digest(self) -> str:
        h = hashlib.sha256(repr(self.population).encode())
        h.update(json.dumps(self.rng.bit_generator.state, sort_keys=True, default=str).encode())
        h.update(str(self.generation).encode())
        return h.hexdigest()
