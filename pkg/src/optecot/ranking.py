"""Rankings, Spearman accuracy of approximations and ranking-distance diagnostics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .cost import CostIndexedProblem

__all__ = [
    "AccuracyResult",
    "accuracy",
    "argsort_scores",
    "average_ranks",
    "distance_matrix_csv",
    "positions",
    "ranking_distance_matrix",
    "spearman",
    "spearman_scores",
]


def argsort_scores(scores: Sequence[float], direction: str = "maximize") -> tuple[int, ...]:
    """Indexes of ``scores`` ordered best first.

    Ties keep ascending original index.
    """
    if len(scores) == 0:
        raise ValueError("cannot rank an empty score list")
    vals = [float(s) for s in scores]
    for i, v in enumerate(vals):
        if math.isnan(v):
            raise ValueError(f"score at index {i} is NaN")
    if direction == "maximize":
        return tuple(sorted(range(len(vals)), key=lambda i: -vals[i]))
    if direction == "minimize":
        return tuple(sorted(range(len(vals)), key=lambda i: vals[i]))
    raise ValueError(f"unknown direction {direction!r}")


def positions(order: Sequence[int]) -> list[int]:
    """Inverse permutation: ``positions(order)[i]`` is the position of solution ``i``."""
    pos = [-1] * len(order)
    for k, i in enumerate(order):
        pos[i] = k
    if -1 in pos:
        raise ValueError("ranking is not a permutation of 0..n-1")
    return pos


def spearman(a: Sequence[int], b: Sequence[int]) -> float:
    """Spearman correlation between two rankings (permutations of 0..n-1)."""
    n = len(a)
    if n != len(b):
        raise ValueError(f"ranking lengths differ: {n} != {len(b)}")
    if n < 2:
        raise ValueError("spearman needs at least 2 elements")
    pa, pb = positions(a), positions(b)
    d2 = sum((x - y) ** 2 for x, y in zip(pa, pb))
    denom = n * (n * n - 1)
    return (denom - 6 * d2) / denom


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """Ascending ranks starting at 0; tied values share their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=float)
    sv = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0
        i = j + 1
    return ranks


def spearman_scores(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation of two score vectors, ties given average ranks.

    When either vector is constant the correlation is undefined; it is 1 if the
    two rank vectors coincide and 0 otherwise.
    """
    if len(x) != len(y):
        raise ValueError(f"score lengths differ: {len(x)} != {len(y)}")
    n = len(x)
    if n < 2:
        raise ValueError("spearman needs at least 2 elements")
    for name, arr in (("x", x), ("y", y)):
        for i, v in enumerate(arr):
            if math.isnan(v):
                raise ValueError(f"score {name}[{i}] is NaN")
    rx, ry = average_ranks(x), average_ranks(y)
    if np.array_equal(rx, ry):
        return 1.0
    if len(set(rx.tolist())) == n and len(set(ry.tolist())) == n:
        d2 = int(round(float(np.sum((rx - ry) ** 2))))
        denom = n * (n * n - 1)
        return (denom - 6 * d2) / denom
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return 0.0
    return float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))


@dataclass(frozen=True)
class AccuracyResult:
    value: float
    scores_c: list[float]
    scores_1: list[float]
    elapsed_c: float
    elapsed_1: float


def _evaluate_all(problem: CostIndexedProblem, solutions: Sequence[Any], theta, seed: int):
    scores, total = [], 0.0
    for i, x in enumerate(solutions):
        try:
            s, t = problem.evaluate(x, theta, seed)
        except Exception as exc:
            raise RuntimeError(f"evaluation of solution {i} at theta={theta!r} failed: {exc}") from exc
        scores.append(float(s))
        total += t
    return scores, total


def accuracy(problem: CostIndexedProblem, sample: Sequence[Any], c: float, seed: int = 0) -> AccuracyResult:
    """Spearman accuracy of the cost-``c`` approximation over ``sample``."""
    if len(sample) < 2:
        raise ValueError("accuracy needs a sample of at least 2 solutions")
    scores_c, t_c = _evaluate_all(problem, sample, problem.theta(c), seed)
    if c == 1.0:
        scores_1, t_1 = list(scores_c), t_c
    else:
        scores_1, t_1 = _evaluate_all(problem, sample, problem.theta(1.0), seed)
    value = spearman_scores(scores_c, scores_1)
    return AccuracyResult(value, scores_c, scores_1, t_c, t_1)


def ranking_distance_matrix(
    problem: CostIndexedProblem,
    solutions: Sequence[Any],
    grid: Sequence[float],
    seed: int = 0,
) -> np.ndarray:
    """Normalized position displacement of each solution under each cost.

    Entry ``(i, j)`` is ``|pos_c(i) - pos_1(i)| / (n - 1)`` for ``c = grid[j]``.
    """
    n = len(solutions)
    if n < 2:
        raise ValueError("need at least 2 solutions")
    scores_1, _ = _evaluate_all(problem, solutions, problem.theta(1.0), seed)
    pos_1 = positions(argsort_scores(scores_1, problem.direction))
    out = np.zeros((n, len(grid)))
    for j, c in enumerate(grid):
        if c == 1.0:
            continue
        scores_c, _ = _evaluate_all(problem, solutions, problem.theta(c), seed)
        pos_c = positions(argsort_scores(scores_c, problem.direction))
        out[:, j] = [abs(pc - p1) / (n - 1) for pc, p1 in zip(pos_c, pos_1)]
    return out


def distance_matrix_csv(matrix: np.ndarray, grid: Sequence[float]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["solution_index", "cost", "normalized_distance"])
    for i in range(matrix.shape[0]):
        for j, c in enumerate(grid):
            w.writerow([i, repr(float(c)), repr(float(matrix[i, j]))])
    return buf.getvalue()
