"""Symbolic regression scored by mean absolute error on a point subset."""
from __future__ import annotations

import csv
import io

import numpy as np

from ..cost import CostIndexedProblem, ParameterMap
from ..engines.gp import evaluate_tree, random_tree


def ground_truth(X: np.ndarray) -> np.ndarray:
    x1, x2 = X[:, 0], X[:, 1]
    return x1 * x1 - x1 * x2 + 0.5 * x2 - 1.0


class SymbolicRegression(CostIndexedProblem):
    """Score is ``-MAE`` of a tree over the first ``theta`` points.

    Points are a seed-shuffled dataset of 50 samples of a fixed surface plus
    small Gaussian noise; ``theta`` ranges over 5..50 and each point costs one
    time unit.
    """

    representation = "expression_tree"
    time_unit = "points"

    def __init__(
        self,
        n_points: int = 50,
        noise: float = 0.05,
        seed: int = 0,
        theta0: int = 5,
        X: np.ndarray | None = None,
        y: np.ndarray | None = None,
    ) -> None:
        self.name = "symreg"
        self.seed = seed
        self.noise = noise
        if X is None:
            rng = np.random.default_rng(seed)
            X = rng.uniform(-1.0, 1.0, size=(n_points, 2))
            y = ground_truth(X) + rng.normal(0.0, noise, size=n_points)
            order = rng.permutation(n_points)
            X, y = X[order], y[order]
        elif y is None:
            raise ValueError("y is required when X is given")
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.dimension = self.X.shape[1]
        self.bounds = None
        self.parameter_map = ParameterMap(theta0, len(self.y), integer_valued=True)

    def sample(self, rng):
        return random_tree(rng, self.dimension, int(rng.integers(2, 7)), full=bool(rng.random() < 0.5))

    def evaluate(self, tree, theta, seed=0):
        theta = int(theta)
        lo, hi = self.parameter_map.bounds
        if not (lo <= theta <= hi):
            raise ValueError(f"theta must lie in [{lo}, {hi}], got {theta}")
        pred = evaluate_tree(tree, self.X[:theta])
        err = float(np.mean(np.abs(pred - self.y[:theta])))
        if not np.isfinite(err):
            err = 1e12
        return -err, float(theta)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(self.dimension)] + ["y"])
        for row, target in zip(self.X, self.y):
            w.writerow([repr(float(v)) for v in row] + [repr(float(target))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, theta0: int = 5) -> "SymbolicRegression":
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        return cls(X=data[:, :-1], y=data[:, -1], theta0=theta0)

    def params(self):
        return {"n_points": len(self.y), "noise": self.noise, "seed": self.seed}
