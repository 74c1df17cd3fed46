"""Cost abstraction: normalized cost -> parameter value -> evaluation time.

A cost ``c`` in [0, 1] indexes a parameter ``theta`` of an expensive objective.
``ParameterMap`` turns a cost into a parameter value, ``CalibrationTable``
stores the measured mean evaluation time at a grid of costs and interpolates
between them.
"""
from __future__ import annotations

import bisect as _bisect
import csv
import io
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "DEFAULT_GRID",
    "MONOTONE_TOLERANCE",
    "CalibrationError",
    "CalibrationRow",
    "CalibrationTable",
    "CostIndexedProblem",
    "FunctionProblem",
    "ParameterMap",
    "accuracy_for_cost",
    "calibrate",
    "cost_for_time",
    "param_for_cost",
    "time_for_cost",
    "with_wall_clock",
]

#: Ten equidistant costs {0, 0.11, ..., 1}.
DEFAULT_GRID: tuple[float, ...] = tuple(i / 9 for i in range(10))

#: Adjacent calibrated mean times may regress by at most this fraction of t_1.
MONOTONE_TOLERANCE = 0.01


class CalibrationError(ValueError):
    """Measured evaluation times are not monotone in the cost."""


def _check_cost(c: float) -> float:
    c = float(c)
    if not (0.0 <= c <= 1.0):
        raise ValueError(f"cost must lie in [0, 1], got {c!r}")
    return c


@dataclass(frozen=True)
class ParameterMap:
    """Linear-accuracy map between cost and a cost-indexed parameter.

    ``theta0`` is the cheapest parameter value and ``theta1`` the original one.
    """

    theta0: float
    theta1: float
    integer_valued: bool = False

    def __post_init__(self) -> None:
        if self.theta0 == self.theta1:
            raise ValueError("theta0 and theta1 must differ")
        if self.theta0 <= 0 or self.theta1 <= 0:
            raise ValueError("parameter values must be positive")
        if self.integer_valued:
            for v in (self.theta0, self.theta1):
                if v != int(v) or v < 1:
                    raise ValueError(f"integer parameter values must be integers >= 1, got {v!r}")

    @property
    def direction(self) -> str:
        return "theta1_greater" if self.theta1 > self.theta0 else "theta1_smaller"

    @property
    def lowest_accuracy(self) -> float:
        if self.theta1 > self.theta0:
            return self.theta0 / self.theta1
        return self.theta1 / self.theta0

    @property
    def bounds(self) -> tuple[float, float]:
        return min(self.theta0, self.theta1), max(self.theta0, self.theta1)


def accuracy_for_cost(pmap: ParameterMap, c: float) -> float:
    """Parameter accuracy ``a_c = a_0 + c (1 - a_0)``."""
    c = _check_cost(c)
    a0 = pmap.lowest_accuracy
    return a0 + c * (1.0 - a0)


def param_for_cost(pmap: ParameterMap, c: float) -> float | int:
    """Parameter value used by the approximation of cost ``c``.

    Endpoints are returned verbatim so that ``c=0`` gives ``theta0`` and
    ``c=1`` gives ``theta1`` without floating-point drift.  Integer parameters
    are rounded half-up and clamped to the parameter range.
    """
    c = _check_cost(c)
    if c == 0.0:
        theta = float(pmap.theta0)
    elif c == 1.0:
        theta = float(pmap.theta1)
    else:
        a = accuracy_for_cost(pmap, c)
        theta = pmap.theta1 * a if pmap.theta1 > pmap.theta0 else pmap.theta1 / a
    if pmap.integer_valued:
        lo, hi = pmap.bounds
        return int(min(max(math.floor(theta + 0.5), lo), hi))
    return theta


@dataclass(frozen=True)
class CalibrationRow:
    cost: float
    theta: float
    mean_time: float


@dataclass(frozen=True)
class CalibrationTable:
    """Measured mean evaluation time at a grid of costs.

    Costs run strictly upward from 0 to 1 and so do the mean times.
    """

    rows: tuple[CalibrationRow, ...]
    time_unit: str = "units"

    def __post_init__(self) -> None:
        rows = tuple(r if isinstance(r, CalibrationRow) else CalibrationRow(*r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        if len(rows) < 2:
            raise ValueError("a calibration table needs at least 2 rows")
        costs = [r.cost for r in rows]
        times = [r.mean_time for r in rows]
        if costs[0] != 0.0 or costs[-1] != 1.0:
            raise ValueError("calibration costs must start at 0 and end at 1")
        if any(b <= a for a, b in zip(costs, costs[1:])):
            raise ValueError("calibration costs must be strictly increasing")
        if times[0] <= 0:
            raise ValueError("mean times must be positive")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("mean times must be strictly increasing with cost")

    @property
    def costs(self) -> list[float]:
        return [r.cost for r in self.rows]

    @property
    def times(self) -> list[float]:
        return [r.mean_time for r in self.rows]

    @property
    def t0(self) -> float:
        return self.rows[0].mean_time

    @property
    def t1(self) -> float:
        return self.rows[-1].mean_time

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cost", "theta", "mean_time", "time_unit"])
        for r in self.rows:
            w.writerow([repr(float(r.cost)), repr(r.theta), repr(float(r.mean_time)), self.time_unit])
        return buf.getvalue()

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "CalibrationTable":
        reader = csv.DictReader(io.StringIO(text))
        rows, unit = [], "units"
        for rec in reader:
            theta = float(rec["theta"])
            if theta.is_integer() and "." not in rec["theta"] and "e" not in rec["theta"].lower():
                theta = int(theta)
            rows.append(CalibrationRow(float(rec["cost"]), theta, float(rec["mean_time"])))
            unit = rec.get("time_unit") or unit
        return cls(tuple(rows), unit)

    @classmethod
    def load(cls, path: str | Path) -> "CalibrationTable":
        return cls.from_csv(Path(path).read_text())


def cost_for_time(table: CalibrationTable, t: float) -> float:
    """Piecewise-linear interpolation of the cost whose mean time is ``t``."""
    times, costs = table.times, table.costs
    if not (times[0] <= t <= times[-1]):
        raise ValueError(f"time {t!r} outside calibrated range [{times[0]}, {times[-1]}]")
    j = _bisect.bisect_left(times, t)
    if times[j] == t:
        return costs[j]
    lo, hi = j - 1, j
    return costs[lo] + (costs[hi] - costs[lo]) / (times[hi] - times[lo]) * (t - times[lo])


def time_for_cost(table: CalibrationTable, c: float) -> float:
    """Piecewise-linear mean evaluation time at cost ``c``."""
    c = _check_cost(c)
    times, costs = table.times, table.costs
    j = _bisect.bisect_left(costs, c)
    if costs[j] == c:
        return times[j]
    lo, hi = j - 1, j
    return times[lo] + (times[hi] - times[lo]) / (costs[hi] - costs[lo]) * (c - costs[lo])


class CostIndexedProblem:
    """Black-box objective ``f(x; theta)`` with a cost-indexed parameter.

    Subclasses implement :meth:`sample` and :meth:`evaluate`.  ``evaluate``
    returns ``(score, elapsed)`` where ``elapsed`` is in ``time_unit`` and must
    be deterministic given ``(solution, theta, seed)``.
    """

    name: str = "problem"
    direction: str = "maximize"
    representation: str = "real_vector"
    time_unit: str = "units"
    parameter_map: ParameterMap
    dimension: int = 0
    bounds: tuple[float, float] | None = None

    def sample(self, rng: np.random.Generator) -> Any:
        raise NotImplementedError

    def evaluate(self, solution: Any, theta: float, seed: int = 0) -> tuple[float, float]:
        raise NotImplementedError

    def sample_solutions(self, n: int, seed: int) -> list[Any]:
        rng = np.random.default_rng(seed)
        return [self.sample(rng) for _ in range(n)]

    def theta(self, c: float) -> float | int:
        return param_for_cost(self.parameter_map, c)

    def fitness(self, score: float) -> float:
        """Score oriented so that higher is better."""
        return score if self.direction == "maximize" else -score

    def params(self) -> dict[str, Any]:
        """Instance parameters recorded in run provenance."""
        return {}


class FunctionProblem(CostIndexedProblem):
    """Problem assembled from plain callables; handy for scripted tests."""

    def __init__(
        self,
        name: str,
        sampler: Callable[[np.random.Generator], Any],
        evaluator: Callable[[Any, float, int], tuple[float, float]],
        parameter_map: ParameterMap,
        direction: str = "maximize",
        dimension: int = 0,
        bounds: tuple[float, float] | None = None,
        time_unit: str = "units",
    ) -> None:
        if direction not in ("maximize", "minimize"):
            raise ValueError(f"unknown direction {direction!r}")
        self.name = name
        self._sampler = sampler
        self._evaluator = evaluator
        self.parameter_map = parameter_map
        self.direction = direction
        self.dimension = dimension
        self.bounds = bounds
        self.time_unit = time_unit

    def sample(self, rng):
        return self._sampler(rng)

    def evaluate(self, solution, theta, seed=0):
        return self._evaluator(solution, theta, seed)


class _WallClockProblem(CostIndexedProblem):
    def __init__(self, inner: CostIndexedProblem, clock: Callable[[], float]) -> None:
        self.inner = inner
        self.clock = clock
        self.name = inner.name
        self.direction = inner.direction
        self.representation = inner.representation
        self.parameter_map = inner.parameter_map
        self.dimension = inner.dimension
        self.bounds = inner.bounds
        self.time_unit = "seconds"

    def sample(self, rng):
        return self.inner.sample(rng)

    def evaluate(self, solution, theta, seed=0):
        start = self.clock()
        score, _ = self.inner.evaluate(solution, theta, seed)
        return score, self.clock() - start

    def params(self):
        return self.inner.params()


def with_wall_clock(problem: CostIndexedProblem, clock: Callable[[], float] = time.perf_counter) -> CostIndexedProblem:
    """Replace the problem's proxy time by time measured with ``clock``."""
    return _WallClockProblem(problem, clock)


def calibrate(
    problem: CostIndexedProblem,
    n_solutions: int = 100,
    grid: Sequence[float] = DEFAULT_GRID,
    seed: int = 0,
    tolerance: float = MONOTONE_TOLERANCE,
) -> CalibrationTable:
    """Measure the mean evaluation time at every grid cost.

    The same ``n_solutions`` random solutions are evaluated at every cost.
    Raises :class:`CalibrationError` when a mean time drops below its
    predecessor by more than ``tolerance * t_1``.
    """
    if n_solutions < 1:
        raise ValueError("n_solutions must be >= 1")
    grid = sorted(_check_cost(c) for c in grid)
    if grid[0] != 0.0 or grid[-1] != 1.0:
        raise ValueError("calibration grid must contain 0 and 1")
    solutions = problem.sample_solutions(n_solutions, seed)
    means = []
    for c in grid:
        theta = problem.theta(c)
        total = 0.0
        for x in solutions:
            _, elapsed = problem.evaluate(x, theta, seed)
            total += elapsed
        means.append(total / n_solutions)
    slack = tolerance * means[-1]
    for i in range(1, len(means)):
        if means[i] < means[i - 1] - slack:
            raise CalibrationError(
                f"mean time at cost {grid[i]:.4f} ({means[i]:.6g}) is below cost "
                f"{grid[i - 1]:.4f} ({means[i - 1]:.6g}); parameter is not a suitable candidate"
            )
    # Regressions within tolerance (timer noise) are flattened to keep the table invertible.
    for i in range(1, len(means)):
        if means[i] <= means[i - 1]:
            means[i] = float(np.nextafter(means[i - 1], np.inf))
    rows = tuple(CalibrationRow(c, problem.theta(c), m) for c, m in zip(grid, means))
    return CalibrationTable(rows, problem.time_unit)
