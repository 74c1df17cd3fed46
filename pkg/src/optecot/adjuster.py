"""Bisection search for the optimal cost and the adjustment budget plan."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

__all__ = [
    "BISECTION_STOP_WIDTH",
    "MIN_SAMPLE_SIZE",
    "WORST_CASE_COST",
    "BisectionResult",
    "BudgetPlan",
    "bisect",
    "budget_plan",
    "population_eval_time",
    "worst_case_bisec_time",
]

BISECTION_STOP_WIDTH = 0.1
#: Result of a bisection that took the upper half at every step.
WORST_CASE_COST = 0.9375
MIN_SAMPLE_SIZE = 10
ADJUSTMENT_SHARE = 0.25


@dataclass
class BisectionResult:
    cost: float
    midpoints_visited: list[float] = field(default_factory=list)
    accuracies: list[float] = field(default_factory=list)
    elapsed_by_query: list[float] = field(default_factory=list)

    @property
    def elapsed(self) -> float:
        return float(sum(self.elapsed_by_query))

    def csv_row(self, call_index: int) -> list:
        return [
            call_index,
            ";".join(repr(m) for m in self.midpoints_visited),
            ";".join(repr(float(a)) for a in self.accuracies),
            repr(self.cost),
            repr(self.elapsed),
        ]


def bisect(accuracy_fn: Callable[[float], tuple[float, float] | float], alpha: float) -> BisectionResult:
    """Halve [0, 1] until it is narrower than 0.1, keeping the half holding c*.

    ``accuracy_fn(c)`` returns the accuracy at cost ``c``, optionally paired
    with the time spent computing it.  The lower half is kept when the
    accuracy exceeds ``alpha``.
    """
    if not (-1.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (-1, 1), got {alpha!r}")
    lower, upper = 0.0, 1.0
    result = BisectionResult(cost=math.nan)
    while upper - lower > BISECTION_STOP_WIDTH:
        mid = (lower + upper) / 2
        out = accuracy_fn(mid)
        acc, elapsed = out if isinstance(out, tuple) else (out, 0.0)
        result.midpoints_visited.append(mid)
        result.accuracies.append(float(acc))
        result.elapsed_by_query.append(float(elapsed))
        if acc > alpha:
            upper = mid
        else:
            lower = mid
        result.cost = mid
    return result


def population_eval_time(pop_size: int, t1: float) -> float:
    """Time to evaluate a whole population with the original objective."""
    if pop_size < 1 or t1 <= 0:
        raise ValueError("pop_size must be >= 1 and t1 > 0")
    return pop_size * t1


def worst_case_bisec_time(sample_size: int, t0: float, t1: float) -> float:
    """Worst-case time of one bisection over a sample of ``sample_size``.

    Charges the sample at cost 1 and at midpoints 0.5, 0.75 and 0.875 using
    linear times; the final midpoint counts as population evaluation.
    """
    if not (0 <= t0 < t1):
        raise ValueError("need 0 <= t0 < t1")
    return sample_size * (0.875 * t0 + 3.125 * t1)


@dataclass(frozen=True)
class BudgetPlan:
    sample_size: int
    period: float
    t_original: float
    t_bisec: float

    @property
    def ratio(self) -> float:
        return self.t_bisec / self.t_original

    @property
    def upper_branch(self) -> bool:
        return self.ratio > ADJUSTMENT_SHARE


def budget_plan(pop_size: int, t0: float, t1: float) -> BudgetPlan:
    """Sample size and adjustment period keeping adjustments within 25% of runtime.

    ``t_bisec`` is reported for the chosen sample size.  In the lower branch
    the sample size is clamped to ``[2, pop_size]``.
    """
    t_original = population_eval_time(pop_size, t1)
    t_bisec = worst_case_bisec_time(MIN_SAMPLE_SIZE, t0, t1)
    if t_bisec / t_original > ADJUSTMENT_SHARE:
        return BudgetPlan(MIN_SAMPLE_SIZE, 4 * t_bisec, t_original, t_bisec)
    size = math.floor(ADJUSTMENT_SHARE * t_original / (0.875 * t0 + 3.125 * t1))
    size = max(2, min(size, pop_size))
    return BudgetPlan(size, t_original, t_original, worst_case_bisec_time(size, t0, t1))
