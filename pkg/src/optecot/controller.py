"""Optimal evaluation cost tracking around a rank-based evolutionary engine."""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .adjuster import WORST_CASE_COST, BisectionResult, BudgetPlan, bisect, budget_plan
from .cost import CalibrationTable, CostIndexedProblem
from .ranking import spearman_scores

__all__ = [
    "ControllerState",
    "OptecotConfig",
    "OptecotController",
    "RunAborted",
    "RunResult",
    "RunTrace",
    "TraceRecord",
    "confidence_interval",
    "run",
    "should_readjust",
]


@dataclass(frozen=True)
class OptecotConfig:
    """Controller settings.

    ``sample_size`` and ``period`` default to the budget plan derived from the
    calibration table.  ``pin_cost`` fixes the cost for the whole run and
    disables adjustment; ``pin_cost=1`` reproduces the bare engine.
    """

    t_max: float
    alpha: float = 0.95
    beta: int = 5
    kappa: int = 3
    sample_size: int | None = None
    period: float | None = None
    seed: int = 0
    pin_cost: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 1.0):
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta < 1 or self.kappa < 1:
            raise ValueError("beta and kappa must be >= 1")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.sample_size is not None and self.sample_size < 2:
            raise ValueError("sample_size must be >= 2")
        if self.period is not None and not self.period > 0:
            raise ValueError("period must be positive")
        if self.pin_cost is not None and not (0.0 <= self.pin_cost <= 1.0):
            raise ValueError("pin_cost must lie in [0, 1]")


@dataclass
class ControllerState:
    current_cost: float = 1.0
    variances: list[float] = field(default_factory=list)
    bisection_count: int = 0
    elapsed: float = 0.0
    bisection_results: list[float] = field(default_factory=list)
    frozen: bool = False
    bisection_time: float = 0.0
    started: bool = False

    @property
    def consecutive_ceiling(self) -> int:
        n = 0
        for c in reversed(self.bisection_results):
            if c != WORST_CASE_COST:
                break
            n += 1
        return n


def confidence_interval(variances: Sequence[float]) -> tuple[float, float]:
    """``mean +/- 2 std`` of the given variances (population std).

    Mean and variance are computed exactly in rationals, then rounded once.
    """
    n = len(variances)
    if n == 0:
        raise ValueError("confidence interval of an empty variance set")
    if any(v < 0 for v in variances):
        raise ValueError("variances must be non-negative")
    xs = [Fraction(float(v)) for v in variances]
    mean = sum(xs) / n
    std = math.sqrt(float(sum((x - mean) ** 2 for x in xs) / n))
    return float(mean) - 2 * std, float(mean) + 2 * std


def should_readjust(
    state: ControllerState, config: OptecotConfig, new_variance: float | None = None, period: float | None = None
) -> bool:
    """Whether the newest variance left the interval of the previous ``beta``.

    ``new_variance`` defaults to the last entry of ``state.variances``; when
    given it is treated as appended to the history.  The interval is closed.
    Readjustment also needs ``B < floor(elapsed / period)`` and no freeze.
    """
    history = list(state.variances) if new_variance is None else [*state.variances, new_variance]
    if len(history) < config.beta + 1:
        raise ValueError(f"need {config.beta + 1} variances before checking, have {len(history)}")
    period = config.period if period is None else period
    if period is None:
        raise ValueError("adjustment period is not set")
    if state.frozen:
        return False
    low, high = confidence_interval(history[-config.beta - 1 : -1])
    v = history[-1]
    outside = v < low or v > high
    return outside and state.bisection_count < math.floor(state.elapsed / period)


@dataclass
class TraceRecord:
    iteration: int
    elapsed: float
    cost: float
    variance: float
    best_score: float
    readjusted: bool
    frozen: bool = False
    bisection_time: float = 0.0
    bisection: BisectionResult | None = None


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "elapsed", "cost", "variance", "best_score", "readjusted"])
        for r in self.records:
            w.writerow(
                [r.iteration, repr(float(r.elapsed)), repr(float(r.cost)), repr(float(r.variance)),
                 repr(float(r.best_score)), int(r.readjusted)]
            )
        return buf.getvalue()

    def bisections_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["call_index", "midpoints", "accuracies", "result_cost", "elapsed"])
        k = 0
        for r in self.records:
            if r.bisection is not None:
                w.writerow(r.bisection.csv_row(k))
                k += 1
        return buf.getvalue()

    def sidecar(self) -> str:
        doc = dict(self.provenance)
        doc["bisections"] = [
            {"iteration": r.iteration, **asdict(r.bisection)} for r in self.records if r.bisection is not None
        ]
        doc["freeze_iteration"] = next((r.iteration for r in self.records if r.frozen), None)
        return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


class OptecotController:
    """Chooses the evaluation cost of each population and evaluates it.

    The first call bisects on a sample of the first population.  Later calls
    may freeze the cost at 1 (after ``kappa`` consecutive worst-case
    bisections) or re-bisect when the score variance drifts.  Sample scores at
    the final midpoint are reused for the population evaluation.
    """

    def __init__(
        self,
        problem: CostIndexedProblem,
        table: CalibrationTable | None,
        config: OptecotConfig,
    ) -> None:
        self.problem = problem
        self.table = table
        self.config = config
        self.state = ControllerState()
        self.rng = np.random.default_rng([config.seed, 0x0C7])
        self.plan: BudgetPlan | None = None
        self.sample_size = config.sample_size
        self.period = config.period
        if config.pin_cost is not None:
            self.state.current_cost = float(config.pin_cost)
            self.state.frozen = config.pin_cost == 1.0
            self.state.started = True
        elif table is None:
            raise ValueError("a calibration table is required unless the cost is pinned")

    @property
    def pinned(self) -> bool:
        return self.config.pin_cost is not None

    def _resolve_budget(self, pop_size: int) -> None:
        if self.plan is not None or self.table is None:
            return
        self.plan = budget_plan(pop_size, self.table.t0, self.table.t1)
        if self.sample_size is None:
            self.sample_size = self.plan.sample_size
        if self.period is None:
            self.period = self.plan.period

    def _evaluate(self, population, indexes, theta, cache) -> tuple[list[float], float]:
        scores, spent = [], 0.0
        for i in indexes:
            key = (i, theta)
            if key not in cache:
                try:
                    cache[key] = self.problem.evaluate(population[i], theta, self.config.seed)
                except Exception as exc:
                    raise RuntimeError(
                        f"evaluation of population member {i} at theta={theta!r} failed: {exc}"
                    ) from exc
                spent += cache[key][1]
            scores.append(float(cache[key][0]))
        return scores, spent

    def _bisect(self, population, cache) -> tuple[BisectionResult, float, float]:
        """Run one bisection; returns the result, total charged time and overhead time."""
        n = len(population)
        size = min(self.sample_size, n)
        sample = sorted(int(i) for i in self.rng.choice(n, size=size, replace=False))
        ref, t_ref = self._evaluate(population, sample, self.problem.theta(1.0), cache)

        def accuracy_fn(c: float):
            scores, spent = self._evaluate(population, sample, self.problem.theta(c), cache)
            return spearman_scores(scores, ref), spent

        result = bisect(accuracy_fn, self.config.alpha)
        overhead = t_ref + sum(result.elapsed_by_query[:-1])
        return result, t_ref + result.elapsed, overhead

    def step(self, population: Sequence[Any]) -> tuple[list[float], TraceRecord]:
        """Evaluate one population at the tracked cost and update the state."""
        if len(population) == 0:
            raise ValueError("empty population")
        st, cfg = self.state, self.config
        self._resolve_budget(len(population))
        cache: dict = {}
        bis, charged, overhead = None, 0.0, 0.0
        if not st.started:
            bis, charged, overhead = self._bisect(population, cache)
            st.started = True
        elif not st.frozen and not self.pinned and len(st.variances) > cfg.beta:
            if st.consecutive_ceiling >= cfg.kappa:
                st.current_cost = 1.0
                st.frozen = True
            elif should_readjust(st, cfg, period=self.period):
                bis, charged, overhead = self._bisect(population, cache)
        if bis is not None:
            st.current_cost = bis.cost
            st.bisection_count += 1
            st.bisection_results.append(bis.cost)
        theta = self.problem.theta(st.current_cost)
        scores, spent = self._evaluate(population, range(len(population)), theta, cache)
        variance = float(np.var(scores))
        st.variances.append(variance)
        st.bisection_time += overhead
        st.elapsed += charged + spent
        record = TraceRecord(
            iteration=len(st.variances) - 1,
            elapsed=st.elapsed,
            cost=st.current_cost,
            variance=variance,
            best_score=math.nan,
            readjusted=bis is not None,
            frozen=st.frozen,
            bisection_time=st.bisection_time,
            bisection=bis,
        )
        return scores, record


@dataclass
class RunResult:
    best_solution: Any
    best_score: float
    trace: RunTrace
    #: Per record: (incumbent solution, its recorded score, cost it was scored at).
    incumbents: list[tuple[Any, float, float]] = field(default_factory=list)
    populations: list[list[Any]] | None = None
    scores: list[list[float]] | None = None


class RunAborted(RuntimeError):
    """A run failed mid-way; ``partial`` holds the trace up to the failure."""

    def __init__(self, message: str, partial: RunResult) -> None:
        super().__init__(message)
        self.partial = partial


def run(
    problem: CostIndexedProblem,
    table: CalibrationTable | None,
    engine,
    config: OptecotConfig,
    keep_populations: bool = False,
) -> RunResult:
    """Drive ``engine`` with OPTECOT-chosen costs until ``t_max`` is spent.

    The returned best solution is the argmax of the scores used at evaluation
    time over all evaluated populations.
    """
    ctl = OptecotController(problem, table, config)
    provenance = {
        "problem": problem.name,
        "problem_params": problem.params(),
        "seed": config.seed,
        "config": asdict(config),
        "pop_size": getattr(engine, "pop_size", None),
        "algorithm": type(engine).__name__,
    }
    result = RunResult(None, -math.inf, RunTrace(provenance=provenance))
    if keep_populations:
        result.populations, result.scores = [], []
    best_fit = -math.inf
    incumbent = None
    while ctl.state.elapsed < config.t_max:
        population = engine.ask()
        try:
            scores, record = ctl.step(population)
        except Exception as exc:
            raise RunAborted(f"run aborted at iteration {len(result.trace.records)}: {exc}", result) from exc
        fitness = [problem.fitness(s) for s in scores]
        k = int(np.argmax(fitness))
        if fitness[k] > best_fit:
            best_fit = fitness[k]
            incumbent = (population[k], scores[k], record.cost)
            result.best_solution, result.best_score = population[k], scores[k]
        record.best_score = result.best_score
        result.trace.records.append(record)
        result.incumbents.append(incumbent)
        if keep_populations:
            result.populations.append(list(population))
            result.scores.append(list(scores))
        engine.tell(fitness)
    if ctl.plan is not None:
        result.trace.provenance["budget_plan"] = asdict(ctl.plan)
    result.trace.provenance["sample_size"] = ctl.sample_size
    result.trace.provenance["period"] = ctl.period
    return result
