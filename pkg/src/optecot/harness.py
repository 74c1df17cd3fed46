"""Experiment pipeline: quality curves, constant-cost sweeps, OPTECOT comparisons."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Sequence

import numpy as np

from .controller import OptecotConfig, RunResult, run
from .cost import (
    DEFAULT_GRID,
    CalibrationError,
    CalibrationTable,
    CostIndexedProblem,
    calibrate,
)
from .engines import make_engine
from .ranking import accuracy, argsort_scores, ranking_distance_matrix

__all__ = [
    "SWEEP_GRID",
    "ComparisonResult",
    "QualityCurve",
    "ReachTime",
    "SuitabilityReport",
    "SweepResult",
    "cost_curve",
    "csv_text",
    "mean_curve",
    "quality_curve",
    "quality_increase",
    "reach_time",
    "run_comparison",
    "run_sweep",
    "suitability_report",
    "time_grid",
    "time_required",
]

#: Seven of the ten calibration costs.
SWEEP_GRID: tuple[float, ...] = (0.0, 1 / 9, 2 / 9, 3 / 9, 4 / 9, 6 / 9, 1.0)

AVERAGING = "step (last-value) interpolation of each run onto a uniform time grid, then arithmetic mean"


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass
class QualityCurve:
    times: np.ndarray
    qualities: np.ndarray
    label: str = ""

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.qualities.tolist()))


def quality_curve(
    result: RunResult,
    problem: CostIndexedProblem,
    t_max: float | None = None,
    seed: int = 0,
    label: str = "",
) -> QualityCurve:
    """Original-objective value of the incumbent after each completed population.

    The incumbent is the best solution by the scores it was evaluated with.
    Incumbents scored at cost 1 reuse their score; others are re-evaluated at
    ``theta_1`` without charging the run.  Failed re-evaluations give NaN.
    """
    theta1 = problem.theta(1.0)
    times, quals = [], []
    cache: dict[int, float] = {}
    for rec, inc in zip(result.trace.records, result.incumbents):
        if t_max is not None and rec.elapsed > t_max:
            break
        sol, score, cost = inc
        key = id(sol)
        if key not in cache:
            if cost == 1.0:
                cache[key] = float(score)
            else:
                try:
                    cache[key] = float(problem.evaluate(sol, theta1, seed)[0])
                except Exception:
                    cache[key] = math.nan
        times.append(rec.elapsed)
        quals.append(cache[key])
    return QualityCurve(np.asarray(times, dtype=float), np.asarray(quals, dtype=float), label)


@dataclass(frozen=True)
class ReachTime:
    """``t_best`` follows max{t | Q(t) <= q_ref}; ``t_first`` is the first t with Q(t) >= q_ref."""

    t_best: float
    t_first: float
    reached: bool
    all_above: bool = False


def reach_time(times: Sequence[float], qualities: Sequence[float], q_ref: float) -> ReachTime:
    t = np.asarray(times, dtype=float)
    q = np.asarray(qualities, dtype=float)
    ok = ~np.isnan(q)
    t, q = t[ok], q[ok]
    if len(t) == 0:
        raise ValueError("empty quality curve")
    at_or_below = q <= q_ref
    above = q >= q_ref
    reached = bool(above.any())
    t_first = float(t[np.argmax(above)]) if reached else math.nan
    if not at_or_below.any():
        return ReachTime(float(t[0]), t_first, reached, all_above=True)
    return ReachTime(float(t[at_or_below][-1]), t_first, reached)


def _reach_or_missing(times, qualities, q_ref: float) -> ReachTime:
    """``reach_time`` that reports a curve with no point on the grid as not reached."""
    if np.all(np.isnan(np.asarray(qualities, dtype=float))):
        return ReachTime(math.nan, math.nan, False)
    return reach_time(times, qualities, q_ref)


def time_grid(t_max: float, n: int = 200) -> np.ndarray:
    return t_max * np.arange(1, n + 1) / n


def _step_values(times: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(times, grid, side="right") - 1
    out = np.full(len(grid), np.nan)
    has = idx >= 0
    out[has] = values[idx[has]]
    return out


def mean_curve(curves: Sequence[QualityCurve], grid: np.ndarray) -> np.ndarray:
    """Mean of step-interpolated curves; NaN where any curve has no point yet."""
    stacked = np.vstack([_step_values(c.times, c.qualities, grid) for c in curves])
    return stacked.mean(axis=0)


def _cost_at(ends: np.ndarray, costs: np.ndarray, grid: np.ndarray) -> np.ndarray:
    idx = np.minimum(np.searchsorted(ends, grid, side="left"), len(ends) - 1)
    return costs[idx]


def cost_curve(result: RunResult, grid: np.ndarray) -> np.ndarray:
    """Cost in use at each grid time (the population being evaluated then)."""
    ends = np.array([r.elapsed for r in result.trace.records])
    costs = np.array([r.cost for r in result.trace.records])
    return _cost_at(ends, costs, grid)


def _run_one(problem, table, config: OptecotConfig, algorithm, pop_size, engine_options):
    engine = make_engine(problem, algorithm, pop_size, config.seed, **(engine_options or {}))
    return run(problem, table, engine, config)


def _curve_job(args):
    """One seeded run reduced to its curve; a failure is returned as its message."""
    problem, table, config, algorithm, pop_size, engine_options, label = args
    try:
        res = _run_one(problem, table, config, algorithm, pop_size, engine_options)
    except Exception as exc:
        return f"{label} seed {config.seed}: {exc}"
    curve = quality_curve(res, problem, config.t_max, config.seed, label)
    ends = np.array([r.elapsed for r in res.trace.records])
    costs = np.array([r.cost for r in res.trace.records])
    return curve, ends, costs, res.trace.records[-1].bisection_time if res.trace.records else 0.0


def _map(jobs: int, fn, tasks):
    if jobs <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


@dataclass
class SweepResult:
    costs: list[float]
    seeds: list[int]
    grid: np.ndarray
    mean_curves: dict[float, np.ndarray]
    reach: dict[float, ReachTime]
    q_ref: float
    c_hat: float
    c_hat_max: float
    per_seed: dict[tuple[float, int], tuple[ReachTime, float]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    def ratio(self, c: float, first: bool = True) -> float:
        a, b = self.reach[c], self.reach[1.0]
        return (a.t_first / b.t_first) if first else (a.t_best / b.t_best)

    def per_seed_ratios(self, c: float) -> list[float]:
        """Per-seed first-crossing ratio t_c / t_1 against each seed's own original final quality."""
        out = []
        for s in self.seeds:
            if (c, s) not in self.per_seed or (1.0, s) not in self.per_seed:
                continue
            rc, _ = self.per_seed[(c, s)]
            r1, _ = self.per_seed[(1.0, s)]
            out.append(rc.t_first / r1.t_first if rc.reached else math.inf)
        return out

    def summary_csv(self) -> str:
        rows = []
        for c in self.costs:
            r = self.reach[c]
            rows.append([float(c), r.t_best, r.t_first, int(r.reached), self.ratio(c, first=False), self.ratio(c)])
        return csv_text(["cost", "t_best", "t_first", "reached", "ratio_best", "ratio_first"], rows)

    def curves_csv(self) -> str:
        rows = [[float(t), float(c), float(self.mean_curves[c][i])] for c in self.costs for i, t in enumerate(self.grid)]
        return csv_text(["t", "cost", "mean_quality"], rows)

    def per_seed_csv(self) -> str:
        rows = []
        for c in self.costs:
            for s in self.seeds:
                if (c, s) not in self.per_seed:
                    continue
                r, final = self.per_seed[(c, s)]
                rows.append([float(c), s, r.t_best, r.t_first, int(r.reached), final])
        return csv_text(["cost", "seed", "t_best", "t_first", "reached", "final_quality"], rows)


def run_sweep(
    problem: CostIndexedProblem,
    costs: Sequence[float] = SWEEP_GRID,
    seeds: Sequence[int] = tuple(range(20)),
    t_max: float = 1.0,
    algorithm: str = "cmaes",
    pop_size: int = 20,
    grid_points: int = 200,
    jobs: int = 1,
    engine_options: dict | None = None,
) -> SweepResult:
    """Run the engine at each constant cost for every seed and compare reach times."""
    costs = sorted(float(c) for c in costs)
    if 1.0 not in costs:
        raise ValueError("the sweep grid must include cost 1")
    seeds = list(seeds)
    tasks = [
        (problem, None, OptecotConfig(t_max=t_max, seed=s, pin_cost=c), algorithm, pop_size, engine_options, f"c={c:.2f}")
        for c in costs
        for s in seeds
    ]
    outs = _map(jobs, _curve_job, tasks)
    curves, failures = {}, []
    for (c, s), out in zip(((c, s) for c in costs for s in seeds), outs):
        if isinstance(out, str):
            failures.append(out)
        else:
            curves[(c, s)] = out[0]
    grid = time_grid(t_max, grid_points)
    means = {}
    for c in costs:
        done = [curves[(c, s)] for s in seeds if (c, s) in curves]
        if not done:
            raise RuntimeError(f"every run at cost {c!r} failed: {failures[0]}")
        means[c] = mean_curve(done, grid)
    q_ref = float(means[1.0][-1])
    reach = {c: _reach_or_missing(grid, means[c], q_ref) for c in costs}
    per_seed = {}
    for s in seeds:
        if (1.0, s) not in curves:
            continue
        q1 = _step_values(curves[(1.0, s)].times, curves[(1.0, s)].qualities, grid)[-1]
        for c in costs:
            if (c, s) not in curves:
                continue
            vals = _step_values(curves[(c, s)].times, curves[(c, s)].qualities, grid)
            per_seed[(c, s)] = (_reach_or_missing(grid, vals, q1), float(vals[-1]))
    c_hat = min(costs, key=lambda c: (reach[c].t_first if reach[c].reached else math.inf, -c))
    c_hat_max = min(costs, key=lambda c: (reach[c].t_best, -c))
    return SweepResult(costs, seeds, grid, means, reach, q_ref, c_hat, c_hat_max, per_seed, failures)


def quality_increase(q_p: np.ndarray, q_o: np.ndarray) -> np.ndarray:
    """Percentage ``100 * Q^p / Q^o`` pointwise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return 100.0 * np.asarray(q_p) / np.asarray(q_o)


def time_required(grid: np.ndarray, q_p: np.ndarray, q_o: np.ndarray) -> np.ndarray:
    """Percentage of time OPTECOT needs to reach the original quality at each t.

    NaN where the OPTECOT curve never reaches that quality.
    """
    out = np.full(len(grid), np.nan)
    for i, (t, target) in enumerate(zip(grid, q_o)):
        if np.isnan(target):
            continue
        hit = np.nonzero(q_p >= target)[0]
        if len(hit):
            out[i] = 100.0 * grid[hit[0]] / t
    return out


@dataclass
class ComparisonResult:
    seeds: list[int]
    grid: np.ndarray
    optecot: np.ndarray
    original: np.ndarray
    qi: np.ndarray
    tr: np.ndarray
    mean_cost: np.ndarray
    per_seed: dict[int, dict[str, float]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def fraction_not_worse(self) -> float:
        ok = ~(np.isnan(self.optecot) | np.isnan(self.original))
        return float(np.mean(self.optecot[ok] >= self.original[ok])) if ok.any() else 0.0

    def curves_csv(self) -> str:
        rows = [
            [float(t), float(p), float(o), float(q), float(r), float(c)]
            for t, p, o, q, r, c in zip(self.grid, self.optecot, self.original, self.qi, self.tr, self.mean_cost)
        ]
        return csv_text(["t", "q_optecot", "q_original", "qi", "tr", "mean_cost"], rows)

    def per_seed_csv(self) -> str:
        keys = ["q_ref", "t_original", "t_optecot", "bisection_time", "final_optecot", "final_original"]
        rows = [[s] + [float(self.per_seed[s][k]) for k in keys] for s in self.seeds]
        return csv_text(["seed"] + keys, rows)


def run_comparison(
    problem: CostIndexedProblem,
    table: CalibrationTable,
    config: OptecotConfig,
    seeds: Sequence[int] = tuple(range(20)),
    algorithm: str = "cmaes",
    pop_size: int = 20,
    grid_points: int = 200,
    jobs: int = 1,
    engine_options: dict | None = None,
) -> ComparisonResult:
    """Run OPTECOT and the original-cost engine for every seed and compare."""
    seeds = list(seeds)
    tasks = []
    for s in seeds:
        tasks.append((problem, table, replace(config, seed=s, pin_cost=None), algorithm, pop_size, engine_options, "optecot"))
        tasks.append((problem, None, replace(config, seed=s, pin_cost=1.0), algorithm, pop_size, engine_options, "original"))
    outs = _map(jobs, _curve_job, tasks)
    failures = [o for o in outs if isinstance(o, str)]
    pairs = [(s, outs[2 * i], outs[2 * i + 1]) for i, s in enumerate(seeds)]
    pairs = [p for p in pairs if not (isinstance(p[1], str) or isinstance(p[2], str))]
    if not pairs:
        raise RuntimeError(f"no seed completed both arms: {failures[0]}")
    seeds = [p[0] for p in pairs]
    outs = [o for p in pairs for o in p[1:]]
    grid = time_grid(config.t_max, grid_points)
    p_curves = [outs[2 * i][0] for i in range(len(seeds))]
    o_curves = [outs[2 * i + 1][0] for i in range(len(seeds))]
    q_p, q_o = mean_curve(p_curves, grid), mean_curve(o_curves, grid)
    costs = [_cost_at(outs[2 * i][1], outs[2 * i][2], grid) for i in range(len(seeds))]
    per_seed = {}
    for i, s in enumerate(seeds):
        vp = _step_values(p_curves[i].times, p_curves[i].qualities, grid)
        vo = _step_values(o_curves[i].times, o_curves[i].qualities, grid)
        q_ref = float(vo[-1])
        per_seed[s] = {
            "q_ref": q_ref,
            "t_original": _reach_or_missing(grid, vo, q_ref).t_first,
            "t_optecot": _reach_or_missing(grid, vp, q_ref).t_first,
            "bisection_time": float(outs[2 * i][3]),
            "final_optecot": float(vp[-1]),
            "final_original": q_ref,
        }
    return ComparisonResult(
        seeds, grid, q_p, q_o, quality_increase(q_p, q_o), time_required(grid, q_p, q_o),
        np.mean(np.vstack(costs), axis=0), per_seed, failures,
    )


@dataclass
class SuitabilityReport:
    grid: list[float]
    thetas: list[float]
    mean_times: list[float]
    predicted_times: list[float]
    accuracies: list[float]
    distances: np.ndarray
    table: CalibrationTable | None
    original_order: tuple[int, ...] = ()
    warning: str | None = None

    @property
    def extra_proportion(self) -> list[float]:
        t1 = self.mean_times[-1]
        return [t1 / t - 1.0 for t in self.mean_times]

    def csv(self) -> str:
        rows = zip(self.grid, self.thetas, self.mean_times, self.predicted_times, self.extra_proportion, self.accuracies)
        return csv_text(
            ["cost", "theta", "mean_time", "linear_time", "extra_proportion", "accuracy"],
            [[float(c), th, float(t), float(p), float(e), float(a)] for c, th, t, p, e, a in rows],
        )


def suitability_report(
    problem: CostIndexedProblem,
    n_solutions: int = 100,
    grid: Sequence[float] = DEFAULT_GRID,
    seed: int = 0,
) -> SuitabilityReport:
    """Mean times, extra-evaluation proportions, accuracies and ranking distances per cost."""
    if n_solutions < 2:
        raise ValueError("n_solutions must be >= 2")
    grid = sorted(float(c) for c in grid)
    solutions = problem.sample_solutions(n_solutions, seed)
    thetas, means, accs = [], [], []
    for c in grid:
        res = accuracy(problem, solutions, c, seed)
        thetas.append(problem.theta(c))
        means.append(res.elapsed_c / n_solutions)
        accs.append(res.value)
    order = argsort_scores(res.scores_1, problem.direction)
    t0, t1 = means[0], means[-1]
    predicted = [t0 + c * (t1 - t0) for c in grid]
    warning, table = None, None
    try:
        table = calibrate(problem, n_solutions, grid, seed)
    except CalibrationError as exc:
        warning = str(exc)
    distances = ranking_distance_matrix(problem, solutions, grid, seed)
    return SuitabilityReport(grid, thetas, means, predicted, accs, distances, table, order, warning)
