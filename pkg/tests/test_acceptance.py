"""Acceptance criteria 1-12, one printed PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""
import copy
import math
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from optecot.adjuster import bisect, budget_plan, worst_case_bisec_time
from optecot.cli import main as cli_main
from optecot.controller import OptecotConfig, confidence_interval, run
from optecot.cost import ParameterMap, calibrate, param_for_cost
from optecot.engines import CMAES, GeneticProgramming
from optecot.harness import run_comparison, run_sweep, suitability_report
from optecot.problems import McSphere, SymbolicRegression, WindFarm
from optecot.ranking import spearman

# desk-scale settings for the speed-up criterion
C9_SEEDS = range(20)
C9_TMAX = 300_000


_capture = {}


@pytest.fixture(autouse=True)
def _uncaptured(capsys):
    _capture["capsys"] = capsys
    yield
    _capture.clear()


def report(n, ok, detail):
    """Print the criterion line past pytest's capture, then assert."""
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    with _capture["capsys"].disabled():
        print("\n" + line)
    assert ok, line


def test_c01_bisection_contract():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst, queries = 0.0, set()
    for c_star in rng.uniform(1 / 16, 15 / 16, size=1000):
        res = bisect(lambda c: 1.0 if c >= c_star else 0.0, 0.5)
        worst = max(worst, abs(res.cost - c_star))
        queries.add(len(res.midpoints_visited))
    elapsed = time.perf_counter() - start
    ok = worst < 2**-4 and queries == {4} and elapsed < 1.0
    report(1, ok, f"max |c~ - c*| = {worst:.6f} < 0.0625, queries {sorted(queries)}, {elapsed:.3f}s")


def test_c02_worst_case_midpoints():
    res = bisect(lambda c: 0.0, 0.95)
    report(2, res.midpoints_visited == [0.5, 0.75, 0.875, 0.9375], f"midpoints {res.midpoints_visited}")


def test_c03_budget_formulas():
    low = budget_plan(1000, 0.1, 1)
    high = budget_plan(100, 1, 10)
    ok = (
        low.sample_size == 77 and low.period == low.t_original == 1000 and not low.upper_branch
        and high.sample_size == 10 and high.t_bisec == 321.25 and high.period == 1285 and high.upper_branch
    )
    report(3, ok, f"|S|={low.sample_size} period={low.period}; |S|={high.sample_size} period={high.period}")


def test_c04_budget_invariant_at_runtime():
    prob = McSphere()
    table = calibrate(prob, 100)
    worst_margin, records = math.inf, 0
    for seed in range(10):
        eng = CMAES(prob.dimension, 20, seed=seed, bounds=prob.bounds)
        res = run(prob, table, eng, OptecotConfig(t_max=100_000, seed=seed))
        t_bisec = worst_case_bisec_time(res.trace.provenance["sample_size"], table.t0, table.t1)
        for rec in res.trace.records:
            worst_margin = min(worst_margin, 0.25 * rec.elapsed + t_bisec - rec.bisection_time)
            records += 1
    report(4, worst_margin >= 0, f"{records} records, min slack {worst_margin:.1f} time units")


def test_c05_confidence_interval():
    rng = np.random.default_rng(5)
    mismatches = 0
    for _ in range(100):
        v = rng.exponential(rng.uniform(0.01, 1e4), size=int(rng.integers(1, 12))).tolist()
        # independent two-pass in exact rationals
        xs = [Fraction(x) for x in v]
        m = sum(xs) / len(xs)
        sd = math.sqrt(float(sum((x - m) ** 2 for x in xs) / len(xs)))
        if confidence_interval(v) != (float(m) - 2 * sd, float(m) + 2 * sd):
            mismatches += 1
    report(5, mismatches == 0, f"{100 - mismatches}/100 inputs bit-identical to the two-pass oracle")


def _increasing_map(rng):
    knots = np.sort(rng.uniform(-100, 100, size=int(rng.integers(1, 6))))
    slopes = rng.uniform(0.01, 100, size=len(knots) + 1)
    offset = rng.uniform(-1e3, 1e3)

    def g(v):
        out = offset + slopes[0] * v
        for k, a, b in zip(knots, slopes[:-1], slopes[1:]):
            out += (b - a) * max(0.0, v - k)
        return out

    return g


def _invariance_failures(engine, score_fn, n_maps, seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n_maps):
        pop = engine.ask()
        scores = score_fn(pop)
        g = _increasing_map(rng)
        a, b = copy.deepcopy(engine), copy.deepcopy(engine)
        a.tell(scores)
        b.tell([g(s) for s in scores])
        if a.digest() != b.digest() or repr(a.ask()) != repr(b.ask()):
            bad += 1
        engine.tell(scores)
    return bad


def test_c06_rank_invariance():
    sphere, sr = McSphere(), SymbolicRegression()
    bad_cma = _invariance_failures(
        CMAES(6, 20, seed=0, bounds=sphere.bounds), lambda p: [sphere.evaluate(x, 10, 0)[0] for x in p], 50, 1
    )
    bad_gp = _invariance_failures(
        GeneticProgramming(2, 50, seed=0), lambda p: [sr.evaluate(t, 50)[0] for t in p], 50, 2
    )
    report(6, bad_cma == 0 and bad_gp == 0, f"CMA-ES {50 - bad_cma}/50, GP {50 - bad_gp}/50 maps identical")


def test_c07_pinned_run_equals_bare_engine():
    prob = McSphere()
    same = 0
    for seed in range(5):
        cfg = OptecotConfig(t_max=100_000, seed=seed, pin_cost=1.0)
        res = run(prob, None, CMAES(6, 20, seed=seed, bounds=prob.bounds), cfg, keep_populations=True)
        bare = CMAES(6, 20, seed=seed, bounds=prob.bounds)
        pops = []
        for _ in range(len(res.populations)):
            pop = bare.ask()
            pops.append(np.array(pop).tobytes())
            bare.tell([prob.evaluate(x, 1000, seed)[0] for x in pop])
        same += [np.array(p).tobytes() for p in res.populations] == pops
    report(7, same == 5, f"{same}/5 seeds byte-identical population sequences")


def test_c08_parameter_endpoints():
    pairs = [(5, 50), (1, 1000), (0.1, 0.01), (10, 100)]
    ok = all(
        param_for_cost(ParameterMap(a, b), 0.0) == a and param_for_cost(ParameterMap(a, b), 1.0) == b
        for a, b in pairs
    )
    branches = {ParameterMap(a, b).direction for a, b in pairs}
    report(8, ok and len(branches) == 2, f"endpoints exact for {pairs}, branches {sorted(branches)}")


@pytest.fixture(scope="module")
def speedup():
    prob = McSphere()
    sweep = run_sweep(prob, seeds=C9_SEEDS, t_max=C9_TMAX)
    comp = run_comparison(prob, calibrate(prob, 100), OptecotConfig(t_max=C9_TMAX), seeds=C9_SEEDS)
    return sweep, comp


@pytest.mark.slow
def test_c09a_constant_cost_sweep(speedup):
    sweep, _ = speedup
    medians = {c: float(np.median(sweep.per_seed_ratios(c))) for c in sweep.costs if c < 1.0}
    c_best = min(medians, key=medians.get)
    ok = sweep.c_hat < 1.0 and medians[sweep.c_hat] < 0.9
    report("9a", ok, f"c^ = {sweep.c_hat:.3f}, median t_c^/t_1 = {medians[sweep.c_hat]:.3f} "
           f"(best cost {c_best:.3f} at {medians[c_best]:.3f})")


@pytest.mark.slow
def test_c09b_optecot_vs_original(speedup):
    _, comp = speedup
    t_o = [comp.per_seed[s]["t_original"] for s in comp.seeds]
    t_p = [comp.per_seed[s]["t_optecot"] for s in comp.seeds]
    t_p = [math.inf if math.isnan(t) else t for t in t_p]
    med_o, med_p = float(np.median(t_o)), float(np.median(t_p))
    frac = comp.fraction_not_worse
    ok = med_p < med_o and frac >= 0.5
    report("9b", ok, f"median reach {med_p:.0f} vs {med_o:.0f} ({med_p / med_o:.3f}x), "
           f"mean curve not worse on {100 * frac:.0f}% of grid")


def test_c10_spearman():
    p = list(range(12))
    ok = (
        spearman(p, p) == 1.0
        and spearman(p, p[::-1]) == -1.0
        and spearman([3, 1, 0, 2], [0, 2, 3, 1]) == spearman([0, 2, 3, 1], [3, 1, 0, 2])
        and spearman([0, 1, 2, 3], [1, 0, 2, 3]) == 0.8
    )
    report(10, ok, "identity 1, reversal -1, symmetric, n=4 single swap 0.8")


def test_c11_suitability_on_proxy_clock():
    details, ok = [], True
    for prob, n in ((McSphere(), 100), (SymbolicRegression(), 100), (WindFarm(), 20)):
        rep = suitability_report(prob, n_solutions=n)
        good = (
            rep.mean_times == rep.predicted_times
            and rep.extra_proportion[-1] == 0.0
            and bool(np.all(rep.distances[:, -1] == 0.0))
        )
        ok &= good
        details.append(f"{prob.name} {'ok' if good else 'mismatch'}")
    report(11, ok, ", ".join(details))


CLI_ARGS = {
    "calibrate": ["--n-solutions", "20"],
    "suitability": ["--n-solutions", "20"],
    "sweep": ["--seeds", "2", "--tmax", "40000", "--grid-points", "50"],
    "run": ["--tmax", "40000", "--n-solutions", "20"],
    "compare": ["--seeds", "2", "--tmax", "40000", "--n-solutions", "20", "--grid-points", "50"],
}


def test_c12_cli_csv_reproducibility(tmp_path):
    checked, differing = 0, []
    for command, extra in CLI_ARGS.items():
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / command / rep
            assert cli_main([command, "--problem", "mcsphere", "--seed", "7", "--out", str(out), *extra]) == 0
            outs.append(out)
        for csv_path in sorted(outs[0].glob("*.csv")):
            checked += 1
            if csv_path.read_bytes() != (outs[1] / csv_path.name).read_bytes():
                differing.append(f"{command}/{csv_path.name}")
    report(12, checked > 0 and not differing, f"{checked} CSV files across {len(CLI_ARGS)} subcommands, "
           f"{len(differing)} differ")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
