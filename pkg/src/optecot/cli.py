"""Command-line experiment pipeline.

Settings resolve in three layers: per-problem defaults, then ``--config``,
then explicit flags.  Every command writes under ``--out`` and merges its
artifacts into ``manifest.json``.  Failures print one JSON line to stderr and
exit with status 1.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .config import config_hash, load_config
from .controller import OptecotConfig, run
from .cost import DEFAULT_GRID, CalibrationTable, calibrate, with_wall_clock
from .engines import make_engine
from .harness import (
    AVERAGING,
    SWEEP_GRID,
    cost_curve,
    quality_curve,
    run_comparison,
    run_sweep,
    suitability_report,
    time_grid,
)
from .problems import DEFAULTS, make_problem
from .ranking import distance_matrix_csv

COMMANDS = ("calibrate", "suitability", "sweep", "run", "compare", "report")

# problem constructor arguments accepted from config files and flags
_PROBLEM_KEYS = {
    "mcsphere": ("dim", "noise_scale"),
    "symreg": ("n_points",),
    "windfarm": ("n_turbines",),
}

_CONTROLLER_KEYS = ("alpha", "beta", "kappa", "sample_size", "period")


class CliError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``"20"`` means seeds 0..19; ``"3,5,8"`` lists them."""
    text = text.strip()
    try:
        if "," in text:
            return [int(s) for s in text.split(",") if s.strip()]
        n = int(text)
    except ValueError:
        raise CliError(f"bad --seeds value {text!r}") from None
    if n < 1:
        raise CliError("--seeds count must be >= 1")
    return list(range(n))


def parse_grid(text: str) -> list[float]:
    """Comma-separated costs; fractions such as ``1/9`` are accepted."""
    try:
        grid = [float(Fraction(tok.strip())) for tok in text.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError):
        raise CliError(f"bad --grid value {text!r}") from None
    if not grid or any(not 0.0 <= c <= 1.0 for c in grid):
        raise CliError("--grid costs must lie in [0, 1]")
    return grid


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=sorted(DEFAULTS), help="benchmark problem")
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="seed for single-run commands")
    common.add_argument("--seeds", help="seed count N (0..N-1) or a comma list")
    common.add_argument("--grid", help="comma-separated cost grid")
    common.add_argument("--tmax", type=float, help="time budget in the problem's time unit")
    common.add_argument("--plot", action="store_true", help="also write SVG charts")
    common.add_argument("--n-solutions", type=int, default=100, help="solutions for calibration and suitability")
    common.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    common.add_argument("--pop-size", type=int, help="population size")
    common.add_argument("--algorithm", choices=("cmaes", "gp"), help="evolutionary engine")
    common.add_argument("--table", help="calibration CSV to reuse instead of calibrating")
    common.add_argument("--grid-points", type=int, default=200, help="time-grid resolution for averaged curves")
    common.add_argument(
        "--wall-clock", action="store_true", help="charge measured seconds instead of the proxy clock (not reproducible)"
    )

    parser = argparse.ArgumentParser(prog="optecot", description="Track the optimal evaluation cost of an RBEA.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "calibrate": "measure mean evaluation time per cost",
        "suitability": "accuracy, extra evaluations and ranking distances per cost",
        "sweep": "constant-cost runs over a cost grid",
        "run": "one OPTECOT run with its trace",
        "compare": "OPTECOT against the original cost over several seeds",
        "report": "redraw charts from CSVs already in --out",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def resolve_settings(args: argparse.Namespace) -> dict[str, Any]:
    file_cfg = load_config(args.config) if args.config else {}
    name = args.problem or file_cfg.get("problem")
    if name is None:
        raise CliError("no problem given (use --problem or a 'problem' config key)")
    if name not in DEFAULTS:
        raise CliError(f"unknown problem {name!r}")
    settings: dict[str, Any] = {"problem": name, "seed": 0, **DEFAULTS[name]}
    settings.update(file_cfg)
    flags = {
        "problem": args.problem,
        "seed": args.seed,
        "t_max": args.tmax,
        "pop_size": args.pop_size,
        "algorithm": args.algorithm,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    for key in settings:
        if key in ("dim", "noise_scale", "n_turbines", "n_points") and key not in _PROBLEM_KEYS[name]:
            raise CliError(f"config key {key!r} does not apply to problem {name!r}")
    return settings


def build_problem(settings: dict[str, Any], wall_clock: bool = False):
    name = settings["problem"]
    params = {k: settings[k] for k in _PROBLEM_KEYS[name] if k in settings}
    if "dim" in params:
        params["dim"] = int(params["dim"])
    problem = make_problem(name, **params)
    return with_wall_clock(problem) if wall_clock else problem


def controller_config(settings: dict[str, Any], seed: int | None = None) -> OptecotConfig:
    kw = {k: settings[k] for k in _CONTROLLER_KEYS if k in settings}
    return OptecotConfig(t_max=float(settings["t_max"]), seed=settings["seed"] if seed is None else seed, **kw)


class Output:
    """Writes artifacts under one directory and records them for the manifest."""

    def __init__(self, root: str | Path, plot: bool) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.plot = plot
        self.artifacts: list[str] = []

    def text(self, name: str, content: str) -> Path:
        path = self.root / name
        path.write_text(content)
        self.artifacts.append(name)
        return path

    def line_chart(self, name: str, *args, **kwargs) -> None:
        if not self.plot:
            return
        from .plotting import line_chart

        line_chart(self.root / name, *args, **kwargs)
        self.artifacts.append(name)

    def heatmap(self, name: str, *args, **kwargs) -> None:
        if not self.plot:
            return
        from .plotting import heatmap

        heatmap(self.root / name, *args, **kwargs)
        self.artifacts.append(name)

    def manifest(self, command: str, settings: dict[str, Any], extra: dict[str, Any] | None = None) -> None:
        path = self.root / "manifest.json"
        doc = json.loads(path.read_text()) if path.exists() else {}
        entry = {
            "artifacts": sorted(set(self.artifacts)),
            "config": settings,
            "config_hash": config_hash(settings),
            **(extra or {}),
        }
        doc.setdefault("commands", {})[command] = entry
        doc["artifacts"] = sorted({a for e in doc["commands"].values() for a in e["artifacts"]})
        doc["averaging"] = AVERAGING
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _table(args, settings, problem, out: Output) -> CalibrationTable:
    if args.table:
        return CalibrationTable.load(args.table)
    table = calibrate(problem, args.n_solutions, DEFAULT_GRID, settings["seed"])
    out.text("calibration.csv", table.to_csv())
    return table


def cmd_calibrate(args, settings, out: Output) -> dict[str, Any]:
    problem = build_problem(settings, args.wall_clock)
    grid = parse_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    table = calibrate(problem, args.n_solutions, grid, settings["seed"])
    out.text("calibration.csv", table.to_csv())
    out.line_chart(
        "calibration.svg", table.costs, {"mean time": table.times}, "cost", f"mean time ({table.time_unit})"
    )
    return {"n_solutions": args.n_solutions, "grid": grid}


def cmd_suitability(args, settings, out: Output) -> dict[str, Any]:
    problem = build_problem(settings, args.wall_clock)
    grid = parse_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    rep = suitability_report(problem, args.n_solutions, grid, settings["seed"])
    out.text("suitability.csv", rep.csv())
    out.text("distance_matrix.csv", distance_matrix_csv(rep.distances, rep.grid))
    if rep.table is not None:
        out.text("calibration.csv", rep.table.to_csv())
    out.line_chart(
        "suitability_time.svg", rep.grid, {"measured": rep.mean_times, "linear": rep.predicted_times},
        "cost", "mean evaluation time",
    )
    out.line_chart("suitability_accuracy.svg", rep.grid, {"accuracy": rep.accuracies}, "cost", "Spearman accuracy")
    out.heatmap("distance_matrix.svg", rep.distances[list(rep.original_order)], rep.grid)
    return {"n_solutions": args.n_solutions, "grid": rep.grid, "warning": rep.warning}


def cmd_sweep(args, settings, out: Output) -> dict[str, Any]:
    problem = build_problem(settings, args.wall_clock)
    grid = parse_grid(args.grid) if args.grid else list(SWEEP_GRID)
    seeds = parse_seeds(args.seeds) if args.seeds else list(range(20))
    res = run_sweep(
        problem, grid, seeds, float(settings["t_max"]), settings["algorithm"], settings["pop_size"],
        args.grid_points, args.jobs,
    )
    out.text("sweep_summary.csv", res.summary_csv())
    out.text("sweep_curves.csv", res.curves_csv())
    out.text("sweep_per_seed.csv", res.per_seed_csv())
    out.line_chart(
        "sweep_curves.svg", res.grid, {f"c={c:.2f}": res.mean_curves[c] for c in res.costs},
        "time", "mean quality", ref=res.q_ref,
    )
    return {
        "seeds": seeds,
        "grid": res.costs,
        "c_hat": res.c_hat,
        "c_hat_max": res.c_hat_max,
        "q_ref": res.q_ref,
        "failures": res.failures,
    }


def cmd_run(args, settings, out: Output) -> dict[str, Any]:
    problem = build_problem(settings, args.wall_clock)
    table = _table(args, settings, problem, out)
    config = controller_config(settings)
    engine = make_engine(problem, settings["algorithm"], settings["pop_size"], config.seed)
    res = run(problem, table, engine, config)
    curve = quality_curve(res, problem, config.t_max, config.seed, "optecot")
    out.text("trace.csv", res.trace.to_csv())
    out.text("trace.json", res.trace.sidecar())
    out.text("bisections.csv", res.trace.bisections_csv())
    rows = "".join(f"{t!r},{q!r}\n" for t, q in curve.points)
    out.text("quality_curve.csv", "t,quality\n" + rows)
    out.line_chart("quality_curve.svg", curve.times, {"optecot": curve.qualities}, "time", "quality")
    grid = time_grid(config.t_max, args.grid_points)
    out.line_chart("cost.svg", grid, {"cost": cost_curve(res, grid)}, "time", "cost")
    return {"final_cost": res.trace.records[-1].cost if res.trace.records else None}


def cmd_compare(args, settings, out: Output) -> dict[str, Any]:
    problem = build_problem(settings, args.wall_clock)
    table = _table(args, settings, problem, out)
    seeds = parse_seeds(args.seeds) if args.seeds else list(range(20))
    res = run_comparison(
        problem, table, controller_config(settings), seeds, settings["algorithm"], settings["pop_size"],
        args.grid_points, args.jobs,
    )
    out.text("compare_curves.csv", res.curves_csv())
    out.text("compare_per_seed.csv", res.per_seed_csv())
    out.line_chart(
        "compare_quality.svg", res.grid, {"optecot": res.optecot, "original": res.original}, "time", "mean quality"
    )
    out.line_chart("compare_qi_tr.svg", res.grid, {"QI %": res.qi, "TR %": res.tr}, "time", "percent", ref=100.0)
    out.line_chart("compare_cost.svg", res.grid, {"mean cost": res.mean_cost}, "time", "cost")
    return {"seeds": res.seeds, "fraction_not_worse": res.fraction_not_worse, "failures": res.failures}


def _read_columns(path: Path) -> dict[str, list[str]]:
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: [r[k] for r in rows] for k in (rows[0].keys() if rows else [])}


def _floats(values: Sequence[str]) -> np.ndarray:
    return np.array([float(v) for v in values])


def cmd_report(args, settings, out: Output) -> dict[str, Any]:
    """Redraw charts from existing CSVs; writes nothing when none are present."""
    out.plot = True
    found = []
    root = out.root
    if (root / "calibration.csv").exists():
        table = CalibrationTable.load(root / "calibration.csv")
        out.line_chart("calibration.svg", table.costs, {"mean time": table.times}, "cost", "mean time")
        found.append("calibration.csv")
    if (root / "suitability.csv").exists():
        cols = _read_columns(root / "suitability.csv")
        costs = _floats(cols["cost"])
        out.line_chart("suitability_accuracy.svg", costs, {"accuracy": _floats(cols["accuracy"])}, "cost", "accuracy")
        found.append("suitability.csv")
    if (root / "sweep_curves.csv").exists():
        cols = _read_columns(root / "sweep_curves.csv")
        t, c, q = _floats(cols["t"]), _floats(cols["cost"]), _floats(cols["mean_quality"])
        series = {f"c={v:.2f}": q[c == v] for v in sorted(set(c.tolist()))}
        out.line_chart("sweep_curves.svg", t[c == c[0]], series, "time", "mean quality")
        found.append("sweep_curves.csv")
    if (root / "compare_curves.csv").exists():
        cols = _read_columns(root / "compare_curves.csv")
        t = _floats(cols["t"])
        out.line_chart(
            "compare_quality.svg", t,
            {"optecot": _floats(cols["q_optecot"]), "original": _floats(cols["q_original"])}, "time", "mean quality",
        )
        out.line_chart("compare_cost.svg", t, {"mean cost": _floats(cols["mean_cost"])}, "time", "cost")
        found.append("compare_curves.csv")
    if (root / "quality_curve.csv").exists():
        cols = _read_columns(root / "quality_curve.csv")
        out.line_chart(
            "quality_curve.svg", _floats(cols["t"]), {"optecot": _floats(cols["quality"])}, "time", "quality"
        )
        found.append("quality_curve.csv")
    if not found:
        raise CliError(f"no CSV outputs found under {root}")
    return {"sources": found}


_HANDLERS = {
    "calibrate": cmd_calibrate,
    "suitability": cmd_suitability,
    "sweep": cmd_sweep,
    "run": cmd_run,
    "compare": cmd_compare,
    "report": cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.jobs < 1:
            raise CliError("--jobs must be >= 1")
        if args.command == "report" and not args.problem and not args.config:
            settings: dict[str, Any] = {}
        else:
            settings = resolve_settings(args)
        out = Output(args.out, args.plot)
        extra = _HANDLERS[args.command](args, settings, out)
        if args.wall_clock:
            extra["clock"] = "wall"
        out.manifest(args.command, settings, extra)
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
