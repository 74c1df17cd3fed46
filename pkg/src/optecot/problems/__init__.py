"""Benchmark cost-indexed problems."""
from __future__ import annotations

from .mcsphere import McSphere
from .symreg import SymbolicRegression
from .windfarm import WindFarm

__all__ = ["DEFAULTS", "McSphere", "SymbolicRegression", "WindFarm", "make_problem"]

_FACTORIES = {"mcsphere": McSphere, "symreg": SymbolicRegression, "windfarm": WindFarm}

#: Desk-scale run settings per problem.
DEFAULTS = {
    "mcsphere": {"algorithm": "cmaes", "pop_size": 20, "t_max": 300_000},
    "symreg": {"algorithm": "gp", "pop_size": 200, "t_max": 200_000},
    "windfarm": {"algorithm": "cmaes", "pop_size": 20, "t_max": 3_200_000},
}


def make_problem(name: str, **params):
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r} (expected one of {sorted(_FACTORIES)})") from None
    return factory(**params)
