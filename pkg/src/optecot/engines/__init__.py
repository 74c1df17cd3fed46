"""Rank-based evolutionary engines with an ask/tell interface."""
from __future__ import annotations

from typing import Any

from .cmaes import CMAES
from .gp import GeneticProgramming

__all__ = ["CMAES", "GeneticProgramming", "make_engine"]


def make_engine(problem, algorithm: str, pop_size: int, seed: int, **options: Any):
    """Build the engine matching ``problem``'s representation."""
    if algorithm == "cmaes":
        if problem.representation != "real_vector":
            raise ValueError(f"cmaes needs a real-vector problem, {problem.name} is {problem.representation}")
        return CMAES(problem.dimension, pop_size, seed=seed, bounds=problem.bounds, **options)
    if algorithm == "gp":
        if problem.representation != "expression_tree":
            raise ValueError(f"gp needs an expression-tree problem, {problem.name} is {problem.representation}")
        return GeneticProgramming(problem.dimension, pop_size, seed=seed, **options)
    raise ValueError(f"unknown algorithm {algorithm!r} (expected cmaes or gp)")
