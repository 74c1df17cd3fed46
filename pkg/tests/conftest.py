import numpy as np
import pytest

from optecot.cost import FunctionProblem, ParameterMap, calibrate
from optecot.problems import McSphere


@pytest.fixture
def sphere():
    return McSphere()


@pytest.fixture
def sphere_table(sphere):
    return calibrate(sphere, n_solutions=10)


def linear_problem(theta0=1, theta1=100):
    """Score equals the solution value at every cost; elapsed is theta."""
    return FunctionProblem(
        "linear",
        lambda rng: float(rng.uniform(-1, 1)),
        lambda x, theta, seed: (float(x), float(theta)),
        ParameterMap(theta0, theta1, integer_valued=True),
    )


@pytest.fixture
def linear():
    return linear_problem()


def fraction_var(values):
    from fractions import Fraction

    xs = [Fraction(v) for v in values]
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


__all__ = ["fraction_var", "linear_problem", "np"]
