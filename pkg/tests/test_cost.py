import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optecot.cost import (
    DEFAULT_GRID,
    CalibrationError,
    CalibrationRow,
    CalibrationTable,
    FunctionProblem,
    ParameterMap,
    accuracy_for_cost,
    calibrate,
    cost_for_time,
    param_for_cost,
    time_for_cost,
    with_wall_clock,
)
from optecot.problems import McSphere

# (theta0, theta1) pairs of the four reference problems
REFERENCE_PAIRS = [(5, 50), (1, 1000), (0.1, 0.01), (10, 100)]


def oracle_theta(theta0, theta1, c):
    """Exact rational evaluation of the linear-accuracy map."""
    t0, t1, c = Fraction(theta0), Fraction(theta1), Fraction(c)
    a0 = t0 / t1 if t1 > t0 else t1 / t0
    a = a0 + c * (1 - a0)
    return t1 * a if t1 > t0 else t1 / a


@pytest.mark.parametrize("theta0,theta1", REFERENCE_PAIRS)
def test_reference_endpoints_are_exact(theta0, theta1):
    pm = ParameterMap(theta0, theta1)
    assert param_for_cost(pm, 0.0) == theta0
    assert param_for_cost(pm, 1.0) == theta1


@pytest.mark.parametrize("theta0,theta1", REFERENCE_PAIRS)
@pytest.mark.parametrize("c", [1 / 9, 0.25, 0.5, 4 / 9, 0.9375])
def test_interior_values_match_rational_oracle(theta0, theta1, c):
    got = param_for_cost(ParameterMap(theta0, theta1), c)
    assert got == pytest.approx(float(oracle_theta(theta0, theta1, c)), rel=1e-12)


def test_direction_branches():
    assert ParameterMap(1, 1000).direction == "theta1_greater"
    assert ParameterMap(0.1, 0.01).direction == "theta1_smaller"
    assert ParameterMap(0.1, 0.01).lowest_accuracy == pytest.approx(0.1)


def test_accuracy_endpoints():
    pm = ParameterMap(5, 50)
    assert accuracy_for_cost(pm, 0.0) == pytest.approx(0.1)
    assert accuracy_for_cost(pm, 1.0) == 1.0


def test_integer_parameter_rounds_half_up():
    # theta = 2 + 2c, so c = 0.25 lands exactly on 2.5
    pm = ParameterMap(2, 4, integer_valued=True)
    assert param_for_cost(pm, 0.25) == 3
    assert isinstance(param_for_cost(pm, 0.5), int)


@given(st.floats(0, 1), st.floats(0, 1))
def test_parameter_is_monotone_in_cost(a, b):
    lo, hi = sorted((a, b))
    up = ParameterMap(1, 1000)
    down = ParameterMap(0.1, 0.01)
    assert param_for_cost(up, lo) <= param_for_cost(up, hi)
    assert param_for_cost(down, lo) >= param_for_cost(down, hi)


@given(st.floats(0, 1))
def test_integer_parameter_stays_in_range(c):
    assert 5 <= param_for_cost(ParameterMap(5, 50, integer_valued=True), c) <= 50


@pytest.mark.parametrize("bad", [-0.01, 1.01, math.nan])
def test_cost_outside_unit_interval_rejected(bad):
    with pytest.raises(ValueError):
        param_for_cost(ParameterMap(1, 10), bad)


@pytest.mark.parametrize("args", [(3, 3), (0, 10), (-1, 10), (1.5, 10, True)])
def test_invalid_parameter_maps(args):
    with pytest.raises(ValueError):
        ParameterMap(*args)


def _table(times):
    n = len(times)
    return CalibrationTable(tuple(CalibrationRow(i / (n - 1), i, t) for i, t in enumerate(times)))


def test_table_interpolation_hand_values():
    table = _table([1.0, 3.0, 7.0])
    assert time_for_cost(table, 0.25) == 2.0
    assert time_for_cost(table, 0.75) == 5.0
    assert cost_for_time(table, 5.0) == 0.75
    assert cost_for_time(table, 7.0) == 1.0


@given(st.floats(0, 1))
def test_time_and_cost_are_inverse(c):
    table = _table([1.0, 2.5, 4.0, 10.0, 11.0])
    assert cost_for_time(table, time_for_cost(table, c)) == pytest.approx(c, abs=1e-12)


def test_cost_for_time_out_of_range():
    with pytest.raises(ValueError):
        cost_for_time(_table([1.0, 2.0]), 3.0)


def test_table_validation():
    with pytest.raises(ValueError):
        _table([1.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        CalibrationTable(((0.0, 1, 1.0), (0.5, 2, 2.0)))


def test_table_csv_round_trip(tmp_path):
    table = CalibrationTable(((0.0, 1, 1.0), (0.5, 2, 1.5), (1.0, 3, 2.25)), "probes")
    table.save(tmp_path / "t.csv")
    back = CalibrationTable.load(tmp_path / "t.csv")
    assert back == table
    assert back.to_csv() == table.to_csv()
    assert table.to_csv().splitlines()[0] == "cost,theta,mean_time,time_unit"


def test_calibrate_proxy_times_are_linear():
    # theta(i/9) = 1 + 111 i exactly for the 1..1000 probe range
    table = calibrate(McSphere(), n_solutions=5)
    assert table.times == [1.0 + 111.0 * i for i in range(10)]
    assert table.costs == list(DEFAULT_GRID)
    assert table.time_unit == "probes"


def _timed_problem(times_by_theta):
    return FunctionProblem(
        "timed",
        lambda rng: 0.0,
        lambda x, theta, seed: (0.0, times_by_theta[theta]),
        ParameterMap(1, 3, integer_valued=True),
    )


def test_calibrate_rejects_decreasing_times():
    prob = _timed_problem({1: 1.0, 2: 0.5, 3: 10.0})
    with pytest.raises(CalibrationError):
        calibrate(prob, 2, grid=(0.0, 0.5, 1.0))


def test_calibrate_flattens_small_regressions():
    prob = _timed_problem({1: 1.0, 2: 0.95, 3: 10.0})
    table = calibrate(prob, 2, grid=(0.0, 0.5, 1.0))
    assert table.times[1] > table.times[0]
    assert table.times[1] == pytest.approx(1.0)


def test_wall_clock_wrapper_uses_clock():
    ticks = iter([10.0, 10.5])
    prob = with_wall_clock(McSphere(), clock=lambda: next(ticks))
    score, elapsed = prob.evaluate(np.zeros(6), 5, 0)
    assert elapsed == 0.5
    assert score == McSphere().evaluate(np.zeros(6), 5, 0)[0]
    assert prob.time_unit == "seconds"
