"""Optimal evaluation cost tracking for rank-based evolutionary algorithms."""
from .adjuster import BisectionResult, BudgetPlan, bisect, budget_plan, population_eval_time, worst_case_bisec_time
from .controller import (
    ControllerState,
    OptecotConfig,
    OptecotController,
    RunResult,
    RunTrace,
    confidence_interval,
    run,
    should_readjust,
)
from .cost import (
    DEFAULT_GRID,
    CalibrationError,
    CalibrationTable,
    CostIndexedProblem,
    FunctionProblem,
    ParameterMap,
    accuracy_for_cost,
    calibrate,
    cost_for_time,
    param_for_cost,
    time_for_cost,
)
from .ranking import accuracy, argsort_scores, ranking_distance_matrix, spearman, spearman_scores

__version__ = "0.1.0"
