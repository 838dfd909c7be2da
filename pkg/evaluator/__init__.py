"""Execution of intermediate and probability programs."""

from evaluator.evaluate import (  # noqa: F401
    Evaluator, StepBudget, DEFAULT_STEP_BUDGET, eval_exp, eval_qexp, eval_bexp, floor_div,
)
from evaluator.distribution import (  # noqa: F401
    Distribution, EXACT, OVER_APPROX, tabulate, expected_value_bounds,
    write_distribution_csv, read_distribution_csv, emit_plot_data,
)
from evaluator.specialize import specialize, fold_qexp  # noqa: F401
