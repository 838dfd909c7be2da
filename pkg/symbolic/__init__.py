"""Computer algebra kernel: polynomials, linear solving, constraint reduction, power sums."""

from symbolic.algebra import (  # noqa: F401
    MAX_DEGREE, Polynomial, LinearForm, LinearSolution,
    to_sympy, from_sympy, canonical_aexp, qexp_to_sympy, sympy_to_qexp,
    expand, linear_form, solve_linear, symbol,
)
from symbolic.constraints import (  # noqa: F401
    reduce_bexp, bound_of, equation_solution, is_linear_in, linear_coefficient,
)
from symbolic.series import (  # noqa: F401
    bernoulli_numbers, faulhaber_coefficients, power_sum, sum_polynomial, sum_closed_form,
)
