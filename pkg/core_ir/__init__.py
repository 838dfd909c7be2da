"""Intermediate language: terms, programs, syntax and well-formedness."""

from core_ir.terms import *  # noqa: F401,F403
from core_ir.traversal import (  # noqa: F401
    free_vars, substitute, alpha_equivalent, is_pure, is_closed, FreshNames, fresh_name,
)
from core_ir.syntax import (  # noqa: F401
    parse_program, parse_qexp, parse_exp, parse_bexp, parse_aexp,
    format_term, format_program, format_definition,
)
from core_ir.wellformed import (  # noqa: F401
    check_well_formed, ensure_well_formed, index_functions, enumerate_functions, Diagnostic,
)
