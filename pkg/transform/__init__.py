"""Rewriting phases that turn an intermediate program into its output distribution."""

from transform.trace import RuleTrace, TraceEntry  # noqa: F401
from transform.rules import (  # noqa: F401
    RULES, GROUPS, SEPARATE, SIMPLIFY, DEFAULT_FIXPOINT_BUDGET,
    Rewrite, RewriteContext, Rewriter, apply_rule, rules_of,
)
from transform.phases import (  # noqa: F401
    RAW, PURE, CLOSED, PhaseResult, create, separate, simplify, analyze, specialize_program,
)
from transform.separate import is_additive  # noqa: F401
