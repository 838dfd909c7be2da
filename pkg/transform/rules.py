"""Rule registry and the rewriting driver shared by the separate and simplify phases."""

import logging
import random
from dataclasses import dataclass, field

from core_ir.errors import AnalysisError, FixpointBudgetExceeded, UnknownRule
from core_ir.syntax import format_term
from core_ir.terms import QExp, Program
from core_ir.traversal import FreshNames, all_vars, children, replace_all

logger = logging.getLogger(__name__)

SEPARATE = "separate"
SIMPLIFY = "simplify"

DEFAULT_FIXPOINT_BUDGET = 100_000

# Priority groups, highest priority first. A group is only consulted when no
# rule of an earlier group applies anywhere in the term.
GROUPS = {
    SEPARATE: ("separate",),
    SIMPLIFY: ("prepare", "eliminate", "swap", "monotone", "split", "series", "approximate"),
}


@dataclass(frozen=True)
class Rewrite:
    term: QExp
    exact: bool = True

    @property
    def tag(self):
        return "Exact" if self.exact else "OverApprox"


@dataclass
class RewriteContext:
    """What a rule may consult besides the term: the program and a name supply."""
    program: Program = field(default_factory=Program)
    names: FreshNames = field(default_factory=FreshNames)

    def function(self, name):
        try:
            return self.program.func(name)
        except KeyError:
            raise AnalysisError(f"call to undefined function '{name}'", phase="separate")

    def probability(self, name):
        try:
            return self.program.prob(name)
        except KeyError:
            raise AnalysisError(f"call to undefined probability function '{name}'", phase="separate")


@dataclass(frozen=True)
class Rule:
    name: str
    phase: str
    group: str
    fn: object

    def apply(self, term, ctx):
        result = self.fn(term, ctx)
        if result is None:
            return None
        if isinstance(result, Rewrite):
            return result
        return Rewrite(result)


RULES = {}


def rule(name, phase, group):
    """Register the decorated function `fn(term, ctx)` under `name`."""
    if group not in GROUPS[phase]:
        raise ValueError(f"unknown group {group!r} for phase {phase!r}")

    def register(fn):
        RULES[name] = Rule(name, phase, group, fn)
        return fn
    return register


def rules_of(phase):
    """Rules of a phase as a list of groups, each in registration order."""
    return [[r for r in RULES.values() if r.phase == phase and r.group == group]
            for group in GROUPS[phase]]


def apply_rule(name, term, program=None):
    """Apply one named rule at the root of `term`; None when it does not match."""
    # the rule modules register themselves on import
    import transform.separate  # noqa: F401
    import transform.simplify  # noqa: F401
    if name not in RULES:
        raise UnknownRule(f"no rule named '{name}'")
    ctx = RewriteContext(program or Program(), FreshNames(all_vars(term)))
    if program is not None:
        ctx.names.reserve(program.params)
    rewrite = RULES[name].apply(term, ctx)
    if rewrite is None or rewrite.term == term:
        return None
    return rewrite


class Rewriter:
    """Innermost-first rewriting to a fixpoint under a budget of rule applications.

    Each step scans the term bottom-up for the first group that has an
    applicable rule, rewrites every occurrence of that redex and records the
    step in the trace.
    """

    def __init__(self, phase, ctx, trace, budget=DEFAULT_FIXPOINT_BUDGET, seed=None):
        self.phase = phase
        self.ctx = ctx
        self.trace = trace
        self.budget = budget
        self.groups = rules_of(phase)
        if seed is not None:
            rng = random.Random(seed)
            for group in self.groups:
                rng.shuffle(group)
        # sub-terms known to contain no redex of a group
        self.normal = [set() for _ in self.groups]
        self.applied = 0

    def run(self, term):
        while True:
            found = None
            for group, normal in zip(self.groups, self.normal):
                found = self._find(term, group, normal)
                if found is not None:
                    break
            if found is None:
                logger.debug("%s: fixpoint after %d rule applications", self.phase, self.applied)
                return term
            applied_rule, old, rewrite = found
            self.applied += 1
            if self.applied > self.budget:
                raise FixpointBudgetExceeded(
                    f"more than {self.budget} rule applications", phase=self.phase)
            logger.debug("%s: %s", applied_rule.name, format_term(old))
            self.trace.record(applied_rule.name, old, rewrite.term, rewrite.exact, self.phase)
            self.ctx.names.reserve(all_vars(rewrite.term))
            term = replace_all(term, old, rewrite.term)

    def _find(self, node, group, normal):
        if node in normal:
            return None
        for child in children(node):
            if isinstance(child, QExp):
                found = self._find(child, group, normal)
                if found is not None:
                    return found
        for candidate in group:
            rewrite = candidate.apply(node, self.ctx)
            if rewrite is not None and rewrite.term != node:
                return candidate, node, rewrite
        normal.add(node)
        return None
