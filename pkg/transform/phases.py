"""The three transformation phases and the analysis that chains them."""

import logging
from dataclasses import dataclass, field, replace

from core_ir.errors import AnalysisError, ArityMismatch, UnsupportedRecursion
from core_ir.syntax import format_term
from core_ir.terms import (
    Var, Eq, Call, C, MulQ, Sum, Prod, CallP, ProbDef, Program,
)
from core_ir.traversal import (
    FreshNames, all_vars, children, fresh_name, is_pure, is_closed, calls_in,
)
from core_ir.wellformed import ensure_well_formed
from evaluator.distribution import EXACT, OVER_APPROX
from evaluator.specialize import fold_qexp
from transform.rules import Rewriter, RewriteContext, SEPARATE, SIMPLIFY, DEFAULT_FIXPOINT_BUDGET
from transform.trace import RuleTrace
import transform.separate  # noqa: F401
import transform.simplify  # noqa: F401

logger = logging.getLogger(__name__)

RAW = "Raw"
PURE = "Pure"
CLOSED = "Closed"

OUTPUT_VARIABLE = "out"


@dataclass
class PhaseResult:
    """A program extended by the output distribution `name` of the analyzed function."""
    program: Program
    name: str
    form: str = RAW
    exact: bool = True
    trace: RuleTrace = field(default_factory=RuleTrace)
    initial: object = None
    diagnostics: list = field(default_factory=list)

    @property
    def definition(self):
        return self.program.prob(self.name)

    @property
    def body(self):
        return self.definition.body

    @property
    def kind(self):
        return EXACT if self.exact else OVER_APPROX

    @property
    def closed(self):
        return self.form == CLOSED

    def with_body(self, body, **changes):
        pdef = self.definition
        program = self.program.with_prob(ProbDef(pdef.name, pdef.params, body))
        return replace(self, program=program, **changes)


def specialize_program(program, env):
    """Every probability definition with the parameter values in env folded in."""
    if not env:
        return program
    probs = tuple(ProbDef(p.name, p.params, fold_qexp(p.body, env)) for p in program.probs)
    return replace(program, probs=probs, params=frozenset(program.params) - set(env))


def create(program, fname, input_name):
    """P_f(out) = sum(x1, ... sum(xn, c(out = f(x1..xn)) * P(x1..xn)))."""
    ensure_well_formed(program)
    try:
        fdef = program.func(fname)
    except KeyError:
        raise AnalysisError(f"no function named '{fname}'", phase="create")
    try:
        pdef = program.prob(input_name)
    except KeyError:
        raise AnalysisError(f"no probability function named '{input_name}'", phase="create")
    if len(fdef.params) != len(pdef.params):
        raise ArityMismatch(
            f"'{fname}' takes {len(fdef.params)} arguments but '{input_name}' "
            f"distributes {len(pdef.params)}")

    names = FreshNames(program.params)
    z = names(OUTPUT_VARIABLE)
    xs = [names(p) for p in pdef.params]
    args = tuple(Var(x) for x in xs)
    body = MulQ(C(Eq(Var(z), Call(fname, args))), CallP(input_name, args))
    for x in reversed(xs):
        body = Sum(x, body)
    name = fresh_name("P" + fname, program.names())
    logger.info("create: %s(%s) from %s and %s", name, z, fname, input_name)
    return PhaseResult(program.with_prob(ProbDef(name, (z,), body)), name, RAW, initial=body)


def _context(pr):
    names = FreshNames(all_vars(pr.body))
    names.reserve(pr.program.params)
    return RewriteContext(pr.program, names)


def separate(pr, budget=DEFAULT_FIXPOINT_BUDGET):
    """Remove every call from the body; the result is Pure."""
    if pr.form != RAW:
        raise AnalysisError(f"separate expects a Raw result, got {pr.form}", phase=SEPARATE)
    rewriter = Rewriter(SEPARATE, _context(pr), pr.trace, budget)
    body = rewriter.run(pr.body)
    if not is_pure(body):
        left = ", ".join(sorted({c.name for c in calls_in(body)})) or "probability calls"
        raise UnsupportedRecursion(f"calls to {left} could not be separated")
    logger.info("separate: %d rule applications", rewriter.applied)
    return pr.with_body(body, form=PURE)


def _irreducible(q):
    """Outermost sums and products left in a term."""
    if isinstance(q, (Sum, Prod)):
        return [q]
    found = []
    for child in children(q):
        found.extend(_irreducible(child))
    return found


def simplify(pr, budget=DEFAULT_FIXPOINT_BUDGET, seed=None):
    """Apply the simplify rules to a fixpoint; Closed when no sum or product is left."""
    if pr.form == RAW:
        raise AnalysisError("simplify expects a separated (Pure) result", phase=SIMPLIFY)
    if pr.form == CLOSED:
        return pr
    start = len(pr.trace)
    rewriter = Rewriter(SIMPLIFY, _context(pr), pr.trace, budget, seed)
    body = rewriter.run(pr.body)
    exact = pr.exact and all(entry.exact for entry in pr.trace.entries[start:])
    if is_closed(body):
        form, diagnostics = CLOSED, []
    else:
        form = PURE
        diagnostics = [f"irreducible: {format_term(q)}" for q in _irreducible(body)]
        for line in diagnostics:
            logger.warning("simplify: %s", line)
    counts = {}
    for entry in pr.trace.entries[start:]:
        counts[entry.rule] = counts.get(entry.rule, 0) + 1
    logger.info("simplify: %d rule applications %s", rewriter.applied,
                ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return pr.with_body(body, form=form, exact=exact, diagnostics=diagnostics)


def analyze(program, fname, input_name, env=None, budget=DEFAULT_FIXPOINT_BUDGET, seed=None):
    """create, separate and simplify in sequence.

    With `env` the parameters are fixed before the analysis starts, so the
    result is the distribution for those values only.
    """
    program = specialize_program(program, env)
    pr = create(program, fname, input_name)
    pr = separate(pr, budget)
    pr = simplify(pr, budget, seed)
    verdict = "closed" if pr.closed else "not closed"
    logger.info("analysis of %s: %s, %s", fname, verdict, pr.kind)
    return pr
