"""Specialization of probability programs to concrete parameter values."""

import logging
from fractions import Fraction

from core_ir.errors import EvaluationError
from core_ir.terms import (
    Const, TrueB, FalseB,
    I2R, C, AddQ, SubQ, MulQ, DivQ, Sum, Prod, ConstQ, ZERO, ONE,
    ProbDef, Program,
)
from core_ir.traversal import free_vars, substitute, map_children, calls_in
from evaluator.evaluate import Evaluator
from symbolic.constraints import reduce_bexp

logger = logging.getLogger(__name__)


def _integral(value):
    return isinstance(value, int) or (isinstance(value, Fraction) and value.denominator == 1)


def fold_qexp(q, env=None):
    """Substitute parameter values and fold every ground sub-term.

    Integer-valued parameters are substituted syntactically; rational ones
    are only used where a sub-term becomes ground.
    """
    env = dict(env or {})
    bindings = {name: Const(int(value)) for name, value in env.items() if _integral(value)}
    if bindings:
        q = substitute(q, bindings)
    rational = {name: value for name, value in env.items() if not _integral(value)}
    return _fold(q, rational, Evaluator(Program(), rational))


def _ground(term, env):
    return free_vars(term) <= set(env) and not calls_in(term)


def _fold(q, env, evaluator):
    if isinstance(q, ConstQ):
        return q
    if isinstance(q, I2R):
        if _ground(q.arg, env):
            try:
                return ConstQ(Fraction(evaluator.aexp(q.arg, env)))
            except EvaluationError:
                return q
        return q
    if isinstance(q, C):
        if _ground(q.cond, env):
            try:
                return ONE if evaluator.bexp(q.cond, env) else ZERO
            except EvaluationError:
                return q
        reduced = reduce_bexp(q.cond)
        if isinstance(reduced, TrueB):
            return ONE
        if isinstance(reduced, FalseB):
            return ZERO
        return C(reduced)
    if isinstance(q, (Sum, Prod)):
        inner = {k: v for k, v in env.items() if k != q.var}
        folded = map_children(q, lambda child: _fold(child, inner, evaluator))
        if isinstance(folded, Sum) and folded.body == ZERO:
            return ZERO
        if isinstance(folded, Prod) and (folded.domain == ZERO or folded.body == ONE):
            return ONE
        return folded
    if isinstance(q, (AddQ, SubQ, MulQ, DivQ)):
        return fold_arith(type(q), _fold(q.left, env, evaluator), _fold(q.right, env, evaluator))
    return q


def fold_arith(ctor, left, right):
    """Build `left op right` with constant operands and neutral elements folded."""
    both = isinstance(left, ConstQ) and isinstance(right, ConstQ)
    if ctor is MulQ:
        if left == ZERO or right == ZERO:
            return ZERO
        if left == ONE:
            return right
        if right == ONE:
            return left
        if both:
            return ConstQ(left.value * right.value)
    elif ctor is AddQ:
        if left == ZERO:
            return right
        if right == ZERO:
            return left
        if both:
            return ConstQ(left.value + right.value)
    elif ctor is SubQ:
        if right == ZERO:
            return left
        if both:
            return ConstQ(left.value - right.value)
    elif ctor is DivQ:
        if left == ZERO:
            return ZERO
        if right == ONE:
            return left
        if both and right.value != 0:
            return ConstQ(left.value / right.value)
    return ctor(left, right)


def specialize(program, pname, env):
    """ProbDef of `pname` with the parameters in env bound and folded."""
    pdef = program.prob(pname)
    if not env:
        return pdef
    body = fold_qexp(pdef.body, env)
    logger.debug("Specialized %s under %s", pname, env)
    return ProbDef(pdef.name, pdef.params, body)
