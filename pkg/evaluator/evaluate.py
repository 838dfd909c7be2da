"""Interpreter for intermediate programs and probability programs.

Integer values are Python ints; parameters bound to rationals (weights
such as p) are Fractions. Probability values are always Fractions.
Tail recursion of well-formed functions runs as a loop under a step
budget, so a non-terminating input surfaces as NonTermination instead of
a RecursionError.
"""

import logging
import math
import threading
from fractions import Fraction

from core_ir.errors import (
    EvaluationError, NonTermination, BudgetExceeded, DivByZero, UnboundedSummation,
)
from core_ir.terms import (
    Var, Const, Add, Sub, Mul, Div, Min, Max,
    Eq, Lt, Le, TrueB, FalseB, Not, And,
    Call, If, ArgDev,
    I2R, C, AddQ, SubQ, MulQ, DivQ, Sum, Prod, CallP, ConstQ,
    AExp,
)
from core_ir.traversal import free_vars
from evaluator.ranges import RangeFinder, prod_factors, choice_factor, distribute

logger = logging.getLogger(__name__)

DEFAULT_STEP_BUDGET = 1_000_000


class StepBudget:
    """Shared counter of recursion steps and summation probes."""

    def __init__(self, limit=DEFAULT_STEP_BUDGET):
        self.limit = limit
        self.used = 0

    def tick(self, where):
        self.used += 1
        if self.used > self.limit:
            raise NonTermination(f"step budget of {self.limit} exhausted in {where}")


def floor_div(a, b):
    if b == 0:
        raise DivByZero("integer division by zero")
    if isinstance(a, int) and isinstance(b, int):
        return a // b
    return math.floor(Fraction(a) / Fraction(b))


class Evaluator:
    """Evaluates terms of one program under a fixed parameter environment."""

    def __init__(self, program, env=None, step_budget=DEFAULT_STEP_BUDGET):
        self.program = program
        self.env = dict(env or {})
        self.step_limit = step_budget
        self._local = threading.local()
        self.ranges = RangeFinder(program, self.value)
        self._functions = {f.name: f for f in program.funcs}
        self._probs = {p.name: p for p in program.probs}

    @property
    def budget(self):
        budget = getattr(self._local, "budget", None)
        if budget is None:
            budget = self._local.budget = StepBudget(self.step_limit)
        return budget

    def fresh_budget(self):
        """Start a new step count for the calling thread."""
        self._local.budget = StepBudget(self.step_limit)

    # --- integer level ---

    def aexp(self, a, scope):
        if isinstance(a, Const):
            return a.value
        if isinstance(a, Var):
            try:
                return scope[a.name]
            except KeyError:
                raise EvaluationError(f"unbound variable '{a.name}'")
        if isinstance(a, Add):
            return self.aexp(a.left, scope) + self.aexp(a.right, scope)
        if isinstance(a, Sub):
            return self.aexp(a.left, scope) - self.aexp(a.right, scope)
        if isinstance(a, Mul):
            return self.aexp(a.left, scope) * self.aexp(a.right, scope)
        if isinstance(a, Div):
            return floor_div(self.aexp(a.left, scope), self.aexp(a.right, scope))
        if isinstance(a, Min):
            return min(self.aexp(a.left, scope), self.aexp(a.right, scope))
        if isinstance(a, Max):
            return max(self.aexp(a.left, scope), self.aexp(a.right, scope))
        raise EvaluationError(f"not an arithmetic expression: {a!r}")

    def bexp(self, b, scope):
        if isinstance(b, TrueB):
            return True
        if isinstance(b, FalseB):
            return False
        if isinstance(b, Eq):
            return self.aexp(b.left, scope) == self.exp(b.right, scope)
        if isinstance(b, Le):
            return self.aexp(b.left, scope) <= self.aexp(b.right, scope)
        if isinstance(b, Lt):
            return self.aexp(b.left, scope) < self.aexp(b.right, scope)
        if isinstance(b, Not):
            return not self.bexp(b.arg, scope)
        if isinstance(b, And):
            return self.bexp(b.left, scope) and self.bexp(b.right, scope)
        raise EvaluationError(f"not a boolean expression: {b!r}")

    def exp(self, e, scope):
        if isinstance(e, AExp):
            return self.aexp(e, scope)
        if isinstance(e, Call):
            return self.call(e.name, [self.exp(arg, scope) for arg in e.args])
        if isinstance(e, If):
            branch = e.then if self.bexp(e.cond, scope) else e.orelse
            return self.exp(branch, scope)
        if isinstance(e, ArgDev):
            return self.argdev(e, scope)
        raise EvaluationError(f"not an expression: {e!r}")

    def value(self, term, scope):
        """Integer value of an AExp or Exp; used by the range finder."""
        return self.exp(term, scope)

    def argdev(self, e, scope):
        steps = self.aexp(e.index, scope)
        if steps < 0:
            raise EvaluationError(f"argDev index {steps} is negative")
        current = self.aexp(e.initial, scope)
        inner = dict(scope)
        for _ in range(steps):
            self.budget.tick("argDev")
            inner[e.var] = current
            current = self.exp(e.update, inner)
        return current

    def call(self, name, args):
        fdef = self._functions.get(name)
        if fdef is None:
            raise EvaluationError(f"call to undefined function '{name}'")
        if len(args) != len(fdef.params):
            raise EvaluationError(f"'{name}' expects {len(fdef.params)} arguments, got {len(args)}")
        body = fdef.body
        recursive = (isinstance(body, If) and isinstance(body.orelse, Call)
                     and body.orelse.name == name)
        while True:
            self.budget.tick(name)
            scope = dict(self.env)
            scope.update(zip(fdef.params, args))
            if not recursive:
                return self.exp(body, scope)
            if self.bexp(body.cond, scope):
                return self.exp(body.then, scope)
            args = [self.exp(arg, scope) for arg in body.orelse.args]

    # --- probability level ---

    def qexp(self, q, scope):
        if isinstance(q, ConstQ):
            return q.value
        if isinstance(q, I2R):
            return Fraction(self.aexp(q.arg, scope))
        if isinstance(q, C):
            return Fraction(1) if self.bexp(q.cond, scope) else Fraction(0)
        if isinstance(q, MulQ):
            left = self.qexp(q.left, scope)
            if left == 0:
                return Fraction(0)
            return left * self.qexp(q.right, scope)
        if isinstance(q, AddQ):
            return self.qexp(q.left, scope) + self.qexp(q.right, scope)
        if isinstance(q, SubQ):
            return self.qexp(q.left, scope) - self.qexp(q.right, scope)
        if isinstance(q, DivQ):
            numerator = self.qexp(q.left, scope)
            denominator = self.qexp(q.right, scope)
            if denominator == 0:
                if numerator == 0:
                    return Fraction(0)
                raise DivByZero(f"division by zero in {q}")
            return numerator / denominator
        if isinstance(q, CallP):
            return self.call_prob(q.name, [self.aexp(a, scope) for a in q.args])
        if isinstance(q, Sum):
            return self.summation(q, scope)
        if isinstance(q, Prod):
            return self.product(q, scope)
        raise EvaluationError(f"not a probability expression: {q!r}")

    def call_prob(self, name, args):
        pdef = self._probs.get(name)
        if pdef is None:
            raise EvaluationError(f"call to undefined probability function '{name}'")
        if len(args) != len(pdef.params):
            raise EvaluationError(f"'{name}' expects {len(pdef.params)} arguments, got {len(args)}")
        scope = dict(self.env)
        scope.update(zip(pdef.params, args))
        return self.qexp(pdef.body, scope)

    def summation(self, q, scope):
        var, body = q.var, q.body
        if var not in free_vars(body):
            value = self.qexp(body, scope)
            if value == 0:
                return value
            raise UnboundedSummation(f"sum over {var} of a nonzero term not depending on it")
        lo, hi = self.ranges.interval(body, var, scope)
        if lo is not None and hi is not None:
            total = Fraction(0)
            inner = dict(scope)
            for value in range(lo, hi + 1):
                inner[var] = value
                total += self.qexp(body, inner)
            return total
        if lo is not None and prod_factors(body, var):
            return self._probe(var, body, lo, scope)
        factor = choice_factor(body)
        if factor is not None:
            left, right = distribute(body, factor)
            first = self.summation(Sum(var, left), scope)
            second = self.summation(Sum(var, right), scope)
            return first + second if isinstance(factor, AddQ) else first - second
        raise UnboundedSummation(f"no finite range for {var} in {q}")

    def _probe(self, var, body, lo, scope):
        """Sum upwards from lo until a product over earlier iterations vanishes."""
        prods = prod_factors(body, var)
        total = Fraction(0)
        inner = dict(scope)
        value = lo
        while True:
            self.budget.tick(f"sum over {var}")
            inner[var] = value
            if any(self.qexp(p, inner) == 0 for p in prods):
                return total
            total += self.qexp(body, inner)
            value += 1

    def product(self, q, scope):
        var = q.var
        lo, hi = self.ranges.interval(q.domain, var, scope)
        if lo is None or hi is None:
            raise UnboundedSummation(f"no finite range for {var} in {q}")
        result = Fraction(1)
        inner = dict(scope)
        for value in range(lo, hi + 1):
            inner[var] = value
            if self.qexp(q.domain, inner) == 0:
                continue
            result *= self.qexp(q.body, inner)
            if result == 0:
                break
        return result


# =================================================================
#                 Module-level entry points
# =================================================================

def eval_exp(program, fname, args, env=None, step_budget=DEFAULT_STEP_BUDGET):
    """Value of fname(args) in the program."""
    return Evaluator(program, env, step_budget).call(fname, list(args))


def eval_qexp(program, q, binding=None, env=None, step_budget=DEFAULT_STEP_BUDGET):
    """Exact value of the probability term under binding and parameters."""
    evaluator = Evaluator(program, env, step_budget)
    scope = dict(evaluator.env)
    scope.update(binding or {})
    try:
        return evaluator.qexp(q, scope)
    except NonTermination as e:
        raise BudgetExceeded(f"step budget of {step_budget} exhausted evaluating {q}") from e


def eval_bexp(program, b, binding=None, env=None):
    evaluator = Evaluator(program, env)
    scope = dict(evaluator.env)
    scope.update(binding or {})
    return evaluator.bexp(b, scope)
