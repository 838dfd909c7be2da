"""Finite ranges for summation and product variables.

The range of a bound variable is read off the linear c-constraints that
multiply the summation body. Constraints are collected through products,
probability calls (inlined) and nested sums, whose binders become extra
unknowns; the bounds are then tightened by interval propagation once the
enclosing scope is known.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import count

from core_ir.errors import EvaluationError
from core_ir.terms import (
    AExp, Var, Const, Add, Sub, Mul, Eq, Lt, Le, Not,
    C, DivQ, AddQ, SubQ, Sum, Prod, CallP,
    conjuncts, factors_of, product, plus, minus, times,
)
from core_ir.traversal import free_vars, substitute

logger = logging.getLogger(__name__)

PROPAGATION_ROUNDS = 8
INLINE_DEPTH = 8


@dataclass(frozen=True)
class Constraint:
    """sum(coefficients[v] * v) + rest - offset  (<= 0 | = 0)."""
    kind: str
    coefficients: tuple
    rest: AExp
    offset: object = None


@dataclass(frozen=True)
class Choice:
    """A sum of alternatives multiplying the body; each bounds the target on its own."""
    terms: tuple


def linear_parts(a, unknowns):
    """({unknown: coefficient}, rest) with coefficient and rest free of unknowns, or None."""
    if not (free_vars(a) & unknowns):
        return {}, a
    if isinstance(a, Var):
        return {a.name: Const(1)}, Const(0)
    if isinstance(a, (Add, Sub)):
        left, right = linear_parts(a.left, unknowns), linear_parts(a.right, unknowns)
        if left is None or right is None:
            return None
        combine = plus if isinstance(a, Add) else minus
        coefficients = dict(left[0])
        for name, c in right[0].items():
            coefficients[name] = combine(coefficients.get(name, Const(0)), c)
        return coefficients, combine(left[1], right[1])
    if isinstance(a, Mul):
        for known, other in ((a.left, a.right), (a.right, a.left)):
            if not (free_vars(known) & unknowns):
                parts = linear_parts(other, unknowns)
                if parts is None:
                    return None
                return ({n: times(known, c) for n, c in parts[0].items()},
                        times(known, parts[1]))
    return None


def _difference(left, right, unknowns, shift=0):
    lhs, rhs = linear_parts(left, unknowns), linear_parts(right, unknowns)
    if lhs is None or rhs is None:
        return None
    coefficients = dict(lhs[0])
    for name, c in rhs[0].items():
        coefficients[name] = minus(coefficients.get(name, Const(0)), c)
    rest = minus(lhs[1], rhs[1])
    if shift:
        rest = plus(rest, Const(shift))
    return tuple(sorted(coefficients.items())), rest


def constraint_of(atom, unknowns):
    if isinstance(atom, Le):
        parts = _difference(atom.left, atom.right, unknowns)
        kind = "le"
    elif isinstance(atom, Lt):
        parts = _difference(atom.left, atom.right, unknowns, 1)
        kind = "le"
    elif isinstance(atom, Not) and isinstance(atom.arg, Le):
        parts = _difference(atom.arg.right, atom.arg.left, unknowns, 1)
        kind = "le"
    elif isinstance(atom, Not) and isinstance(atom.arg, Lt):
        parts = _difference(atom.arg.right, atom.arg.left, unknowns)
        kind = "le"
    elif isinstance(atom, Eq) and isinstance(atom.right, AExp):
        parts = _difference(atom.left, atom.right, unknowns)
        kind = "eq"
    elif isinstance(atom, Eq) and not (free_vars(atom.right) & unknowns):
        parts = linear_parts(atom.left, unknowns)
        if parts is None or not parts[0]:
            return None
        return Constraint("eq", tuple(sorted(parts[0].items())), parts[1], atom.right)
    else:
        return None
    if parts is None or not parts[0]:
        return None
    return Constraint(kind, parts[0], parts[1])


class RangeFinder:
    """Collects and solves the range constraints of summation bodies.

    `evaluate` is a callable (term, scope) -> value for integer terms; the
    collected constraints are cached per (body, variable).
    """

    def __init__(self, program, evaluate):
        self.program = program
        self.evaluate = evaluate
        self._collected = {}
        self._names = count()

    # --- collection ---

    def collect(self, body, variables):
        key = (body, variables)
        cached = self._collected.get(key)
        if cached is None:
            unknowns = set(variables)
            constraints, choices = [], []
            self._gather(body, unknowns, constraints, choices, 0)
            records = [constraint_of(atom, unknowns) for atom in constraints]
            cached = (frozenset(unknowns), tuple(r for r in records if r is not None), tuple(choices))
            self._collected[key] = cached
        return cached

    def _gather(self, q, unknowns, constraints, choices, depth):
        for factor in factors_of(q):
            if isinstance(factor, C):
                for atom in conjuncts(factor.cond):
                    constraints.append(atom)
            elif isinstance(factor, DivQ):
                self._gather(factor.left, unknowns, constraints, choices, depth)
            elif isinstance(factor, CallP) and depth < INLINE_DEPTH and self.program.has_prob(factor.name):
                pdef = self.program.prob(factor.name)
                if len(pdef.params) == len(factor.args):
                    inlined = substitute(pdef.body, dict(zip(pdef.params, factor.args)))
                    self._gather(inlined, unknowns, constraints, choices, depth + 1)
            elif isinstance(factor, Sum):
                inner = f"{factor.var}#{next(self._names)}"
                unknowns.add(inner)
                renamed = substitute(factor.body, {factor.var: Var(inner)})
                self._gather(renamed, unknowns, constraints, choices, depth)
            elif isinstance(factor, (AddQ, SubQ)):
                choices.append(Choice((factor.left, factor.right)))

    # --- solving ---

    def interval(self, body, var, scope):
        """(lo, hi) for var; either end may be None when unbounded."""
        return self.box(body, (var,), scope)[var]

    def box(self, body, variables, scope):
        """Bounds of several variables constrained together by one body."""
        unknowns, records, choices = self.collect(body, tuple(variables))
        bounds = self._propagate(records, unknowns, scope)
        result = {}
        for var in variables:
            lo, hi = bounds[var]
            for choice in choices:
                hull = self._hull(choice, var, scope)
                if hull is not None:
                    lo = hull[0] if lo is None else max(lo, hull[0])
                    hi = hull[1] if hi is None else min(hi, hull[1])
            result[var] = (lo, hi)
        return result

    def _hull(self, choice, var, scope):
        lows, highs = [], []
        for term in choice.terms:
            if var not in free_vars(term):
                return None
            lo, hi = self.interval(term, var, scope)
            if lo is None or hi is None:
                return None
            if lo <= hi:
                lows.append(lo)
                highs.append(hi)
        if not lows:
            return 1, 0
        return min(lows), max(highs)

    def _numbers(self, record, scope):
        try:
            coefficients = {name: self.evaluate(c, scope) for name, c in record.coefficients}
            rest = self.evaluate(record.rest, scope)
            if record.offset is not None:
                rest -= self.evaluate(record.offset, scope)
        except (EvaluationError, KeyError):
            return None
        return coefficients, rest

    def _propagate(self, records, unknowns, scope):
        bounds = {name: [None, None] for name in unknowns}
        inequalities = []
        for record in records:
            numbers = self._numbers(record, scope)
            if numbers is None:
                continue
            coefficients, rest = numbers
            inequalities.append((coefficients, rest))
            if record.kind == "eq":
                inequalities.append(({n: -c for n, c in coefficients.items()}, -rest))
        for _ in range(PROPAGATION_ROUNDS):
            changed = False
            for coefficients, rest in inequalities:
                for name, c in coefficients.items():
                    if c == 0:
                        continue
                    slack = self._slack(coefficients, rest, name, bounds)
                    if slack is None:
                        continue
                    if c > 0:
                        new = math.floor(Fraction(-slack) / c)
                        if bounds[name][1] is None or new < bounds[name][1]:
                            bounds[name][1] = new
                            changed = True
                    else:
                        new = math.ceil(Fraction(slack) / -c)
                        if bounds[name][0] is None or new > bounds[name][0]:
                            bounds[name][0] = new
                            changed = True
            if not changed:
                break
        return bounds

    @staticmethod
    def _slack(coefficients, rest, target, bounds):
        """rest plus the least possible value of the other terms."""
        total = rest
        for name, c in coefficients.items():
            if name == target or c == 0:
                continue
            lo, hi = bounds[name]
            end = lo if c > 0 else hi
            if end is None:
                return None
            total += c * end
        return total


def prod_factors(body, var):
    return [f for f in factors_of(body) if isinstance(f, Prod) and var in free_vars(f)]


def choice_factor(body):
    for f in factors_of(body):
        if isinstance(f, (AddQ, SubQ)):
            return f
    return None


def distribute(body, factor):
    """Split `others * (a +- b)` into the pair (others * a, others * b)."""
    factors = factors_of(body)
    index = next(i for i, f in enumerate(factors) if f is factor)
    others = factors[:index] + factors[index + 1:]
    return product(others + [factor.left]), product(others + [factor.right])
