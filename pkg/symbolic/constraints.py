"""Reduction of conjunctions of integer comparisons.

Each atom is brought to the shape `L <= 0`, `L = 0` or `L != 0` with L an
expanded sympy expression, split into a constant `k` and a non-constant
part. Atoms sharing the same non-constant part are then merged.
"""

import logging
import math
from functools import lru_cache

import sympy

from core_ir.errors import NotLinear, ZeroCoefficient, SymbolicError
from core_ir.terms import (
    AExp, Eq, Lt, Le, TrueB, FalseB, Not, And, TRUE, FALSE, conjuncts, conjunction,
)
from symbolic.algebra import to_sympy, from_sympy, solve_linear, _linear_parts

logger = logging.getLogger(__name__)

LE, EQ, NE = "le", "eq", "ne"


def _split(expr):
    k, rest = sympy.expand(expr).as_coeff_Add()
    return k, rest


def _gcd(rest):
    g = 0
    for term in sympy.Add.make_args(rest):
        coefficient, _ = term.as_coeff_Mul()
        if not coefficient.is_Integer:
            return 1
        g = math.gcd(g, abs(int(coefficient)))
    return g or 1


def _leading_sign(rest):
    lead = min(sympy.Add.make_args(rest), key=lambda t: sympy.default_sort_key(t.as_coeff_Mul()[1]))
    return -1 if lead.as_coeff_Mul()[0] < 0 else 1


def _atom(kind, expr):
    """Normalized record (kind, rest, k) or a boolean for constant atoms."""
    k, rest = _split(expr)
    if rest == 0:
        if kind == LE:
            return bool(k <= 0)
        return bool(k == 0) if kind == EQ else bool(k != 0)
    if not k.is_Integer:
        return (kind, rest, k)
    k = int(k)
    g = _gcd(rest)
    if kind == LE:
        if g > 1:
            rest = sympy.expand(rest / g)
            k = -((-k) // g)
        return (LE, rest, k)
    if g > 1:
        if k % g:
            return kind == NE
        rest, k = sympy.expand(rest / g), k // g
    if _leading_sign(rest) < 0:
        rest, k = sympy.expand(-rest), -k
    return (kind, rest, k)


def _classify(b):
    """Record for one atom, or None when the atom is kept verbatim."""
    try:
        if isinstance(b, TrueB):
            return True
        if isinstance(b, FalseB):
            return False
        if isinstance(b, Le):
            return _atom(LE, to_sympy(b.left) - to_sympy(b.right))
        if isinstance(b, Lt):
            return _atom(LE, to_sympy(b.left) - to_sympy(b.right) + 1)
        if isinstance(b, Eq) and isinstance(b.right, AExp):
            return _atom(EQ, to_sympy(b.left) - to_sympy(b.right))
        if isinstance(b, Not):
            inner = b.arg
            if isinstance(inner, Le):
                return _atom(LE, to_sympy(inner.right) - to_sympy(inner.left) + 1)
            if isinstance(inner, Lt):
                return _atom(LE, to_sympy(inner.right) - to_sympy(inner.left))
            if isinstance(inner, Eq) and isinstance(inner.right, AExp):
                return _atom(NE, to_sympy(inner.left) - to_sympy(inner.right))
            if isinstance(inner, (TrueB, FalseB)):
                return isinstance(inner, FalseB)
    except SymbolicError:
        return None
    return None


def _sides(expr):
    """Split L into (positive part, negated negative part) as AExps."""
    positive, negative = sympy.Integer(0), sympy.Integer(0)
    for term in sympy.Add.make_args(sympy.expand(expr)):
        if term.as_coeff_Mul()[0] < 0:
            negative -= term
        else:
            positive += term
    return from_sympy(positive), from_sympy(negative)


def _to_bexp(kind, rest, k):
    left, right = _sides(rest + k)
    if kind == LE:
        return Le(left, right)
    if kind == EQ:
        return Eq(left, right)
    return Not(Eq(left, right))


def _push_not(b):
    if isinstance(b, Not):
        inner = b.arg
        if isinstance(inner, Not):
            return _push_not(inner.arg)
        if isinstance(inner, And):
            reduced = reduce_bexp(inner)
            if isinstance(reduced, TrueB):
                return FALSE
            if isinstance(reduced, FalseB):
                return TRUE
            return Not(reduced)
    return b


@lru_cache(maxsize=32768)
def reduce_bexp(b):
    """Equivalent, simplified conjunction; TRUE or FALSE when decided."""
    atoms = []
    for part in conjuncts(b):
        part = _push_not(part)
        if isinstance(part, And):
            atoms.extend(conjuncts(part))
        else:
            atoms.append(part)

    order = []
    les, eqs, nes, verbatim = {}, {}, {}, []
    for atom in atoms:
        record = _classify(atom)
        if record is None:
            if isinstance(atom, FalseB):
                return FALSE
            if atom not in verbatim:
                verbatim.append(atom)
                order.append(("verbatim", atom))
            continue
        if record is True:
            continue
        if record is False:
            return FALSE
        kind, rest, k = record
        if kind == LE:
            if rest not in les:
                order.append((LE, rest))
                les[rest] = k
            else:
                les[rest] = max(les[rest], k)
        elif kind == EQ:
            if rest in eqs and eqs[rest] != k:
                return FALSE
            if rest not in eqs:
                order.append((EQ, rest))
            eqs[rest] = k
        else:
            nes.setdefault(rest, set())
            if not nes[rest]:
                order.append((NE, rest))
            nes[rest].add(k)

    # opposite bounds: rest <= -k1 and rest >= k2
    for rest in list(les):
        if rest not in les:
            continue
        opposite = sympy.expand(-rest)
        if opposite in les:
            k1, k2 = les[rest], les[opposite]
            if k2 > -k1:
                return FALSE
            if k2 == -k1:
                del les[rest], les[opposite]
                record = _atom(EQ, rest + k1)
                if record is False:
                    return FALSE
                if record is not True:
                    _, eq_rest, eq_k = record
                    if eq_rest in eqs and eqs[eq_rest] != eq_k:
                        return FALSE
                    if eq_rest not in eqs:
                        order.append((EQ, eq_rest))
                    eqs[eq_rest] = eq_k

    for rest, k in eqs.items():
        value = -k
        for sign, key in ((1, rest), (-1, sympy.expand(-rest))):
            if key in les:
                if sign * value + les[key] > 0:
                    return FALSE
                del les[key]
        if rest in nes:
            if k in nes[rest]:
                return FALSE
            del nes[rest]

    result = []
    for kind, key in order:
        if kind == "verbatim":
            result.append(key)
        elif kind == LE and key in les:
            result.append(_to_bexp(LE, key, les[key]))
        elif kind == EQ and key in eqs:
            result.append(_to_bexp(EQ, key, eqs[key]))
        elif kind == NE and key in nes:
            for k in sorted(nes[key]):
                result.append(_to_bexp(NE, key, k))
    return conjunction(result)


def bound_of(atom, x):
    """('lower'|'upper', bound) when the atom bounds x linearly, else None."""
    if isinstance(atom, Le):
        expr = to_sympy(atom.left) - to_sympy(atom.right)
    elif isinstance(atom, Lt):
        expr = to_sympy(atom.left) - to_sympy(atom.right) + 1
    else:
        return None
    try:
        coefficient, rest = _linear_parts(expr, x)
    except (NotLinear, SymbolicError):
        return None
    if coefficient == 0:
        return None
    if coefficient > 0:
        return "upper", from_sympy(sympy.floor(-rest / coefficient))
    return "lower", from_sympy(-sympy.floor(rest / coefficient))


def equation_solution(atom, x):
    """Solution of an equation atom for x, or None when it is not solvable linearly."""
    if not isinstance(atom, Eq) or not isinstance(atom.right, AExp):
        return None
    try:
        return solve_linear(atom.left, atom.right, x)
    except (NotLinear, ZeroCoefficient):
        return None
    except SymbolicError:
        return None


def is_linear_in(atom, x):
    """True when every side of a comparison is linear with constant coefficient in x."""
    parts = []
    if isinstance(atom, Not):
        atom = atom.arg
    if isinstance(atom, (Le, Lt)):
        parts = [to_sympy(atom.left) - to_sympy(atom.right)]
    elif isinstance(atom, Eq) and isinstance(atom.right, AExp):
        parts = [to_sympy(atom.left) - to_sympy(atom.right)]
    else:
        return False
    try:
        for part in parts:
            _linear_parts(part, x)
    except SymbolicError:
        return False
    return True


def linear_coefficient(atom, x):
    """Integer coefficient of x in `left - right` of a comparison atom."""
    if isinstance(atom, Not):
        atom = atom.arg
    coefficient, _ = _linear_parts(to_sympy(atom.left) - to_sympy(atom.right), x)
    return coefficient
