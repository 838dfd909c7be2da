"""Simplification rules: from a pure probability body towards a closed form.

Summations are removed by solving equations or by summing polynomials
between one lower and one upper bound; products are removed when their
condition is convex in the product variable. Everything else prepares the
body for those two steps.
"""

import logging
from functools import lru_cache

import sympy

from core_ir.errors import UnsupportedSeries, SymbolicError
from core_ir.syntax import format_term
from core_ir.terms import (
    AExp, Var, Const, Sub, Add, Mul, Eq, Le, Not, TrueB, FalseB, ArgDev, TRUE, FALSE,
    I2R, C, AddQ, SubQ, MulQ, DivQ, Sum, Prod, CallP, ConstQ, ZERO, ONE,
    product, factors_of, conjuncts, conjunction,
)
from core_ir.traversal import free_vars, substitute, walk
from evaluator.specialize import fold_arith
from symbolic.algebra import (
    canonical_aexp, linear_form, to_sympy, qexp_to_sympy, sympy_to_qexp,
)
from symbolic.constraints import (
    reduce_bexp, bound_of, equation_solution, is_linear_in, linear_coefficient,
)
from symbolic.series import sum_closed_form
from transform.rules import rule, Rewrite, SIMPLIFY

logger = logging.getLogger(__name__)

LOWER, UPPER = "lower", "upper"

_bound = lru_cache(maxsize=65536)(bound_of)
_solution = lru_cache(maxsize=65536)(equation_solution)

# conditions already produced by reduce_bexp
_REDUCED = set()


def _reduce(b):
    reduced = reduce_bexp(b)
    _REDUCED.add(reduced)
    return reduced


def _depends(term, x):
    return x in free_vars(term)


def _without_atom(factors, k, atom):
    """Factor list with one conjunct removed from the c-factor at position k."""
    atoms = conjuncts(factors[k].cond)
    atoms.remove(atom)
    result = list(factors)
    result[k] = C(conjunction(atoms))
    return result


def _atoms(factors, x):
    """(position, atom) for every conjunct of a c-factor that mentions x."""
    return [(k, atom) for k, f in enumerate(factors) if isinstance(f, C)
            for atom in conjuncts(f.cond) if _depends(atom, x)]


def _find_equation(factors, x):
    """First equation that determines x, preferring ones without a side condition."""
    fallback = None
    for k, atom in _atoms(factors, x):
        solution = _solution(atom, x)
        if solution is None:
            continue
        if solution.condition == TRUE:
            return k, atom, solution
        fallback = fallback or (k, atom, solution)
    return fallback


def _structured(q):
    return any(isinstance(node, (C, Sum, Prod, CallP)) for node in walk(q))


# =================================================================
#                 prepare
# =================================================================

@rule("fold-q", SIMPLIFY, "prepare")
def fold_q(term, ctx):
    if isinstance(term, (AddQ, SubQ, MulQ, DivQ)):
        folded = fold_arith(type(term), term.left, term.right)
        if folded != term:
            return folded
        if isinstance(term, DivQ):
            numerator = factors_of(term.left)
            conditions = [f for f in numerator if isinstance(f, C)]
            if conditions:
                rest = [f for f in numerator if not isinstance(f, C)]
                return product(conditions + [DivQ(product(rest), term.right)])
        return None
    if isinstance(term, C) and isinstance(term.cond, FalseB):
        return ZERO
    if isinstance(term, I2R) and isinstance(term.arg, Const):
        return ConstQ(term.arg.value)
    if isinstance(term, Sum) and term.body == ZERO:
        return ZERO
    if isinstance(term, Prod) and (term.body == ONE or term.domain == ZERO):
        return ONE
    return None


@rule("reduce(=)", SIMPLIFY, "prepare")
def reduce_true(term, ctx):
    if isinstance(term, C) and isinstance(term.cond, TrueB):
        return ONE
    return None


def _assume(q, context, base):
    """q with the c-atoms implied by `context` dropped; ZERO when one contradicts it.

    `base` is the reduced context. Sums and products are not entered.
    """
    if isinstance(q, (AddQ, SubQ)):
        left, right = _assume(q.left, context, base), _assume(q.right, context, base)
        if left is q.left and right is q.right:
            return q
        return fold_arith(type(q), left, right)
    if isinstance(q, DivQ):
        numerator = _assume(q.left, context, base)
        return q if numerator is q.left else fold_arith(DivQ, numerator, q.right)
    if not isinstance(q, (MulQ, C)):
        return q
    changed, out = False, []
    for f in factors_of(q):
        if isinstance(f, C):
            atoms = conjuncts(f.cond)
            kept = []
            for atom in atoms:
                joint = reduce_bexp(conjunction(context + [atom]))
                if isinstance(joint, FalseB):
                    return ZERO
                if joint != base:
                    kept.append(atom)
            if len(kept) != len(atoms):
                changed = True
                if not kept:
                    continue
                f = C(conjunction(kept))
        else:
            g = _assume(f, context, base)
            changed = changed or g is not f
            f = g
        out.append(f)
    return product(out) if changed else q


def _complementary(left, right):
    """R when left is c(a)*R and right is c(b)*R with exactly one of a, b true."""
    lf, rf = factors_of(left), factors_of(right)
    lc = [f for f in lf if isinstance(f, C)]
    rc = [f for f in rf if isinstance(f, C)]
    if len(lc) != 1 or len(rc) != 1:
        return None
    rest = [f for f in lf if not isinstance(f, C)]
    if rest != [f for f in rf if not isinstance(f, C)]:
        return None
    a, b = lc[0].cond, rc[0].cond
    disjoint = reduce_bexp(conjunction([a, b]))
    covering = reduce_bexp(conjunction([Not(a), Not(b)]))
    if isinstance(disjoint, FalseB) and isinstance(covering, FalseB):
        return product(rest)
    return None


@rule("reduceAexp", SIMPLIFY, "prepare")
def reduce_aexp(term, ctx):
    if isinstance(term, C):
        if term.cond in _REDUCED:
            return None
        reduced = _reduce(term.cond)
        return None if reduced == term.cond else C(reduced)
    if isinstance(term, AddQ):
        return _complementary(term.left, term.right)
    if isinstance(term, MulQ):
        factors = factors_of(term)
        conditions = [f for f in factors if isinstance(f, C)]
        if not conditions:
            return None
        rest = [f for f in factors if not isinstance(f, C)]
        if len(conditions) > 1:
            merged = _reduce(conjunction([a for f in conditions for a in conjuncts(f.cond)]))
        else:
            merged = conditions[0].cond
        if not isinstance(merged, (TrueB, FalseB)):
            context = conjuncts(merged)
            base = reduce_bexp(merged)
            assumed = [_assume(f, context, base) for f in rest]
            if any(g is not f for g, f in zip(assumed, rest)):
                rest = assumed
            elif len(conditions) < 2:
                return None
        elif len(conditions) < 2:
            return None
        return product([C(merged)] + rest)
    return None


def _develop(dev):
    """argDev(x, x + c, i) as the arithmetic term start + c*i."""
    try:
        form = linear_form(dev.update, dev.var)
    except SymbolicError:
        form = None
    if form is None or form.coefficient != 1:
        raise UnsupportedSeries(
            f"argument development {format_term(dev)} is not a fixed increment")
    return canonical_aexp(Add(dev.initial, Mul(form.remainder, dev.index)))


@rule("rem(argDev)", SIMPLIFY, "prepare")
def rem_argdev(term, ctx):
    if not isinstance(term, C):
        return None
    changed, atoms = False, []
    for atom in conjuncts(term.cond):
        if isinstance(atom, Eq) and isinstance(atom.right, ArgDev) \
                and isinstance(atom.right.update, AExp):
            atom = Eq(atom.left, _develop(atom.right))
            changed = True
        atoms.append(atom)
    return C(conjunction(atoms)) if changed else None


@rule("move-c", SIMPLIFY, "prepare")
def move_c(term, ctx):
    if not isinstance(term, Sum):
        return None
    x = term.var
    outside, inside = [], []
    for f in factors_of(term.body):
        if not _depends(f, x):
            outside.append(f)
        elif isinstance(f, C):
            atoms = conjuncts(f.cond)
            free = [a for a in atoms if not _depends(a, x)]
            if free:
                outside.append(C(conjunction(free)))
                inside.append(C(conjunction([a for a in atoms if _depends(a, x)])))
            else:
                inside.append(f)
        else:
            inside.append(f)
    if not outside or not inside:
        return None
    return MulQ(product(outside), Sum(x, product(inside)))


@rule("div-sum(+)", SIMPLIFY, "prepare")
def div_sum_plus(term, ctx):
    if not (isinstance(term, Sum) and isinstance(term.body, (AddQ, SubQ))):
        return None
    x, body = term.var, term.body
    if not (_depends(body.left, x) and _depends(body.right, x)):
        return None
    return type(body)(Sum(x, body.left), Sum(x, body.right))


@rule("expand", SIMPLIFY, "prepare")
def expand_sum(term, ctx):
    if not isinstance(term, Sum):
        return None
    x = term.var
    factors = factors_of(term.body)
    if len(factors) < 2:
        return None
    for k, f in enumerate(factors):
        if isinstance(f, (AddQ, SubQ)) and _depends(f, x) and _structured(f):
            others = factors[:k] + factors[k + 1:]
            left, right = product(others + [f.left]), product(others + [f.right])
            if _depends(left, x) and _depends(right, x):
                return type(f)(Sum(x, left), Sum(x, right))
    return None


# =================================================================
#                 eliminate and swap
# =================================================================

@rule("rem-sum(=)", SIMPLIFY, "eliminate")
def rem_sum_eq(term, ctx):
    if not isinstance(term, Sum):
        return None
    factors = factors_of(term.body)
    found = _find_equation(factors, term.var)
    if found is None:
        return None
    k, atom, solution = found
    if solution.condition == FALSE:
        return ZERO
    body = substitute(product(_without_atom(factors, k, atom)), {term.var: solution.value})
    if solution.condition == TRUE:
        return body
    return MulQ(C(solution.condition), body)


def _determined_within(q, x):
    for f in factors_of(q):
        if isinstance(f, C) and any(_solution(a, x) is not None
                                    for a in conjuncts(f.cond) if _depends(a, x)):
            return True
        if isinstance(f, Sum) and _determined_within(f.body, x):
            return True
    return False


@rule("swap-sum", SIMPLIFY, "swap")
def swap_sum(term, ctx):
    if not isinstance(term, Sum):
        return None
    x = term.var
    factors = factors_of(term.body)
    if _find_equation(factors, x) is not None:
        return None
    for k, f in enumerate(factors):
        if isinstance(f, Sum) and _determined_within(f.body, x):
            inner_var = ctx.names(f.var)
            inner = substitute(f.body, {f.var: Var(inner_var)})
            others = factors[:k] + factors[k + 1:]
            return Sum(inner_var, Sum(x, product(others + [inner])))
    return None


# =================================================================
#                 products
# =================================================================

def _interval(domain, x):
    """(lo, hi) when the domain is a c-product bounding x on both sides, else None."""
    factors = factors_of(domain)
    if not all(isinstance(f, C) for f in factors):
        return None
    lo = hi = None
    for atom in (a for f in factors for a in conjuncts(f.cond)):
        if not _depends(atom, x):
            return None
        solution = _solution(atom, x)
        if solution is not None and solution.condition == TRUE:
            if lo is not None or hi is not None:
                return None
            lo = hi = solution.value
            continue
        bound = _bound(atom, x)
        if bound is None:
            return None
        side, value = bound
        if side == LOWER:
            if lo is not None:
                return None
            lo = value
        else:
            if hi is not None:
                return None
            hi = value
    if lo is None or hi is None:
        return None
    return lo, hi


def _guard(body):
    factors = factors_of(body)
    if not all(isinstance(f, C) for f in factors):
        return None
    return conjunction([a for f in factors for a in conjuncts(f.cond)])


def _convex(atom, x):
    if not _depends(atom, x):
        return True
    if isinstance(atom, Not) and isinstance(atom.arg, Eq):
        return False
    return is_linear_in(atom, x)


@rule("rem-prod-mon", SIMPLIFY, "monotone")
def rem_prod_mon(term, ctx):
    if not isinstance(term, Prod):
        return None
    x = term.var
    interval = _interval(term.domain, x)
    guard = _guard(term.body)
    if interval is None or guard is None:
        return None
    if not all(_convex(atom, x) for atom in conjuncts(guard)):
        return None
    lo, hi = interval
    return AddQ(
        product([C(substitute(guard, {x: lo})), C(substitute(guard, {x: hi})), C(Le(lo, hi))]),
        C(Le(hi, Sub(lo, Const(1)))),
    )


@rule("rem-prod-one", SIMPLIFY, "approximate")
def rem_prod_one(term, ctx):
    if not isinstance(term, Prod):
        return None
    guard = _guard(term.body)
    if guard is None:
        return None
    atoms = conjuncts(guard)
    x = term.var
    # the exit guard holds for at most one iteration, and the enclosing sum
    # already selects it
    exact = (term.first_exit and len(atoms) == 1
             and isinstance(atoms[0], Not) and isinstance(atoms[0].arg, Eq)
             and is_linear_in(atoms[0], x) and linear_coefficient(atoms[0], x) != 0)
    if not exact:
        logger.info("rem-prod-one over-approximates %s", format_term(term))
    return Rewrite(ONE, exact)


# =================================================================
#                 split
# =================================================================

def _div_sum(term, side):
    if not isinstance(term, Sum):
        return None
    x = term.var
    factors = factors_of(term.body)
    picks = []
    for k, atom in _atoms(factors, x):
        bound = _bound(atom, x)
        if bound is not None and bound[0] == side:
            picks.append((k, atom, bound[1]))
    if len(picks) < 2:
        return None
    (k1, a1, e1), (k2, a2, e2) = picks[:2]
    keep_first = Sum(x, product(_without_atom(factors, k2, a2)))
    if e1 == e2:
        return keep_first
    keep_second = Sum(x, product(_without_atom(factors, k1, a1)))
    if side == UPPER:
        first, second = Le(e1, e2), Le(e2, Sub(e1, Const(1)))
    else:
        first, second = Le(e2, e1), Le(e1, Sub(e2, Const(1)))
    return AddQ(MulQ(C(first), keep_first), MulQ(C(second), keep_second))


@rule("div-sum(x<=)", SIMPLIFY, "split")
def div_sum_upper(term, ctx):
    return _div_sum(term, UPPER)


@rule("div-sum(<=x)", SIMPLIFY, "split")
def div_sum_lower(term, ctx):
    return _div_sum(term, LOWER)


@rule("rem-not", SIMPLIFY, "split")
def rem_not(term, ctx):
    if not isinstance(term, Sum):
        return None
    x = term.var
    factors = factors_of(term.body)
    for k, atom in _atoms(factors, x):
        if isinstance(atom, Not) and isinstance(atom.arg, Eq) and is_linear_in(atom, x) \
                and linear_coefficient(atom, x) != 0:
            base = _without_atom(factors, k, atom)
            return SubQ(Sum(x, product(base)), Sum(x, product(base + [C(atom.arg)])))
    return None


# =================================================================
#                 series
# =================================================================

@rule("rem-sum(<=)", SIMPLIFY, "series")
def rem_sum_le(term, ctx):
    if not isinstance(term, Sum):
        return None
    x = term.var
    lo = hi = None
    outside, summand = [], []
    for f in factors_of(term.body):
        if not _depends(f, x):
            outside.append(f)
        elif isinstance(f, C):
            kept = []
            for atom in conjuncts(f.cond):
                if not _depends(atom, x):
                    kept.append(atom)
                    continue
                bound = _bound(atom, x)
                if bound is None:
                    return None
                side, value = bound
                if side == LOWER:
                    if lo is not None:
                        return None
                    lo = value
                else:
                    if hi is not None:
                        return None
                    hi = value
            if kept:
                outside.append(C(conjunction(kept)))
        elif _structured(f):
            return None
        else:
            summand.append(f)
    if lo is None or hi is None:
        return None
    try:
        expr = qexp_to_sympy(product(summand)) if summand else sympy.Integer(1)
        closed = sum_closed_form(expr, x, to_sympy(lo), to_sympy(hi))
    except SymbolicError as err:
        raise UnsupportedSeries(f"cannot sum {format_term(product(summand))} over {x}: {err}")
    return product([C(Le(lo, hi))] + outside + [sympy_to_qexp(closed)])
