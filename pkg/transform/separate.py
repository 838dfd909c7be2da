"""Separation: remove function and probability calls from a probability body.

Every call is exposed as `c(z = f(...))` and replaced by its meaning:
non-recursive functions are unfolded, recursive ones become a sum over
the number of recursions, and probability calls are inlined.
"""

import logging

from core_ir.errors import ArityMismatch, UnsupportedRecursion, UnsupportedSeries, SymbolicError
from core_ir.syntax import format_term
from core_ir.terms import (
    AExp, Var, Const, Add, Sub, Eq, Le, Not, Call, If, ArgDev,
    C, AddQ, MulQ, Sum, Prod, CallP, product,
)
from core_ir.traversal import free_vars, substitute, map_children
from core_ir.wellformed import recursion_shape
from symbolic.algebra import linear_form
from transform.rules import rule, SEPARATE

logger = logging.getLogger(__name__)


def _call_equation(term):
    """(z, call) for a term c(z = f(...)), else None."""
    if isinstance(term, C) and isinstance(term.cond, Eq) and isinstance(term.cond.right, Call):
        return term.cond.left, term.cond.right
    return None


def _freshen(term, ctx):
    """Rename every binder of an inlined body to a name unused so far."""
    if isinstance(term, Sum):
        var = ctx.names(term.var)
        return Sum(var, _freshen(substitute(term.body, {term.var: Var(var)}), ctx))
    if isinstance(term, Prod):
        var = ctx.names(term.var)
        renamed = {term.var: Var(var)}
        return Prod(var, _freshen(substitute(term.domain, renamed), ctx),
                    _freshen(substitute(term.body, renamed), ctx), term.first_exit)
    return map_children(term, lambda child: _freshen(child, ctx))


def _check_arity(name, params, args):
    if len(params) != len(args):
        raise ArityMismatch(f"'{name}' expects {len(params)} arguments, got {len(args)}",
                            phase=SEPARATE)


@rule("rem-P", SEPARATE, "separate")
def rem_p(term, ctx):
    if not isinstance(term, CallP):
        return None
    pdef = ctx.probability(term.name)
    _check_arity(term.name, pdef.params, term.args)
    return _freshen(substitute(pdef.body, dict(zip(pdef.params, term.args))), ctx)


@rule("rem-if", SEPARATE, "separate")
def rem_if(term, ctx):
    if not (isinstance(term, C) and isinstance(term.cond, Eq) and isinstance(term.cond.right, If)):
        return None
    z, branch = term.cond.left, term.cond.right
    return AddQ(MulQ(C(branch.cond), C(Eq(z, branch.then))),
                MulQ(C(Not(branch.cond)), C(Eq(z, branch.orelse))))


@rule("f-simple", SEPARATE, "separate")
def f_simple(term, ctx):
    match = _call_equation(term)
    if match is None:
        return None
    z, call = match
    fdef = ctx.function(call.name)
    _check_arity(call.name, fdef.params, call.args)
    if recursion_shape(fdef) != 2 or not all(isinstance(a, Var) for a in call.args):
        return None
    return C(Eq(z, substitute(fdef.body, dict(zip(fdef.params, call.args)))))


@rule("no-nest(f)", SEPARATE, "separate")
def no_nest_f(term, ctx):
    match = _call_equation(term)
    if match is None:
        return None
    z, call = match
    fdef = ctx.function(call.name)
    recursive = recursion_shape(fdef) == 1
    args, equations, binders, seen = [], [], [], set()
    for arg in call.args:
        if isinstance(arg, Var) and not (recursive and arg.name in seen):
            seen.add(arg.name)
            args.append(arg)
            continue
        u = ctx.names("u")
        binders.append(u)
        args.append(Var(u))
        equations.append(C(Eq(Var(u), arg)))
    if not binders:
        return None
    body = product([C(Eq(z, Call(call.name, tuple(args))))] + equations)
    for u in reversed(binders):
        body = Sum(u, body)
    return body


@rule("f-rec", SEPARATE, "separate")
def f_rec(term, ctx):
    match = _call_equation(term)
    if match is None:
        return None
    z, call = match
    fdef = ctx.function(call.name)
    if recursion_shape(fdef) != 1:
        return None
    names = [a.name for a in call.args if isinstance(a, Var)]
    if len(names) != len(call.args) or len(set(names)) != len(names):
        return None

    guard, base, updates = fdef.body.cond, fdef.body.then, fdef.body.orelse.args
    params = fdef.params
    invariant = {y for y, e in zip(params, updates) if e == Var(y)}
    for y, e in zip(params, updates):
        if not free_vars(e) <= {y} | invariant:
            raise UnsupportedRecursion(
                f"update of '{y}' in {fdef.name} reads {', '.join(sorted(free_vars(e) - {y}))}, "
                "which also change between recursions")

    outer = {y: Var(x) for y, x in zip(params, names)}
    developments = {y: substitute(e, outer) for y, e in zip(params, updates)}

    def iteration(index, cond, extra):
        """Sums over the parameter values after `index` recursions."""
        used = [y for y in params if y not in invariant and y in free_vars(cond) | extra]
        binders = {y: ctx.names(index) for y in used}
        at = dict(outer, **{y: Var(v) for y, v in binders.items()})
        factors = [C(Eq(Var(binders[y]),
                        ArgDev(outer[y].name, developments[y], Var(index)))) for y in used]
        return binders, at, factors

    i = ctx.names("i")
    binders_i, at_i, devs_i = iteration(i, guard, free_vars(base))
    block_i = product([C(substitute(guard, at_i))] + devs_i + [C(Eq(z, substitute(base, at_i)))])
    for v in reversed(list(binders_i.values())):
        block_i = Sum(v, block_i)

    j = ctx.names("j")
    binders_j, at_j, devs_j = iteration(j, guard, frozenset())
    block_j = product([C(Not(substitute(guard, at_j)))] + devs_j)
    for v in reversed(list(binders_j.values())):
        block_j = Sum(v, block_j)

    domain = MulQ(C(Le(Const(0), Var(j))), C(Le(Var(j), Sub(Var(i), Const(1)))))
    logger.debug("f-rec on %s with recursion index %s", fdef.name, i)
    earlier = Prod(j, domain, block_j, first_exit=True)
    return Sum(i, product([C(Le(Const(0), Var(i))), block_i, earlier]))


@rule("no-nest(argDev)", SEPARATE, "separate")
def no_nest_argdev(term, ctx):
    if not (isinstance(term, C) and isinstance(term.cond, Eq)
            and isinstance(term.cond.right, ArgDev)):
        return None
    z, dev = term.cond.left, term.cond.right
    if isinstance(dev.update, AExp):
        return None
    if not is_additive(ctx.program, dev.update, dev.var):
        raise UnsupportedSeries(
            f"the update {format_term(dev.update)} does not add a fixed amount to '{dev.var}'")
    d = ctx.names("d")
    offset = substitute(dev.update, {dev.var: Const(0)})
    stepped = ArgDev(dev.var, Add(Var(dev.var), Var(d)), dev.index, dev.start)
    return Sum(d, MulQ(C(Eq(z, stepped)), C(Eq(Var(d), offset))))


# =================================================================
#                 Additivity
# =================================================================

def is_additive(program, e, x, memo=None):
    """True when e = x + D for a D that does not depend on x."""
    memo = {} if memo is None else memo
    if x not in free_vars(e):
        return False
    if isinstance(e, AExp):
        try:
            return linear_form(e, x).coefficient == 1
        except SymbolicError:
            return False
    if isinstance(e, If):
        return (x not in free_vars(e.cond)
                and is_additive(program, e.then, x, memo)
                and is_additive(program, e.orelse, x, memo))
    if isinstance(e, Call):
        positions = [k for k, arg in enumerate(e.args) if x in free_vars(arg)]
        if len(positions) != 1:
            return False
        k = positions[0]
        return is_additive(program, e.args[k], x, memo) and _function_additive(program, e.name, k, memo)
    return False


def _function_additive(program, name, k, memo):
    key = (name, k)
    if key in memo:
        return memo[key]
    memo[key] = True
    fdef = program.func(name)
    y = fdef.params[k]
    shape = recursion_shape(fdef)
    if shape == 2:
        result = is_additive(program, fdef.body, y, memo)
    elif shape == 1:
        updates = fdef.body.orelse.args
        result = (y not in free_vars(fdef.body.cond)
                  and is_additive(program, fdef.body.then, y, memo)
                  and is_additive(program, updates[k], y, memo)
                  and all(y not in free_vars(u) for m, u in enumerate(updates) if m != k))
    else:
        result = False
    memo[key] = result
    return result
