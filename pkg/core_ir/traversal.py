"""Generic walks over terms: free variables, substitution, alpha-equivalence."""

from functools import lru_cache

from core_ir.terms import (
    Term, Var, Sum, Prod, ArgDev, Call, If, CallP, C, Eq,
)


def map_children(term, fn):
    """Apply `fn` to every direct sub-term; returns `term` itself when nothing changed."""
    changed = False
    values = {}
    for name in term.__dataclass_fields__:
        value = getattr(term, name)
        if isinstance(value, Term):
            new = fn(value)
            changed = changed or new is not value
            values[name] = new
        elif isinstance(value, tuple):
            new = tuple(fn(v) if isinstance(v, Term) else v for v in value)
            changed = changed or any(a is not b for a, b in zip(new, value))
            values[name] = new
        else:
            values[name] = value
    if not changed:
        return term
    return type(term)(**values)


def children(term):
    for name in term.__dataclass_fields__:
        value = getattr(term, name)
        if isinstance(value, Term):
            yield value
        elif isinstance(value, tuple):
            for v in value:
                if isinstance(v, Term):
                    yield v


def walk(term):
    """Pre-order iteration over all sub-terms, binders included."""
    stack = [term]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(children(node))))


@lru_cache(maxsize=65536)
def free_vars(term):
    if isinstance(term, Var):
        return frozenset((term.name,))
    if isinstance(term, Sum):
        return free_vars(term.body) - {term.var}
    if isinstance(term, Prod):
        return (free_vars(term.domain) | free_vars(term.body)) - {term.var}
    if isinstance(term, ArgDev):
        start = free_vars(term.start) if term.start is not None else frozenset((term.var,))
        return (free_vars(term.update) - {term.var}) | free_vars(term.index) | start
    result = frozenset()
    for child in children(term):
        result |= free_vars(child)
    return result


def bound_vars(term):
    names = set()
    for node in walk(term):
        if isinstance(node, (Sum, Prod, ArgDev)):
            names.add(node.var)
    return names


def all_vars(term):
    names = set(bound_vars(term))
    for node in walk(term):
        if isinstance(node, Var):
            names.add(node.name)
    return names


def fresh_name(base, avoid):
    if base not in avoid:
        return base
    k = 1
    while f"{base}{k}" in avoid:
        k += 1
    return f"{base}{k}"


class FreshNames:
    """Name supply that never hands out the same name twice."""

    def __init__(self, taken=()):
        self.taken = set(taken)

    def reserve(self, names):
        self.taken.update(names)

    def __call__(self, base):
        name = fresh_name(base, self.taken)
        self.taken.add(name)
        return name


def substitute(term, bindings):
    """Capture-avoiding simultaneous substitution of variables by expressions."""
    bindings = {k: v for k, v in bindings.items()
                if not (isinstance(v, Var) and v.name == k)}
    if not bindings:
        return term
    return _subst(term, bindings)


def _subst(term, bindings):
    if isinstance(term, Var):
        return bindings.get(term.name, term)
    fv = free_vars(term)
    if not any(name in fv for name in bindings):
        return term
    if isinstance(term, Sum):
        var, (body,) = _enter_binder(term.var, (term.body,), bindings)
        return Sum(var, body)
    if isinstance(term, Prod):
        var, (domain, body) = _enter_binder(term.var, (term.domain, term.body), bindings)
        return Prod(var, domain, body, term.first_exit)
    if isinstance(term, ArgDev):
        return _subst_argdev(term, bindings)
    return map_children(term, lambda child: _subst(child, bindings))


def _binding_vars(bindings):
    names = set()
    for value in bindings.values():
        names |= free_vars(value)
    return names


def _enter_binder(var, scoped, bindings):
    inner = {k: v for k, v in bindings.items() if k != var}
    if not inner:
        return var, scoped
    incoming = _binding_vars(inner)
    if var in incoming:
        avoid = set(incoming) | set(inner) | {var}
        for part in scoped:
            avoid |= all_vars(part)
        renamed = fresh_name(var, avoid)
        inner[var] = Var(renamed)
        var = renamed
    return var, tuple(_subst(part, inner) for part in scoped)


def _subst_argdev(term, bindings):
    initial = _subst(term.start, bindings) if term.start is not None \
        else bindings.get(term.var, Var(term.var))
    var, (update,) = _enter_binder(term.var, (term.update,), bindings)
    start = None if initial == Var(var) else initial
    return ArgDev(var, update, _subst(term.index, bindings), start)


def _canonical(term, env, counter):
    if isinstance(term, Var):
        return Var(env.get(term.name, term.name))
    if isinstance(term, (Sum, Prod)):
        name = f"%{counter[0]}"
        counter[0] += 1
        scope = dict(env, **{term.var: name})
        if isinstance(term, Sum):
            return Sum(name, _canonical(term.body, scope, counter))
        return Prod(name, _canonical(term.domain, scope, counter),
                    _canonical(term.body, scope, counter), term.first_exit)
    if isinstance(term, ArgDev):
        start = _canonical(term.initial, env, counter)
        name = f"%{counter[0]}"
        counter[0] += 1
        scope = dict(env, **{term.var: name})
        return ArgDev(name, _canonical(term.update, scope, counter),
                      _canonical(term.index, env, counter), start)
    return map_children(term, lambda child: _canonical(child, env, counter))


def alpha_equivalent(left, right):
    return _canonical(left, {}, [0]) == _canonical(right, {}, [0])


def contains(term, kinds):
    return any(isinstance(node, kinds) for node in walk(term))


def is_pure(q):
    """No function calls, no if-expressions and no probability calls."""
    for node in walk(q):
        if isinstance(node, (Call, If, CallP)):
            return False
    return True


def is_closed(q):
    return is_pure(q) and not contains(q, (Sum, Prod))


def replace_all(term, old, new):
    """Replace every occurrence of `old` (compared structurally) by `new`."""
    if term == old:
        return new
    return map_children(term, lambda child: replace_all(child, old, new))


def calls_in(term):
    return [node for node in walk(term) if isinstance(node, Call)]


def c_equations(q):
    """Yield every c(z = e) node of a probability term."""
    for node in walk(q):
        if isinstance(node, C) and isinstance(node.cond, Eq):
            yield node
