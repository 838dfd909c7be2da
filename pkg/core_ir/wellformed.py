"""Well-formedness of intermediate programs.

A program is well-formed when its functions can be enumerated so that
every function either

  1. is `if b then e0 else f(e1, ..., en)` with the self-call as the only
     recursion and all other calls going to lower indices, or
  2. is non-recursive and calls only lower indices.
"""

import logging
from dataclasses import dataclass, replace

from core_ir.errors import WellFormednessError
from core_ir.terms import If, Call, CallP, C, Eq
from core_ir.traversal import walk

logger = logging.getLogger(__name__)

MUTUAL_RECURSION = "MutualRecursion"
NON_TAIL_RECURSION = "NonTailRecursion"
FORWARD_CALL = "ForwardCall"
UNDEFINED_FUNCTION = "UndefinedFunction"
ARITY_MISMATCH = "ArityMismatch"
DUPLICATE_DEFINITION = "DuplicateDefinition"


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    function: str
    message: str

    def __str__(self):
        return f"{self.rule} in {self.function}: {self.message}"


def _calls(term):
    return [node for node in walk(term) if isinstance(node, Call)]


def recursion_shape(fdef):
    """1 for guarded tail recursion, 2 for non-recursive bodies, None otherwise."""
    self_calls = [c for c in _calls(fdef.body) if c.name == fdef.name]
    if not self_calls:
        return 2
    body = fdef.body
    if isinstance(body, If) and isinstance(body.orelse, Call) and body.orelse.name == fdef.name:
        nested = _calls(body.cond) + _calls(body.then)
        for arg in body.orelse.args:
            nested += _calls(arg)
        if all(c.name != fdef.name for c in nested):
            return 1
    return None


def _call_graph(funcs):
    names = {f.name for f in funcs}
    return {f.name: {c.name for c in _calls(f.body) if c.name != f.name and c.name in names}
            for f in funcs}


def _cycles(graph):
    """Strongly connected components with more than one member (Tarjan)."""
    index, low, on_stack, stack = {}, {}, set(), []
    components = []
    counter = [0]

    def visit(node):
        index[node] = low[node] = counter[0]
        counter[0] += 1
        stack.append(node)
        on_stack.add(node)
        for succ in sorted(graph[node]):
            if succ not in index:
                visit(succ)
                low[node] = min(low[node], low[succ])
            elif succ in on_stack:
                low[node] = min(low[node], index[succ])
        if low[node] == index[node]:
            component = set()
            while True:
                member = stack.pop()
                on_stack.discard(member)
                component.add(member)
                if member == node:
                    break
            if len(component) > 1:
                components.append(component)

    for node in sorted(graph):
        if node not in index:
            visit(node)
    return components


def index_functions(funcs):
    """Re-index functions callees-first, keeping textual order among independent ones.

    When the call graph has a cycle no enumeration exists; the textual
    order is kept and check_well_formed reports the cycle.
    """
    graph = _call_graph(funcs)
    if _cycles(graph):
        return tuple(replace(f, index=i + 1) for i, f in enumerate(funcs))
    order = []
    placed = set()
    by_name = {f.name: f for f in funcs}

    def place(name):
        if name in placed:
            return
        placed.add(name)
        for callee in sorted(graph[name], key=lambda n: [f.name for f in funcs].index(n)):
            place(callee)
        order.append(by_name[name])

    for f in funcs:
        place(f.name)
    return tuple(replace(f, index=i + 1) for i, f in enumerate(order))


def enumerate_functions(funcs):
    """index_functions, refusing call graphs without an enumeration."""
    components = _cycles(_call_graph(funcs))
    if components:
        raise WellFormednessError([
            Diagnostic(MUTUAL_RECURSION, name, "cycle through " + ", ".join(sorted(component)))
            for component in components for name in sorted(component)
        ])
    return index_functions(funcs)


def check_well_formed(program):
    """Return the list of diagnostics; an empty list means well-formed."""
    diagnostics = []
    funcs = {}
    for f in program.funcs:
        if f.name in funcs:
            diagnostics.append(Diagnostic(DUPLICATE_DEFINITION, f.name, "defined more than once"))
        funcs[f.name] = f
    probs = {p.name: p for p in program.probs}

    cyclic = set()
    for component in _cycles(_call_graph(program.funcs)):
        cyclic |= component
        members = ", ".join(sorted(component))
        for name in sorted(component):
            diagnostics.append(Diagnostic(MUTUAL_RECURSION, name, f"cycle through {members}"))

    for f in program.funcs:
        if recursion_shape(f) is None:
            diagnostics.append(Diagnostic(
                NON_TAIL_RECURSION, f.name,
                "recursive call is not the else-branch of a top-level if"))
        for call in _calls(f.body):
            if call.name == f.name:
                continue
            callee = funcs.get(call.name)
            if callee is None:
                diagnostics.append(Diagnostic(UNDEFINED_FUNCTION, f.name, f"calls unknown '{call.name}'"))
                continue
            if len(call.args) != len(callee.params):
                diagnostics.append(Diagnostic(
                    ARITY_MISMATCH, f.name,
                    f"'{call.name}' expects {len(callee.params)} arguments, got {len(call.args)}"))
            if callee.index >= f.index and not (f.name in cyclic and call.name in cyclic):
                diagnostics.append(Diagnostic(
                    FORWARD_CALL, f.name,
                    f"calls '{call.name}' (index {callee.index}) from index {f.index}"))

    for p in program.probs:
        for node in walk(p.body):
            if isinstance(node, CallP):
                target = probs.get(node.name)
                if target is None:
                    diagnostics.append(Diagnostic(UNDEFINED_FUNCTION, p.name, f"calls unknown '{node.name}'"))
                elif len(target.params) != len(node.args):
                    diagnostics.append(Diagnostic(
                        ARITY_MISMATCH, p.name,
                        f"'{node.name}' expects {len(target.params)} arguments, got {len(node.args)}"))
            elif isinstance(node, C) and isinstance(node.cond, Eq):
                for call in _calls(node.cond.right):
                    if call.name not in funcs:
                        diagnostics.append(Diagnostic(UNDEFINED_FUNCTION, p.name, f"calls unknown '{call.name}'"))

    for d in diagnostics:
        logger.debug("well-formedness: %s", d)
    return diagnostics


def ensure_well_formed(program):
    diagnostics = check_well_formed(program)
    if diagnostics:
        raise WellFormednessError(diagnostics)
