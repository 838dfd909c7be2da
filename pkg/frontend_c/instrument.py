"""Instrumentation with a resource counter.

The target function (and every void function it calls as a statement)
gets a local counter `step`, an increment after each costed statement and
returns the counter:

    int step;
    step=0;
    ...
    d = 0;
    step++;
    ...
    return step;
"""

import copy
import logging
from dataclasses import dataclass, fields

from pycparser import c_ast, c_parser

from core_ir.errors import InstrumentationError
from frontend_c.parsing import (
    CProgram, STEP, INCDEC_OPS, block_items, is_array, return_type, walk_c,
)

logger = logging.getLogger(__name__)

ASSIGN = "assign"
INCDEC = "incdec"
DECL = "decl"
CALL = "call"


@dataclass(frozen=True)
class CostModel:
    """Constant cost per statement kind."""
    assign: int = 1
    incdec: int = 0
    decl: int = 0
    call: int = 0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"cost of '{f.name}' must be a nonnegative integer, got {value!r}")

    @classmethod
    def kinds(cls):
        return tuple(f.name for f in fields(cls))

    @classmethod
    def zero(cls):
        return cls(assign=0)

    @classmethod
    def parse(cls, specs):
        """CostModel from strings like "assign=1" or "assign=2,decl=1"."""
        if isinstance(specs, str):
            specs = [specs]
        values = {}
        for spec in specs or ():
            for item in spec.split(","):
                if not item.strip():
                    continue
                kind, sep, value = item.partition("=")
                kind = kind.strip()
                if not sep or kind not in cls.kinds():
                    raise ValueError(
                        f"bad cost '{item}': expected kind=value with kind in {', '.join(cls.kinds())}")
                try:
                    values[kind] = int(value)
                except ValueError:
                    raise ValueError(f"bad cost '{item}': {value!r} is not an integer")
        return cls(**values)

    def of(self, kind):
        return getattr(self, kind) if kind else 0

    def __str__(self):
        return ",".join(f"{k}={getattr(self, k)}" for k in self.kinds())


def statement_kind(stmt):
    if isinstance(stmt, c_ast.Assignment):
        return ASSIGN
    if isinstance(stmt, c_ast.UnaryOp) and stmt.op in INCDEC_OPS:
        return INCDEC
    if isinstance(stmt, c_ast.Decl) and stmt.init is not None and not is_array(stmt):
        return DECL
    if isinstance(stmt, c_ast.FuncCall):
        return CALL
    return None


def _statements(code):
    ast = c_parser.CParser().parse("void _snippet(void) {\n" + code + "\n}")
    return list(ast.ext[0].body.block_items or [])


def _increment(k):
    if k == 0:
        return []
    return _statements(f"{STEP}++;" if k == 1 else f"{STEP} += {k};")


def _call_statements(fdef):
    calls = []
    for node in walk_c(fdef.body):
        items = []
        if isinstance(node, c_ast.Compound):
            items = node.block_items or []
        elif isinstance(node, c_ast.For):
            items = [node.stmt]
        elif isinstance(node, c_ast.If):
            items = [node.iftrue, node.iffalse]
        calls += [s.name.name for s in items if isinstance(s, c_ast.FuncCall)]
    return calls


def instrumented_functions(prog):
    """The target plus the void functions it reaches through call statements."""
    functions = prog.functions()
    todo, found = [prog.annotation.target], []
    while todo:
        name = todo.pop(0)
        if name in found:
            continue
        found.append(name)
        todo += [callee for callee in _call_statements(functions[name])
                 if return_type(functions[callee]) == "void"]
    return found


def uses_step(fdef):
    for node in walk_c(fdef):
        if isinstance(node, c_ast.ID) and node.name == STEP:
            return True
        if isinstance(node, c_ast.Decl) and node.name == STEP:
            return True
    return False


class _Instrumenter:
    def __init__(self, cost, instrumented):
        self.cost = cost
        self.instrumented = set(instrumented)

    def compound(self, node):
        return c_ast.Compound(self.items(block_items(node)), node.coord if node is not None else None)

    def items(self, stmts):
        out = []
        for stmt in stmts:
            if isinstance(stmt, c_ast.For):
                stmt.stmt = self.compound(stmt.stmt)
            elif isinstance(stmt, c_ast.If):
                stmt.iftrue = self.compound(stmt.iftrue)
                if stmt.iffalse is not None:
                    stmt.iffalse = self.compound(stmt.iffalse)
            elif isinstance(stmt, c_ast.Compound):
                stmt = self.compound(stmt)
            kind = statement_kind(stmt)
            if isinstance(stmt, c_ast.FuncCall) and stmt.name.name in self.instrumented:
                stmt = c_ast.Assignment("+=", c_ast.ID(STEP), stmt, stmt.coord)
            out.append(stmt)
            out.extend(_increment(self.cost.of(kind)))
        return out

    def function(self, fdef):
        items = list(fdef.body.block_items or [])
        if items and isinstance(items[-1], c_ast.Return):
            items.pop()
        items = self.items(items)
        head = 0
        while head < len(items) and isinstance(items[head], c_ast.Decl) and items[head].init is None:
            head += 1
        prologue = _statements(f"int {STEP};\n{STEP}=0;")
        epilogue = _statements(f"return {STEP};")
        fdef.body.block_items = items[:head] + prologue + items[head:] + epilogue
        fdef.decl.type.type.type.names = ["int"]


def instrument(prog, cost=None):
    """Return a copy of prog counting the cost of the statements executed by the target."""
    cost = cost or CostModel()
    if prog.annotation is None:
        raise InstrumentationError("no '// Toanalyze: f(...)' annotation names the function to instrument")
    ast = copy.deepcopy(prog.ast)
    result = CProgram(ast, prog.annotation, prog.name)
    names = instrumented_functions(result)
    functions = result.functions()
    for name in names:
        if uses_step(functions[name]):
            raise InstrumentationError(
                f"'{name}' already uses a variable named '{STEP}'; is it instrumented already?")
    instrumenter = _Instrumenter(cost, names)
    for name in names:
        instrumenter.function(functions[name])
    logger.info("instrumented %s with cost model %s", ", ".join(names), cost)
    return result
