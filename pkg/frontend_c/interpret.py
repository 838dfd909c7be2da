"""Direct interpreter for the mini-C subset.

Runs a function of a CProgram on concrete arguments. Arrays are sparse
(unwritten cells read as 0), division truncates towards zero as in C.
"""

import logging
from collections import defaultdict

from pycparser import c_ast

from core_ir.errors import DivByZero, EvaluationError, UnsupportedConstruct
from frontend_c.parsing import block_items, c_params, int_literal, loop_header

logger = logging.getLogger(__name__)


class _Return(Exception):
    def __init__(self, value):
        self.value = value


def c_div(a, b):
    if b == 0:
        raise DivByZero("division by zero in C code")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def c_mod(a, b):
    return a - b * c_div(a, b)


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": c_div,
    "%": c_mod,
    "<": lambda a, b: int(a < b),
    "<=": lambda a, b: int(a <= b),
    ">": lambda a, b: int(a > b),
    ">=": lambda a, b: int(a >= b),
    "==": lambda a, b: int(a == b),
    "!=": lambda a, b: int(a != b),
}


class CInterpreter:
    def __init__(self, prog):
        self.functions = prog.functions()

    def call(self, name, args):
        fdef = self.functions.get(name)
        if fdef is None:
            raise EvaluationError(f"no function named '{name}'")
        params = c_params(fdef)
        if len(args) != len(params):
            raise EvaluationError(f"'{name}' takes {len(params)} arguments, got {len(args)}")
        env = {}
        for (pname, array), value in zip(params, args):
            if array:
                env[pname] = value if isinstance(value, defaultdict) else _array(value)
            else:
                env[pname] = int(value)
        try:
            self.block(block_items(fdef.body), env)
        except _Return as ret:
            return ret.value
        return None

    # --- statements ---

    def block(self, stmts, env):
        for stmt in stmts:
            self.execute(stmt, env)

    def execute(self, stmt, env):
        if isinstance(stmt, c_ast.Decl):
            if isinstance(stmt.type, c_ast.ArrayDecl):
                env[stmt.name] = defaultdict(int)
            else:
                env[stmt.name] = self.value(stmt.init, env) if stmt.init is not None else 0
        elif isinstance(stmt, c_ast.DeclList):
            for decl in stmt.decls:
                self.execute(decl, env)
        elif isinstance(stmt, c_ast.Assignment):
            self.assignment(stmt, env)
        elif isinstance(stmt, c_ast.UnaryOp):
            self.value(stmt, env)
        elif isinstance(stmt, c_ast.FuncCall):
            self.value(stmt, env)
        elif isinstance(stmt, c_ast.Compound):
            self.block(block_items(stmt), env)
        elif isinstance(stmt, c_ast.If):
            branch = stmt.iftrue if self.value(stmt.cond, env) else stmt.iffalse
            self.block(block_items(branch), env)
        elif isinstance(stmt, c_ast.For):
            header = loop_header(stmt)
            env[header.index] = self.value(header.start, env)
            while self.value(stmt.cond, env):
                self.block(block_items(stmt.stmt), env)
                self.execute(stmt.next, env)
        elif isinstance(stmt, c_ast.Return):
            raise _Return(self.value(stmt.expr, env) if stmt.expr is not None else None)
        elif not isinstance(stmt, c_ast.EmptyStatement):
            raise UnsupportedConstruct(f"cannot execute {type(stmt).__name__} at {stmt.coord}")

    def assignment(self, stmt, env):
        value = self.value(stmt.rvalue, env)
        if stmt.op != "=":
            value = _BINARY[stmt.op[0]](self.value(stmt.lvalue, env), value)
        self.store(stmt.lvalue, value, env)
        return value

    def store(self, lvalue, value, env):
        if isinstance(lvalue, c_ast.ID):
            env[lvalue.name] = value
        else:
            array = self.value(lvalue.name, env)
            array[self.value(lvalue.subscript, env)] = value

    # --- expressions ---

    def value(self, node, env):
        if isinstance(node, c_ast.Constant):
            return int_literal(node)
        if isinstance(node, c_ast.ID):
            if node.name not in env:
                raise EvaluationError(f"unknown variable '{node.name}' at {node.coord}")
            return env[node.name]
        if isinstance(node, c_ast.ArrayRef):
            return self.value(node.name, env)[self.value(node.subscript, env)]
        if isinstance(node, c_ast.UnaryOp):
            if node.op in ("++", "--", "p++", "p--"):
                old = self.value(node.expr, env)
                new = old + (1 if "++" in node.op else -1)
                self.store(node.expr, new, env)
                return old if node.op.startswith("p") else new
            operand = self.value(node.expr, env)
            return {"-": -operand, "+": operand, "!": int(not operand)}[node.op]
        if isinstance(node, c_ast.BinaryOp):
            if node.op == "&&":
                return int(bool(self.value(node.left, env)) and bool(self.value(node.right, env)))
            if node.op == "||":
                return int(bool(self.value(node.left, env)) or bool(self.value(node.right, env)))
            return _BINARY[node.op](self.value(node.left, env), self.value(node.right, env))
        if isinstance(node, c_ast.FuncCall):
            exprs = node.args.exprs if node.args else []
            return self.call(node.name.name, [self.value(e, env) for e in exprs])
        if isinstance(node, c_ast.Assignment):
            return self.assignment(node, env)
        raise UnsupportedConstruct(f"cannot evaluate {type(node).__name__} at {node.coord}")


def _array(values):
    cells = defaultdict(int)
    if isinstance(values, dict):
        cells.update(values)
    elif values is not None:
        cells.update(enumerate(values))
    return cells


def interpret_c(prog, fname, args):
    """Run fname on args (ints for scalars; lists, dicts or None for arrays).

    Returns the returned integer, None for a void function.
    """
    result = CInterpreter(prog).call(fname, list(args))
    logger.debug("interpret %s%s = %s", fname, tuple(args), result)
    return result
