"""Slicing and translation of instrumented mini-C into the intermediate language.

Only what the counter depends on is translated. Every loop that updates
the counter becomes one tail-recursive function; the counter is passed
along as an argument, so the loops of the matrix multiplication become

    for3(i3,step,n) = if n =< i3 then step else for3(i3+1,step+1,n)
    for2(i2,step,n) = if n =< i2 then step else for2(i2+1,for3(0,step+2,n),n)
    for1(i1,step,n) = if n =< i1 then step else for1(i1+1,for2(0,step,n),n)
    tmulta(step,n) = for1(0,step,n)
"""

import logging
from dataclasses import dataclass

from pycparser import c_ast

from core_ir.errors import SliceFailure, UnsupportedConstruct, CSyntaxError
from core_ir.terms import (
    Var, Const, Add, Sub, Mul, Div, Max, Eq, Lt, Le, Not, And,
    Call, If, C, FuncDef, ProbDef, Program, product,
)
from core_ir.traversal import free_vars, fresh_name
from core_ir.wellformed import index_functions, ensure_well_formed
from frontend_c.parsing import (
    STEP, block_items, loop_header, assigned_names, updates_step, called_functions,
    c_params, declared_names, int_literal, is_array, walk_c,
)
from frontend_c.instrument import uses_step

logger = logging.getLogger(__name__)

INPUT_DISTRIBUTION = "P"


class _Unknown:
    """A value the translation cannot express; using it raises `error`."""

    def __init__(self, reason, error=UnsupportedConstruct):
        self.reason = reason
        self.error = error

    def fail(self, name):
        raise self.error(f"the counter depends on '{name}', which {self.reason}")


@dataclass(frozen=True)
class CTranslation:
    program: Program
    function: str
    distribution: str


# =================================================================
#                 Expressions
# =================================================================

def _lookup(name, env):
    if name == STEP:
        raise UnsupportedConstruct(f"'{STEP}' may only be incremented")
    if name not in env:
        raise UnsupportedConstruct(f"unknown variable '{name}'")
    value = env[name]
    if isinstance(value, _Unknown):
        value.fail(name)
    return value


def aexp_of(node, env):
    """Translate a C arithmetic expression under env (variable -> AExp)."""
    if isinstance(node, c_ast.Constant):
        return Const(int_literal(node))
    if isinstance(node, c_ast.ID):
        return _lookup(node.name, env)
    if isinstance(node, c_ast.UnaryOp) and node.op in ("-", "+"):
        inner = aexp_of(node.expr, env)
        return inner if node.op == "+" else Sub(Const(0), inner)
    if isinstance(node, c_ast.BinaryOp) and node.op in ("+", "-", "*", "/", "%"):
        left, right = aexp_of(node.left, env), aexp_of(node.right, env)
        if node.op == "+":
            return Add(left, right)
        if node.op == "-":
            return Sub(left, right)
        if node.op == "*":
            return Mul(left, right)
        if node.op == "/":
            return Div(left, right)
        return Sub(left, Mul(right, Div(left, right)))
    if isinstance(node, c_ast.ArrayRef):
        array = node.name.name if isinstance(node.name, c_ast.ID) else "an array"
        raise SliceFailure(f"the counter depends on the contents of '{array}' at {node.coord}")
    if isinstance(node, c_ast.FuncCall):
        raise UnsupportedConstruct(f"the counter depends on the value returned by "
                                   f"'{node.name.name}' at {node.coord}")
    raise UnsupportedConstruct(f"cannot translate expression at {node.coord}")


def bexp_of(node, env):
    if isinstance(node, c_ast.BinaryOp):
        if node.op == "&&":
            return And(bexp_of(node.left, env), bexp_of(node.right, env))
        if node.op == "||":
            return Not(And(Not(bexp_of(node.left, env)), Not(bexp_of(node.right, env))))
        relations = {
            "<": lambda a, b: Lt(a, b),
            "<=": lambda a, b: Le(a, b),
            ">": lambda a, b: Lt(b, a),
            ">=": lambda a, b: Le(b, a),
            "==": lambda a, b: Eq(a, b),
            "!=": lambda a, b: Not(Eq(a, b)),
        }
        if node.op in relations:
            return relations[node.op](aexp_of(node.left, env), aexp_of(node.right, env))
    if isinstance(node, c_ast.UnaryOp) and node.op == "!":
        return Not(bexp_of(node.expr, env))
    return Not(Eq(aexp_of(node, env), Const(0)))


def _increment(e, k):
    """e + k, merging constant increments."""
    if isinstance(e, Add) and isinstance(e.right, Const) and isinstance(k, Const):
        total = e.right.value + k.value
        return e.left if total == 0 else Add(e.left, Const(total))
    if isinstance(k, Const) and k.value == 0:
        return e
    return Add(e, k)


# =================================================================
#                 Statements
# =================================================================

class _Translator:
    def __init__(self):
        self.funcs = []
        # generated function -> position of the counter argument
        self.counter_position = {}
        self.callees = {}
        self.loop_names = {}
        self.order = {}

    def bump(self, e, k):
        """Add k to the counter value e; calls and branches take the increment inside."""
        if isinstance(e, Call) and e.name in self.counter_position:
            pos = self.counter_position[e.name]
            args = list(e.args)
            args[pos] = self.bump(args[pos], k)
            return Call(e.name, tuple(args))
        if isinstance(e, If):
            return If(e.cond, self.bump(e.then, k), self.bump(e.orelse, k))
        return _increment(e, k)

    def assign(self, env, name, compute):
        try:
            env[name] = compute()
        except (SliceFailure, UnsupportedConstruct) as exc:
            env[name] = _Unknown(f"cannot be translated ({exc})", type(exc))

    def block(self, stmts, step, env):
        for stmt in stmts:
            step = self.statement(stmt, step, env)
        return step

    def statement(self, stmt, step, env):
        if isinstance(stmt, c_ast.Decl):
            if stmt.name == STEP:
                return step
            if is_array(stmt):
                env[stmt.name] = _Unknown("is an array", SliceFailure)
            elif stmt.init is not None:
                self.assign(env, stmt.name, lambda: aexp_of(stmt.init, env))
            else:
                env[stmt.name] = _Unknown("is used before it is assigned")
            return step
        if isinstance(stmt, c_ast.Assignment):
            return self.assignment(stmt, step, env)
        if isinstance(stmt, c_ast.UnaryOp):
            target = stmt.expr
            delta = 1 if "++" in stmt.op else -1
            if isinstance(target, c_ast.ID) and target.name == STEP:
                if delta < 0:
                    raise UnsupportedConstruct(f"the counter is decremented at {stmt.coord}")
                return self.bump(step, Const(1))
            if isinstance(target, c_ast.ID):
                self.assign(env, target.name, lambda: Add(_lookup(target.name, env), Const(delta)))
            return step
        if isinstance(stmt, c_ast.For):
            return self.loop(stmt, step, env)
        if isinstance(stmt, c_ast.If):
            return self.branch(stmt, step, env)
        if isinstance(stmt, c_ast.Compound):
            return self.block(block_items(stmt), step, env)
        if isinstance(stmt, c_ast.Return):
            if stmt.expr is not None and not (isinstance(stmt.expr, c_ast.ID) and stmt.expr.name == STEP):
                raise UnsupportedConstruct(f"an instrumented function must return '{STEP}' at {stmt.coord}")
            return step
        # call statements without a counter and empty statements
        return step

    def assignment(self, stmt, step, env):
        lvalue = stmt.lvalue
        if isinstance(lvalue, c_ast.ArrayRef):
            return step
        name = lvalue.name
        if name != STEP:
            ops = {"=": None, "+=": Add, "-=": Sub, "*=": Mul}
            op = ops[stmt.op]
            if op is None:
                self.assign(env, name, lambda: aexp_of(stmt.rvalue, env))
            else:
                self.assign(env, name, lambda: op(_lookup(name, env), aexp_of(stmt.rvalue, env)))
            return step

        rvalue = stmt.rvalue
        if stmt.op == "=":
            if isinstance(rvalue, c_ast.Constant) and int_literal(rvalue) == 0 and step == Var(STEP):
                # initialization; the counter arrives as a parameter
                return step
            if isinstance(rvalue, c_ast.BinaryOp) and rvalue.op == "+" \
                    and isinstance(rvalue.left, c_ast.ID) and rvalue.left.name == STEP:
                return self.bump(step, aexp_of(rvalue.right, env))
            raise UnsupportedConstruct(f"the counter may only be incremented, at {stmt.coord}")
        if stmt.op != "+=":
            raise UnsupportedConstruct(f"the counter may only be incremented, at {stmt.coord}")
        if isinstance(rvalue, c_ast.FuncCall) and rvalue.name.name in self.callees:
            irname, kept = self.callees[rvalue.name.name]
            exprs = rvalue.args.exprs if rvalue.args else []
            args = tuple(aexp_of(exprs[k], env) for k in kept)
            return Call(irname, (step,) + args)
        return self.bump(step, aexp_of(rvalue, env))

    def forget(self, env, names, reason):
        for name in names:
            if name in env:
                env[name] = _Unknown(reason)

    def branch(self, stmt, step, env):
        if not updates_step(stmt):
            self.forget(env, assigned_names(stmt), "is assigned conditionally")
            return step
        cond = bexp_of(stmt.cond, env)
        env_then, env_else = dict(env), dict(env)
        then = self.block(block_items(stmt.iftrue), step, env_then)
        orelse = self.block(block_items(stmt.iffalse), step, env_else)
        for name in set(env_then) | set(env_else):
            value = env_then.get(name)
            if value is env_else.get(name) or (
                    not isinstance(value, _Unknown) and value == env_else.get(name)):
                env[name] = value
            elif name in env:
                env[name] = _Unknown("is assigned conditionally")
        return If(cond, then, orelse)

    def loop(self, stmt, step, env):
        header = loop_header(stmt)
        index = header.index
        changed = assigned_names(stmt.stmt) - {index}
        if not updates_step(stmt):
            self.forget(env, changed, "is assigned in a loop")
            self.assign(env, index, lambda: self.final_index(header, env))
            return step

        irname = self.loop_names[id(stmt)]
        inner = {}
        for name, value in env.items():
            inner[name] = value if isinstance(value, _Unknown) else Var(name)
        self.forget(inner, changed, "changes from one iteration to the next")
        inner[index] = Var(index)
        self.counter_position[irname] = 1

        body = self.block(block_items(stmt.stmt), Var(STEP), inner)
        bound = aexp_of(header.bound, inner)
        guard = Lt(bound, Var(index)) if header.inclusive else Le(bound, Var(index))
        rest = sorted((free_vars(guard) | free_vars(body)) - {index, STEP},
                      key=lambda n: (self.order.get(n, len(self.order)), n))
        recursive = Call(irname, (Add(Var(index), Const(1)), body) + tuple(Var(r) for r in rest))
        self.funcs.append(FuncDef(irname, (index, STEP) + tuple(rest), If(guard, Var(STEP), recursive)))
        logger.debug("loop over %s at %s becomes %s", index, stmt.coord, irname)

        start = aexp_of(header.start, env)
        call = Call(irname, (start, step) + tuple(_lookup(r, env) for r in rest))
        self.forget(env, changed, "is assigned in a loop")
        self.assign(env, index, lambda: self.final_index(header, env))
        return call

    @staticmethod
    def final_index(header, env):
        bound = aexp_of(header.bound, env)
        if header.inclusive:
            bound = Add(bound, Const(1))
        return Max(aexp_of(header.start, env), bound)

    def function(self, fdef, irname, keep=None):
        """Translate one instrumented function; keep names parameters retained even when unused."""
        self.order = {name: k for k, name in enumerate(declared_names(fdef))}
        params = c_params(fdef)
        env = {}
        for name, array in params:
            env[name] = _Unknown("is an array", SliceFailure) if array else Var(name)
        self.counter_position[irname] = 0
        body = self.block(block_items(fdef.body), Var(STEP), env)
        used = free_vars(body)
        kept = [k for k, (name, array) in enumerate(params)
                if not array and (name in used or (keep is not None and name in keep))]
        self.funcs.append(FuncDef(irname, (STEP,) + tuple(params[k][0] for k in kept), body))
        return kept


def _callee_first(names, functions):
    order, seen = [], set()

    def visit(name):
        if name in seen:
            return
        seen.add(name)
        for callee in called_functions(functions[name].body):
            if callee in names:
                visit(callee)
        order.append(name)

    for name in names:
        visit(name)
    return order


def translate_c(prog):
    """Slice an instrumented program and translate it; returns a CTranslation."""
    if prog.annotation is None:
        raise CSyntaxError("no '// Toanalyze: f(...)' annotation names the function to translate")
    annotation = prog.annotation
    functions = prog.functions()
    instrumented = [name for name, fdef in functions.items() if uses_step(fdef)]
    if annotation.target not in instrumented:
        raise UnsupportedConstruct(f"'{annotation.target}' is not instrumented; run instrument first")

    translator = _Translator()
    taken = set(functions) | {STEP}
    counter = 0
    for name in instrumented:
        for node in walk_c(functions[name].body):
            if isinstance(node, c_ast.For) and updates_step(node):
                counter += 1
                translator.loop_names[id(node)] = fresh_name(f"for{counter}", taken)
                taken.add(translator.loop_names[id(node)])

    target_params = c_params(functions[annotation.target])
    analyzed = {name for k, (name, _) in enumerate(target_params) if annotation.symbol(k) is not None}
    for k, (name, array) in enumerate(target_params):
        if array and annotation.symbol(k) is not None:
            raise UnsupportedConstruct(f"array parameter '{name}' cannot be given a value in the annotation")

    target_kept, target_ir = None, None
    for name in _callee_first(instrumented, functions):
        irname = fresh_name("t" + name, taken)
        taken.add(irname)
        if name == annotation.target:
            target_kept = translator.function(functions[name], irname, keep=analyzed)
            target_ir = irname
        else:
            translator.callees[name] = (irname, translator.function(functions[name], irname))

    for k in target_kept:
        if annotation.symbol(k) is None:
            raise SliceFailure(
                f"the counter depends on '{target_params[k][0]}', which the annotation leaves as '_'")

    symbols = {annotation.symbol(k) for k in target_kept if isinstance(annotation.symbol(k), str)}
    avoid = set(symbols) | {STEP}
    binders, factors = [], [C(Eq(Var(STEP), Const(0)))]
    for k in target_kept:
        binder = fresh_name(target_params[k][0], avoid)
        avoid.add(binder)
        binders.append(binder)
        symbol = annotation.symbol(k)
        value = Var(symbol) if isinstance(symbol, str) else Const(symbol)
        factors.append(C(Eq(Var(binder), value)))
    pname = fresh_name(INPUT_DISTRIBUTION, taken)
    distribution = ProbDef(pname, (STEP,) + tuple(binders), product(factors))

    program = Program(index_functions(tuple(translator.funcs)), (distribution,), frozenset(symbols))
    ensure_well_formed(program)
    logger.info("translated %s into %d functions: %s", annotation.target, len(program.funcs),
                ", ".join(f.name for f in program.funcs))
    return CTranslation(program, target_ir, pname)


def slice_translate(prog):
    """The intermediate program of an instrumented CProgram."""
    return translate_c(prog).program
