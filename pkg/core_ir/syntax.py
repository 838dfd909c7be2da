"""Concrete text syntax: parser and pretty-printer.

The syntax follows the published examples, e.g.

    add(x,y) = if x=<0 then y else add(x-1,y+1)
    P(x) = c(1=<x)*c(x=<n)*1/n
    Pxy(x,y) = P(x)*P(y)

Definitions may span several lines. In probability position bare
arithmetic is shorthand for i2r(...), integer literals and literal
fractions are rational constants and `/` is exact division; inside i2r,
c and function bodies `/` is floor division.
"""

import re
from fractions import Fraction

from core_ir.errors import ParseError
from core_ir.traversal import free_vars
from core_ir.wellformed import index_functions
from core_ir.terms import (
    Var, Const, Add, Sub, Mul, Div, Min, Max,
    Eq, Lt, Le, TrueB, FalseB, Not, And, TRUE, FALSE,
    Call, If, ArgDev,
    I2R, C, AddQ, SubQ, MulQ, DivQ, Sum, Prod, CallP, ConstQ,
    AExp, BExp, QExp, Exp, FuncDef, ProbDef, Program, conjuncts,
)

TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<num>\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>=<|<=|>=|==|!=|<>|[-+*/^(),=<>])
""", re.VERBOSE)

RELATIONS = {"=", "==", "=<", "<=", "<", ">=", ">", "!=", "<>"}
KEYWORDS = {"if", "then", "else", "not", "and", "true", "false"}
Q_CONSTRUCTS = {"c", "sum", "prod", "i2r"}


def tokenize(text):
    tokens = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = match.lastgroup
        value = match.group()
        if kind not in ("ws", "comment"):
            tokens.append((kind, value, line, match.start() - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = match.start() + value.rindex("\n") + 1
        pos = match.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


# =================================================================
#                 Untyped parse tree
# =================================================================
# Nodes are tuples: ('num', k) ('name', s) ('call', s, [args]) ('bin', op, l, r)
# ('neg', x) ('pow', x, k) ('if', c, t, e) ('rel', op, l, r) ('and', l, r)
# ('not', x) ('bool', v)

class _Reader:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, offset=0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self):
        token = self.peek()
        self.pos += 1
        return token

    def at(self, kind, value=None):
        token = self.peek()
        return token[0] == kind and (value is None or token[1] == value)

    def expect(self, kind, value=None):
        token = self.peek()
        if not self.at(kind, value):
            wanted = value or kind
            raise ParseError(f"expected {wanted!r} but found {token[1] or 'end of input'!r}",
                             token[2], token[3])
        return self.next()

    def fail(self, message):
        token = self.peek()
        raise ParseError(message, token[2], token[3])

    # --- precedence climbing ---

    def expr(self):
        left = self.relation()
        while self.at("name", "and"):
            self.next()
            left = ("and", left, self.relation())
        return left

    def relation(self):
        left = self.additive()
        if self.peek()[0] == "op" and self.peek()[1] in RELATIONS:
            op = self.next()[1]
            return ("rel", op, left, self.additive())
        return left

    def additive(self):
        left = self.multiplicative()
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            left = ("bin", op, left, self.multiplicative())
        return left

    def multiplicative(self):
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            left = ("bin", op, left, self.unary())
        return left

    def unary(self):
        if self.at("op", "-"):
            self.next()
            operand = self.unary()
            if operand[0] == "num":
                return ("num", -operand[1])
            return ("neg", operand)
        return self.power()

    def power(self):
        base = self.atom()
        if self.at("op", "^"):
            self.next()
            exponent = self.expect("num")[1]
            return ("pow", base, int(exponent))
        return base

    def atom(self):
        kind, value, _, _ = self.peek()
        if kind == "num":
            self.next()
            return ("num", int(value))
        if kind == "op" and value == "(":
            self.next()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if kind != "name":
            self.fail(f"unexpected {value or 'end of input'!r}")
        self.next()
        if value == "if":
            cond = self.expr()
            self.expect("name", "then")
            then = self.expr()
            self.expect("name", "else")
            return ("if", cond, then, self.expr())
        if value == "not":
            self.expect("op", "(")
            inner = self.expr()
            self.expect("op", ")")
            return ("not", inner)
        if value in ("true", "false"):
            return ("bool", value == "true")
        if value in KEYWORDS:
            self.fail(f"unexpected keyword {value!r}")
        if self.at("op", "("):
            self.next()
            args = []
            if not self.at("op", ")"):
                args.append(self.expr())
                while self.at("op", ","):
                    self.next()
                    args.append(self.expr())
            self.expect("op", ")")
            return ("call", value, args)
        return ("name", value)

    def definition(self):
        name = self.expect("name")[1]
        self.expect("op", "(")
        params = []
        if not self.at("op", ")"):
            params.append(self.expect("name")[1])
            while self.at("op", ","):
                self.next()
                params.append(self.expect("name")[1])
        self.expect("op", ")")
        self.expect("op", "=")
        return name, tuple(params), self.expr()


# =================================================================
#                 Typed conversion
# =================================================================

def _binder(node):
    if node[0] != "name":
        raise ParseError(f"expected a variable name, found {node[0]}")
    return node[1]


def _to_aexp(node):
    kind = node[0]
    if kind == "num":
        return Const(node[1])
    if kind == "name":
        return Var(node[1])
    if kind == "neg":
        return Sub(Const(0), _to_aexp(node[1]))
    if kind == "pow":
        base = _to_aexp(node[1])
        if node[2] == 0:
            return Const(1)
        result = base
        for _ in range(node[2] - 1):
            result = Mul(result, base)
        return result
    if kind == "bin":
        ctor = {"+": Add, "-": Sub, "*": Mul, "/": Div}[node[1]]
        return ctor(_to_aexp(node[2]), _to_aexp(node[3]))
    if kind == "call" and node[1] in ("min", "max") and len(node[2]) >= 2:
        ctor = Min if node[1] == "min" else Max
        result = _to_aexp(node[2][0])
        for arg in node[2][1:]:
            result = ctor(result, _to_aexp(arg))
        return result
    raise ParseError(f"{_describe(node)} is not an arithmetic expression")


def _to_exp(node):
    kind = node[0]
    if kind == "if":
        return If(_to_bexp(node[1]), _to_exp(node[2]), _to_exp(node[3]))
    if kind == "call" and node[1] not in ("min", "max"):
        if node[1] == "argDev":
            args = node[2]
            if len(args) not in (3, 4):
                raise ParseError("argDev takes three or four arguments")
            start = _to_aexp(args[3]) if len(args) == 4 else None
            return ArgDev(_binder(args[0]), _to_exp(args[1]), _to_aexp(args[2]), start)
        return Call(node[1], tuple(_to_exp(a) for a in node[2]))
    return _to_aexp(node)


def _is_arith(node):
    kind = node[0]
    if kind in ("num", "name"):
        return True
    if kind in ("neg", "pow"):
        return _is_arith(node[1])
    if kind == "bin":
        return node[1] in ("+", "-", "*") and _is_arith(node[2]) and _is_arith(node[3])
    if kind == "call":
        return node[1] in ("min", "max") and all(_is_arith(a) for a in node[2])
    return False


def _to_bexp(node):
    kind = node[0]
    if kind == "bool":
        return TRUE if node[1] else FALSE
    if kind == "not":
        return Not(_to_bexp(node[1]))
    if kind == "and":
        return And(_to_bexp(node[1]), _to_bexp(node[2]))
    if kind == "rel":
        op, left, right = node[1], node[2], node[3]
        if op in ("=", "==", "!=", "<>"):
            if _is_arith(left):
                eq = Eq(_to_aexp(left), _to_exp(right))
            else:
                eq = Eq(_to_aexp(right), _to_exp(left))
            return eq if op in ("=", "==") else Not(eq)
        a, b = _to_aexp(left), _to_aexp(right)
        if op in ("=<", "<="):
            return Le(a, b)
        if op == "<":
            return Lt(a, b)
        if op == ">=":
            return Le(b, a)
        return Lt(b, a)
    raise ParseError(f"{_describe(node)} is not a boolean expression")


def _to_qexp(node):
    kind = node[0]
    if kind == "num":
        return ConstQ(node[1])
    if kind == "bin" and node[1] == "/" and node[2][0] == "num" and node[3][0] == "num":
        if node[3][1] == 0:
            raise ParseError("division by zero in a rational literal")
        return ConstQ(Fraction(node[2][1], node[3][1]))
    if _is_arith(node):
        return I2R(_to_aexp(node))
    if kind == "neg":
        inner = _to_qexp(node[1])
        if isinstance(inner, ConstQ):
            return ConstQ(-inner.value)
        return SubQ(ConstQ(0), inner)
    if kind == "bin":
        ctor = {"+": AddQ, "-": SubQ, "*": MulQ, "/": DivQ}[node[1]]
        return ctor(_to_qexp(node[2]), _to_qexp(node[3]))
    if kind == "call":
        name, args = node[1], node[2]
        if name == "c":
            _arity(name, args, 1)
            return C(_to_bexp(args[0]))
        if name == "i2r":
            _arity(name, args, 1)
            return I2R(_to_aexp(args[0]))
        if name == "sum":
            _arity(name, args, 2)
            return Sum(_binder(args[0]), _to_qexp(args[1]))
        if name == "prod":
            _arity(name, args, 3)
            return Prod(_binder(args[0]), _to_qexp(args[1]), _to_qexp(args[2]))
        return CallP(name, tuple(_to_aexp(a) for a in args))
    raise ParseError(f"{_describe(node)} is not a probability expression")


def _arity(name, args, expected):
    if len(args) != expected:
        raise ParseError(f"{name}(...) takes {expected} argument(s), got {len(args)}")


def _describe(node):
    if node[0] in ("name", "call"):
        return f"'{node[1]}'"
    return node[0]


def _uses_q(node, prob_names):
    kind = node[0]
    if kind == "call":
        if node[1] in Q_CONSTRUCTS or node[1] in prob_names:
            return True
        return any(_uses_q(arg, prob_names) for arg in node[2])
    if kind == "bin" and node[1] == "/" and node[2][0] == "num" and node[3][0] == "num":
        return True
    return any(_uses_q(part, prob_names) for part in node[1:] if isinstance(part, tuple))


# =================================================================
#                 Public parsing API
# =================================================================

def _parse_single(text, convert):
    reader = _Reader(text)
    node = reader.expr()
    reader.expect("eof")
    return convert(node)


def parse_aexp(text):
    return _parse_single(text, _to_aexp)


def parse_exp(text):
    return _parse_single(text, _to_exp)


def parse_bexp(text):
    return _parse_single(text, _to_bexp)


def parse_qexp(text):
    return _parse_single(text, _to_qexp)


def parse_program(text):
    """Parse a sequence of function and probability definitions."""
    reader = _Reader(text)
    raw = []
    while not reader.at("eof"):
        raw.append(reader.definition())

    prob_names = {name for name, _, body in raw
                  if name[:1] == "P" or _uses_q(body, ())}
    while True:
        grown = prob_names | {name for name, _, body in raw if _uses_q(body, prob_names)}
        if grown == prob_names:
            break
        prob_names = grown

    funcs, probs = [], []
    for name, params, body in raw:
        if name in prob_names:
            probs.append(ProbDef(name, params, _to_qexp(body)))
        else:
            funcs.append(FuncDef(name, params, _to_exp(body), len(funcs) + 1))

    symbols = set()
    for definition in funcs + probs:
        symbols |= free_vars(definition.body) - set(definition.params)
    return Program(index_functions(tuple(funcs)), tuple(probs), frozenset(symbols))


# =================================================================
#                 Pretty-printer
# =================================================================

_A_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_A_SYM = {Add: "+", Sub: "-", Mul: "*", Div: "/"}
_Q_PREC = {AddQ: 1, SubQ: 1, MulQ: 2, DivQ: 2}
_Q_SYM = {AddQ: " + ", SubQ: " - ", MulQ: "*", DivQ: "/"}


def _a_prec(a):
    if isinstance(a, Const) and a.value < 0:
        return 0
    return _A_PREC.get(type(a), 3)


def _fmt_aexp(a):
    if isinstance(a, Var):
        return a.name
    if isinstance(a, Const):
        return str(a.value)
    if isinstance(a, (Min, Max)):
        return f"{'min' if isinstance(a, Min) else 'max'}({_fmt_aexp(a.left)}, {_fmt_aexp(a.right)})"
    prec = _A_PREC[type(a)]
    left = _fmt_aexp(a.left)
    if _a_prec(a.left) < prec:
        left = f"({left})"
    right = _fmt_aexp(a.right)
    if _a_prec(a.right) <= prec:
        right = f"({right})"
    return f"{left}{_A_SYM[type(a)]}{right}"


def _fmt_exp(e):
    if isinstance(e, AExp):
        return _fmt_aexp(e)
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_fmt_exp(a) for a in e.args)})"
    if isinstance(e, If):
        return f"if {_fmt_bexp(e.cond)} then {_fmt_exp(e.then)} else {_fmt_exp(e.orelse)}"
    if isinstance(e, ArgDev):
        parts = [e.var, _fmt_exp(e.update), _fmt_aexp(e.index)]
        if e.start is not None:
            parts.append(_fmt_aexp(e.start))
        return f"argDev({', '.join(parts)})"
    raise TypeError(f"not an expression: {e!r}")


def _fmt_bexp(b):
    if isinstance(b, TrueB):
        return "true"
    if isinstance(b, FalseB):
        return "false"
    if isinstance(b, Eq):
        right = _fmt_exp(b.right)
        if isinstance(b.right, If):
            right = f"({right})"
        return f"{_fmt_aexp(b.left)} = {right}"
    if isinstance(b, Le):
        return f"{_fmt_aexp(b.left)} =< {_fmt_aexp(b.right)}"
    if isinstance(b, Lt):
        return f"{_fmt_aexp(b.left)} < {_fmt_aexp(b.right)}"
    if isinstance(b, Not):
        return f"not({_fmt_bexp(b.arg)})"
    if isinstance(b, And):
        return " and ".join(_fmt_bexp(part) for part in conjuncts(b))
    raise TypeError(f"not a boolean expression: {b!r}")


def _q_prec(q):
    if isinstance(q, ConstQ):
        if q.value < 0:
            return 0
        return 3 if q.value.denominator == 1 else 2
    if isinstance(q, C) and isinstance(q.cond, And):
        return 2
    return _Q_PREC.get(type(q), 3)


def _fmt_qexp(q):
    if isinstance(q, ConstQ):
        return str(q.value)
    if isinstance(q, I2R):
        return f"i2r({_fmt_aexp(q.arg)})"
    if isinstance(q, C):
        if isinstance(q.cond, And):
            return "*".join(f"c({_fmt_bexp(part)})" for part in conjuncts(q.cond))
        return f"c({_fmt_bexp(q.cond)})"
    if isinstance(q, Sum):
        return f"sum({q.var}, {_fmt_qexp(q.body)})"
    if isinstance(q, Prod):
        return f"prod({q.var}, {_fmt_qexp(q.domain)}, {_fmt_qexp(q.body)})"
    if isinstance(q, CallP):
        return f"{q.name}({', '.join(_fmt_aexp(a) for a in q.args)})"
    prec = _Q_PREC[type(q)]
    left = _fmt_qexp(q.left)
    if _q_prec(q.left) < prec:
        left = f"({left})"
    right = _fmt_qexp(q.right)
    if _q_prec(q.right) <= prec:
        right = f"({right})"
    return f"{left}{_Q_SYM[type(q)]}{right}"


def format_term(term):
    if isinstance(term, QExp):
        return _fmt_qexp(term)
    if isinstance(term, BExp):
        return _fmt_bexp(term)
    if isinstance(term, Exp):
        return _fmt_exp(term)
    raise TypeError(f"cannot format {term!r}")


def format_definition(definition):
    params = ",".join(definition.params)
    return f"{definition.name}({params}) = {format_term(definition.body)}"


def format_program(program):
    lines = [format_definition(f) for f in sorted(program.funcs, key=lambda f: f.index)]
    lines += [format_definition(p) for p in program.probs]
    return "\n".join(lines) + "\n"
