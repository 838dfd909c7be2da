"""Parsing of the annotated mini-C subset.

The source is handed to pycparser after comments and preprocessor lines
are blanked out (line numbers are kept). The analysis annotation

    // Toanalyze: multa(_,_,_,N)

names the target function; every argument is `_` (not analyzed), a
parameter name or an integer literal.
"""

import logging
import re
from dataclasses import dataclass
from typing import Optional

from pycparser import c_ast, c_parser, c_generator

from core_ir.errors import CSyntaxError, UnsupportedConstruct

logger = logging.getLogger(__name__)

STEP = "step"
WILDCARD = "_"

ANNOTATION_RE = re.compile(r"//\s*Toanalyze\s*:\s*([A-Za-z_]\w*)\s*\(([^)]*)\)")
BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)
LINE_COMMENT_RE = re.compile(r"//[^\n]*")
PREPROCESSOR_RE = re.compile(r"^[ \t]*#[^\n]*", re.MULTILINE)
MARKER_RE = re.compile(r"^(_|[A-Za-z_]\w*|-?\d+)$")

SCALAR_TYPES = {"int", "void"}
ARITH_OPS = {"+", "-", "*", "/", "%"}
COMPARE_OPS = {"<", "<=", ">", ">=", "==", "!="}
LOGIC_OPS = {"&&", "||"}
ASSIGN_OPS = {"=", "+=", "-=", "*="}
INCDEC_OPS = {"++", "--", "p++", "p--"}

_UNSUPPORTED = {
    "While": "while loops",
    "DoWhile": "do-while loops",
    "PtrDecl": "pointers",
    "Struct": "structs",
    "Union": "unions",
    "Enum": "enums",
    "Switch": "switch statements",
    "Goto": "goto",
    "Label": "labels",
    "Break": "break",
    "Continue": "continue",
    "TernaryOp": "conditional expressions",
    "Cast": "casts",
    "Typedef": "typedefs",
    "StructRef": "structs",
}


@dataclass(frozen=True)
class Annotation:
    target: str
    markers: tuple

    def symbol(self, k):
        """Parameter name or integer given for argument k; None for `_`."""
        marker = self.markers[k]
        if marker == WILDCARD:
            return None
        if marker.lstrip("-").isdigit():
            return int(marker)
        return marker

    def __str__(self):
        return f"// Toanalyze: {self.target}({','.join(self.markers)})"


@dataclass
class CProgram:
    ast: c_ast.FileAST
    annotation: Optional[Annotation] = None
    name: str = "<input>"

    def functions(self):
        return {node.decl.name: node for node in self.ast.ext if isinstance(node, c_ast.FuncDef)}

    def function(self, name):
        try:
            return self.functions()[name]
        except KeyError:
            raise CSyntaxError(f"no function named '{name}' in {self.name}")

    @property
    def target(self):
        return self.function(self.annotation.target) if self.annotation else None

    def source(self):
        text = c_generator.CGenerator().visit(self.ast)
        if self.annotation is not None:
            text = f"{self.annotation}\n{text}"
        return text


# =================================================================
#                 Parsing
# =================================================================

def _blank(match):
    return "\n" * match.group(0).count("\n")


def strip_source(source):
    """Blank out comments and preprocessor lines, keeping the line layout."""
    text = BLOCK_COMMENT_RE.sub(_blank, source)
    text = LINE_COMMENT_RE.sub("", text)
    return PREPROCESSOR_RE.sub("", text)


def read_annotation(source):
    match = ANNOTATION_RE.search(source)
    if match is None:
        return None
    raw = [m.strip() for m in match.group(2).split(",")] if match.group(2).strip() else []
    for marker in raw:
        if not MARKER_RE.match(marker):
            raise CSyntaxError(f"bad marker '{marker}' in the Toanalyze annotation")
    return Annotation(match.group(1), tuple(m.lower() for m in raw))


def parse_c(source, name="<input>"):
    """Parse mini-C source into a CProgram, rejecting everything outside the subset."""
    annotation = read_annotation(source)
    text = strip_source(source)
    try:
        ast = c_parser.CParser().parse(text, filename=name)
    except c_parser.ParseError as exc:
        raise CSyntaxError(str(exc))
    prog = CProgram(ast, annotation, name)
    if not prog.functions():
        raise CSyntaxError(f"{name} defines no function to analyze")
    check_subset(prog)
    if annotation is not None:
        target = prog.function(annotation.target)
        params = c_params(target)
        if len(params) != len(annotation.markers):
            raise CSyntaxError(
                f"the annotation gives {len(annotation.markers)} arguments, "
                f"'{annotation.target}' takes {len(params)}")
    logger.info("parsed %s: %d functions, target %s", name, len(prog.functions()),
                annotation.target if annotation else "none")
    return prog


# =================================================================
#                 Subset checks
# =================================================================

def _where(node):
    return f" at {node.coord}" if getattr(node, "coord", None) else ""


def _unsupported(what, node):
    return UnsupportedConstruct(f"{what}{_where(node)}")


class _SubsetChecker(c_ast.NodeVisitor):
    def __init__(self, functions):
        self.functions = functions

    def generic_visit(self, node):
        what = _UNSUPPORTED.get(type(node).__name__)
        if what is not None:
            raise _unsupported(f"{what} are not supported", node)
        for _, child in node.children():
            self.visit(child)

    def visit_IdentifierType(self, node):
        for name in node.names:
            if name not in SCALAR_TYPES:
                raise _unsupported(f"type '{name}' is not supported (only int and void)", node)

    def visit_Constant(self, node):
        if node.type != "int":
            raise _unsupported(f"{node.type} constant {node.value}", node)

    def visit_UnaryOp(self, node):
        if node.op in ("&", "*", "sizeof"):
            raise _unsupported(f"operator '{node.op}'", node)
        self.generic_visit(node)

    def visit_BinaryOp(self, node):
        if node.op not in ARITH_OPS | COMPARE_OPS | LOGIC_OPS:
            raise _unsupported(f"operator '{node.op}'", node)
        self.generic_visit(node)

    def visit_Assignment(self, node):
        if node.op not in ASSIGN_OPS:
            raise _unsupported(f"assignment operator '{node.op}'", node)
        self.generic_visit(node)

    def visit_FuncCall(self, node):
        name = node.name.name if isinstance(node.name, c_ast.ID) else None
        if name not in self.functions:
            raise _unsupported(f"call to undefined function '{name}'", node)
        self.generic_visit(node)

    def visit_For(self, node):
        index = loop_header(node).index
        if index in assigned_names(node.stmt):
            raise _unsupported(f"loop index '{index}' assigned inside the loop body", node)
        for _, child in node.children():
            self.visit(child)


def _check_expressions(stmt):
    """Assignments and ++/-- only as statements or loop headers."""
    expressions = []
    if isinstance(stmt, (c_ast.Assignment, c_ast.UnaryOp)) and _is_update(stmt):
        expressions = [stmt.rvalue] if isinstance(stmt, c_ast.Assignment) else []
        if isinstance(stmt, c_ast.Assignment) and isinstance(stmt.lvalue, c_ast.ArrayRef):
            expressions.append(stmt.lvalue.subscript)
    elif isinstance(stmt, c_ast.Decl):
        expressions = [stmt.init] if stmt.init is not None else []
    elif isinstance(stmt, c_ast.For):
        header = loop_header(stmt)
        expressions = [header.start, header.bound]
    elif isinstance(stmt, c_ast.If):
        expressions = [stmt.cond]
    elif isinstance(stmt, c_ast.Return):
        expressions = [stmt.expr] if stmt.expr is not None else []
    elif isinstance(stmt, c_ast.FuncCall):
        expressions = list(stmt.args.exprs) if stmt.args else []
    for expr in expressions:
        for node in walk_c(expr):
            if isinstance(node, c_ast.Assignment) or (
                    isinstance(node, c_ast.UnaryOp) and node.op in INCDEC_OPS):
                raise _unsupported("side effects inside expressions", node)


def _is_update(node):
    return isinstance(node, c_ast.Assignment) or (
        isinstance(node, c_ast.UnaryOp) and node.op in INCDEC_OPS)


def _check_returns(fdef):
    items = fdef.body.block_items or []
    for k, stmt in enumerate(items):
        for node in walk_c(stmt):
            if isinstance(node, c_ast.Return) and not (node is stmt and k == len(items) - 1):
                raise _unsupported("return is only supported as the last statement", node)


def _call_cycles(prog):
    graph = {name: {callee for callee in called_functions(fdef)}
             for name, fdef in prog.functions().items()}
    state = {}

    def visit(name, path):
        state[name] = "open"
        for callee in sorted(graph.get(name, ())):
            if state.get(callee) == "open":
                cycle = path[path.index(callee):] + [callee]
                raise UnsupportedConstruct("recursion is not supported: " + " -> ".join(cycle))
            if callee not in state:
                visit(callee, path + [callee])
        state[name] = "done"

    for name in graph:
        if name not in state:
            visit(name, [name])


def check_subset(prog):
    functions = prog.functions()
    for node in prog.ast.ext:
        if isinstance(node, c_ast.Decl) and isinstance(node.type, c_ast.FuncDecl):
            continue
        if not isinstance(node, c_ast.FuncDef):
            raise _unsupported("global declarations are not supported", node)
    checker = _SubsetChecker(functions)
    for fdef in functions.values():
        checker.visit(fdef)
        for stmt in walk_c(fdef.body):
            _check_expressions(stmt)
        _check_returns(fdef)
    _call_cycles(prog)


# =================================================================
#                 AST helpers
# =================================================================

@dataclass(frozen=True)
class LoopHeader:
    """for (index = start; index < bound; index++), inclusive for `<=`."""
    index: str
    start: c_ast.Node
    bound: c_ast.Node
    inclusive: bool


def walk_c(node):
    if node is None:
        return
    yield node
    for _, child in node.children():
        yield from walk_c(child)


def _is_unit_step(nxt, index):
    if isinstance(nxt, c_ast.UnaryOp) and nxt.op in ("++", "p++"):
        return isinstance(nxt.expr, c_ast.ID) and nxt.expr.name == index
    if isinstance(nxt, c_ast.Assignment) and isinstance(nxt.lvalue, c_ast.ID) \
            and nxt.lvalue.name == index:
        one = nxt.rvalue
        if nxt.op == "+=":
            return isinstance(one, c_ast.Constant) and one.value == "1"
        if nxt.op == "=" and isinstance(one, c_ast.BinaryOp) and one.op == "+":
            return (isinstance(one.left, c_ast.ID) and one.left.name == index
                    and isinstance(one.right, c_ast.Constant) and one.right.value == "1")
    return False


def loop_header(node):
    """The LoopHeader of a for statement; UnsupportedConstruct for any other shape."""
    init = node.init
    if isinstance(init, c_ast.DeclList) and len(init.decls) == 1 and init.decls[0].init is not None:
        index, start = init.decls[0].name, init.decls[0].init
    elif isinstance(init, c_ast.Assignment) and init.op == "=" and isinstance(init.lvalue, c_ast.ID):
        index, start = init.lvalue.name, init.rvalue
    else:
        raise _unsupported("for loops must start with 'i = expression'", node)
    cond = node.cond
    if not (isinstance(cond, c_ast.BinaryOp) and cond.op in ("<", "<=")
            and isinstance(cond.left, c_ast.ID) and cond.left.name == index):
        raise _unsupported(f"for loops must test '{index} < bound' or '{index} <= bound'", node)
    if not _is_unit_step(node.next, index):
        raise _unsupported(f"for loops must step with '{index}++'", node)
    return LoopHeader(index, start, cond.right, cond.op == "<=")


def block_items(node):
    """Statements of a compound, or the single statement itself."""
    if node is None:
        return []
    if isinstance(node, c_ast.Compound):
        return list(node.block_items or [])
    return [node]


def assigned_names(node):
    """Scalar variables and arrays written anywhere inside node."""
    names = set()
    for sub in walk_c(node):
        target = None
        if isinstance(sub, c_ast.Assignment):
            target = sub.lvalue
        elif isinstance(sub, c_ast.UnaryOp) and sub.op in INCDEC_OPS:
            target = sub.expr
        elif isinstance(sub, c_ast.Decl) and not isinstance(sub.type, c_ast.FuncDecl):
            names.add(sub.name)
        while isinstance(target, c_ast.ArrayRef):
            target = target.name
        if isinstance(target, c_ast.ID):
            names.add(target.name)
    return names


def updates_step(node):
    return STEP in assigned_names(node)


def called_functions(node):
    return [sub.name.name for sub in walk_c(node)
            if isinstance(sub, c_ast.FuncCall) and isinstance(sub.name, c_ast.ID)]


def is_array(decl):
    return isinstance(decl.type, c_ast.ArrayDecl)


def c_params(fdef):
    """[(name, is_array)] of a function definition."""
    args = fdef.decl.type.args
    if args is None:
        return []
    params = []
    for param in args.params:
        if isinstance(param, c_ast.Typename):
            # `void f(void)`
            continue
        params.append((param.name, is_array(param)))
    return params


def declared_names(fdef):
    """Parameters and locals in order of declaration."""
    names = [name for name, _ in c_params(fdef)]
    for sub in walk_c(fdef.body):
        if isinstance(sub, c_ast.Decl) and sub.name not in names:
            names.append(sub.name)
    return names


def int_literal(node):
    text = node.value.rstrip("uUlL")
    if len(text) > 1 and text[0] == "0" and text.isdigit():
        return int(text, 8)
    return int(text, 0)


def return_type(fdef):
    return " ".join(fdef.decl.type.type.type.names)
