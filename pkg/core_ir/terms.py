"""Term representation of the intermediate and probability languages.

Integer programs are built from AExp/BExp/Exp nodes, probability programs
from QExp nodes. Every node is an immutable dataclass; equality is
structural and the hash is computed once per node, so terms can be used
as dictionary keys and shared freely between threads.

The injection of arithmetic expressions into expressions is subtyping:
every AExp is also an Exp.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

Rational = Fraction


class Term:
    """Structural equality with a cached hash."""

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return all(getattr(self, name) == getattr(other, name)
                   for name in self.__dataclass_fields__)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((type(self).__name__,) +
                          tuple(getattr(self, name) for name in self.__dataclass_fields__))
            object.__setattr__(self, "_hash", cached)
        return cached

    def __str__(self):
        from core_ir.syntax import format_term
        return format_term(self)


class Exp(Term):
    pass


class AExp(Exp):
    pass


class BExp(Term):
    pass


class QExp(Term):
    pass


# =================================================================
#                 Arithmetic expressions
# =================================================================

@dataclass(frozen=True, eq=False)
class Var(AExp):
    name: str


@dataclass(frozen=True, eq=False)
class Const(AExp):
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, int):
            raise TypeError(f"Const expects an integer, got {self.value!r}")


@dataclass(frozen=True, eq=False)
class Add(AExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Sub(AExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Mul(AExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Div(AExp):
    """Floor division."""
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Min(AExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Max(AExp):
    left: AExp
    right: AExp


# =================================================================
#                 Boolean expressions
# =================================================================

@dataclass(frozen=True, eq=False)
class Eq(BExp):
    left: AExp
    right: Exp


@dataclass(frozen=True, eq=False)
class Lt(BExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class Le(BExp):
    left: AExp
    right: AExp


@dataclass(frozen=True, eq=False)
class TrueB(BExp):
    pass


@dataclass(frozen=True, eq=False)
class FalseB(BExp):
    pass


@dataclass(frozen=True, eq=False)
class Not(BExp):
    arg: BExp


@dataclass(frozen=True, eq=False)
class And(BExp):
    left: BExp
    right: BExp


TRUE = TrueB()
FALSE = FalseB()


# =================================================================
#                 Expressions
# =================================================================

@dataclass(frozen=True, eq=False)
class Call(Exp):
    name: str
    args: tuple


@dataclass(frozen=True, eq=False)
class If(Exp):
    cond: BExp
    then: Exp
    orelse: Exp


@dataclass(frozen=True, eq=False)
class ArgDev(Exp):
    """Value of `var` after `index` applications of `update`.

    Inside `update` the variable names the current value. `start` is the
    initial value; None means the variable itself.
    """
    var: str
    update: Exp
    index: AExp
    start: Optional[AExp] = None

    @property
    def initial(self):
        return Var(self.var) if self.start is None else self.start


# =================================================================
#                 Probability expressions
# =================================================================

@dataclass(frozen=True, eq=False)
class I2R(QExp):
    arg: AExp


@dataclass(frozen=True, eq=False)
class C(QExp):
    cond: BExp


@dataclass(frozen=True, eq=False)
class AddQ(QExp):
    left: QExp
    right: QExp


@dataclass(frozen=True, eq=False)
class SubQ(QExp):
    left: QExp
    right: QExp


@dataclass(frozen=True, eq=False)
class MulQ(QExp):
    left: QExp
    right: QExp


@dataclass(frozen=True, eq=False)
class DivQ(QExp):
    left: QExp
    right: QExp


@dataclass(frozen=True, eq=False)
class Sum(QExp):
    var: str
    body: QExp


@dataclass(frozen=True, eq=False)
class Prod(QExp):
    """Product of `body` over the values of `var` allowed by `domain`.

    `first_exit` marks the product f-rec builds over the iterations before
    the one that leaves the recursion; the enclosing sum carries the exit
    guard at that iteration.
    """
    var: str
    domain: QExp
    body: QExp
    first_exit: bool = False


@dataclass(frozen=True, eq=False)
class CallP(QExp):
    name: str
    args: tuple


@dataclass(frozen=True, eq=False)
class ConstQ(QExp):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


ZERO = ConstQ(0)
ONE = ConstQ(1)


# =================================================================
#                 Definitions and programs
# =================================================================

@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple
    body: Exp
    index: int = 0


@dataclass(frozen=True)
class ProbDef:
    name: str
    params: tuple
    body: QExp


@dataclass(frozen=True)
class Program:
    funcs: tuple = ()
    probs: tuple = ()
    params: frozenset = field(default_factory=frozenset)

    def func(self, name):
        for fdef in self.funcs:
            if fdef.name == name:
                return fdef
        raise KeyError(name)

    def prob(self, name):
        for pdef in self.probs:
            if pdef.name == name:
                return pdef
        raise KeyError(name)

    def has_func(self, name):
        return any(fdef.name == name for fdef in self.funcs)

    def has_prob(self, name):
        return any(pdef.name == name for pdef in self.probs)

    def with_prob(self, pdef):
        """Return a program where `pdef` replaces the definition of the same name."""
        if self.has_prob(pdef.name):
            probs = tuple(pdef if p.name == pdef.name else p for p in self.probs)
        else:
            probs = self.probs + (pdef,)
        return replace(self, probs=probs)

    def names(self):
        return {f.name for f in self.funcs} | {p.name for p in self.probs}


# =================================================================
#                 Builders
# =================================================================

def product(factors):
    """Left-nested MulQ chain; the empty product is 1."""
    factors = list(factors)
    if not factors:
        return ONE
    result = factors[0]
    for factor in factors[1:]:
        result = MulQ(result, factor)
    return result


def total(terms):
    """Left-nested AddQ chain; the empty sum is 0."""
    terms = list(terms)
    if not terms:
        return ZERO
    result = terms[0]
    for term in terms[1:]:
        result = AddQ(result, term)
    return result


def factors_of(q):
    """Flatten a MulQ tree into its factor list."""
    out = []
    stack = [q]
    while stack:
        node = stack.pop()
        if isinstance(node, MulQ):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def conjuncts(b):
    out = []
    stack = [b]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.append(node.right)
            stack.append(node.left)
        elif not isinstance(node, TrueB):
            out.append(node)
    return out


def conjunction(atoms):
    atoms = [a for a in atoms if not isinstance(a, TrueB)]
    if not atoms:
        return TRUE
    result = atoms[0]
    for atom in atoms[1:]:
        result = And(result, atom)
    return result


def c_product(cond):
    """c(b) with conjunctions spread into one c-factor per conjunct."""
    atoms = conjuncts(cond)
    if not atoms:
        return ONE
    return product(C(a) for a in atoms)


def plus(a, b):
    """a + b with integer constants folded."""
    if isinstance(b, Const):
        if b.value == 0:
            return a
        if isinstance(a, Const):
            return Const(a.value + b.value)
        if b.value < 0:
            return Sub(a, Const(-b.value))
    if isinstance(a, Const) and a.value == 0:
        return b
    return Add(a, b)


def minus(a, b):
    if isinstance(b, Const):
        if b.value == 0:
            return a
        if isinstance(a, Const):
            return Const(a.value - b.value)
    return Sub(a, b)


def times(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Const):
            if x.value == 0:
                return Const(0)
            if x.value == 1:
                return y
    return Mul(a, b)
