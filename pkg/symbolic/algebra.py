"""Bridge between integer terms and sympy, plus polynomial and linear forms.

All program variables become integer sympy symbols. Floor division maps to
`sympy.floor`, min/max to `sympy.Min`/`sympy.Max`; those stay opaque atoms
for the polynomial routines.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import sympy
from sympy.polys.polyerrors import BasePolynomialError

from core_ir.errors import NotPolynomial, NotLinear, ZeroCoefficient, DegreeTooHigh
from core_ir.terms import (
    AExp, Var, Const, Add, Sub, Mul, Div, Min, Max, Eq, TRUE, FALSE,
    QExp, I2R, ConstQ, AddQ, SubQ, MulQ, DivQ, ZERO,
)

logger = logging.getLogger(__name__)

MAX_DEGREE = 10


@lru_cache(maxsize=None)
def symbol(name):
    return sympy.Symbol(name, integer=True)


# =================================================================
#                 AExp <-> sympy
# =================================================================

@lru_cache(maxsize=65536)
def to_sympy(a):
    if isinstance(a, Var):
        return symbol(a.name)
    if isinstance(a, Const):
        return sympy.Integer(a.value)
    if isinstance(a, Add):
        return to_sympy(a.left) + to_sympy(a.right)
    if isinstance(a, Sub):
        return to_sympy(a.left) - to_sympy(a.right)
    if isinstance(a, Mul):
        return to_sympy(a.left) * to_sympy(a.right)
    if isinstance(a, Div):
        denominator = to_sympy(a.right)
        if denominator == 0:
            raise NotPolynomial(f"division by zero in {a}")
        return sympy.floor(to_sympy(a.left) / denominator)
    if isinstance(a, Min):
        return sympy.Min(to_sympy(a.left), to_sympy(a.right))
    if isinstance(a, Max):
        return sympy.Max(to_sympy(a.left), to_sympy(a.right))
    raise NotPolynomial(f"{a} is not an arithmetic expression")


def _fraction(number):
    number = sympy.Rational(number)
    return Fraction(int(number.p), int(number.q))


def _degree(monomial):
    if monomial == 1:
        return 0
    degree = 0
    for factor in sympy.Mul.make_args(monomial):
        _, exponent = factor.as_base_exp()
        degree += int(exponent) if exponent.is_Integer else 1
    return degree


def _ordered_terms(expr):
    terms = list(sympy.Add.make_args(expr))
    terms.sort(key=lambda t: (-_degree(t.as_coeff_Mul()[1]),
                              sympy.default_sort_key(t.as_coeff_Mul()[1])))
    return terms


def _atom(base):
    if base.is_Symbol:
        return Var(base.name)
    if isinstance(base, sympy.floor):
        numerator, denominator = base.args[0].as_numer_denom()
        if denominator == 1:
            return from_sympy(numerator)
        return Div(from_sympy(numerator), from_sympy(denominator))
    if isinstance(base, (sympy.Min, sympy.Max)):
        ctor = Min if isinstance(base, sympy.Min) else Max
        parts = [from_sympy(arg) for arg in sorted(base.args, key=sympy.default_sort_key)]
        result = parts[0]
        for part in parts[1:]:
            result = ctor(result, part)
        return result
    raise NotPolynomial(f"cannot express {base} as an integer term")


def _monomial(coefficient, rest):
    factors = []
    if rest != 1:
        for factor in sympy.Mul.make_args(rest):
            base, exponent = factor.as_base_exp()
            if not exponent.is_Integer or exponent < 1:
                raise NotPolynomial(f"{factor} is not polynomial")
            factors += [_atom(base)] * int(exponent)
    if not factors:
        return Const(coefficient)
    result = factors[0]
    for factor in factors[1:]:
        result = Mul(result, factor)
    if coefficient != 1:
        result = Mul(Const(coefficient), result)
    return result


def _denominator_lcm(expr):
    lcm = 1
    for term in sympy.Add.make_args(expr):
        coefficient, _ = term.as_coeff_Mul()
        if coefficient.is_Rational:
            lcm = lcm * int(coefficient.q) // math.gcd(lcm, int(coefficient.q))
    return lcm


def from_sympy(expr):
    """Canonical AExp for an integer-valued sympy expression."""
    expr = sympy.expand(expr)
    if expr.is_Integer:
        return Const(int(expr))
    lcm = _denominator_lcm(expr)
    if lcm != 1:
        return Div(from_sympy(sympy.expand(expr * lcm)), Const(lcm))
    terms = _ordered_terms(expr)
    split = [(int(t.as_coeff_Mul()[0]), t.as_coeff_Mul()[1]) for t in terms]
    positive = [pair for pair in split if pair[0] > 0]
    if not positive:
        return Sub(Const(0), from_sympy(-expr))
    lead = positive[0]
    split.remove(lead)
    result = _monomial(*lead)
    for coefficient, rest in split:
        if coefficient < 0:
            result = Sub(result, _monomial(-coefficient, rest))
        else:
            result = Add(result, _monomial(coefficient, rest))
    return result


@lru_cache(maxsize=65536)
def canonical_aexp(a):
    return from_sympy(to_sympy(a))


# =================================================================
#                 QExp <-> sympy
# =================================================================

@lru_cache(maxsize=16384)
def qexp_to_sympy(q):
    """Rational-valued arithmetic q-term as a sympy expression."""
    if isinstance(q, I2R):
        return to_sympy(q.arg)
    if isinstance(q, ConstQ):
        return sympy.Rational(q.value.numerator, q.value.denominator)
    if isinstance(q, AddQ):
        return qexp_to_sympy(q.left) + qexp_to_sympy(q.right)
    if isinstance(q, SubQ):
        return qexp_to_sympy(q.left) - qexp_to_sympy(q.right)
    if isinstance(q, MulQ):
        return qexp_to_sympy(q.left) * qexp_to_sympy(q.right)
    if isinstance(q, DivQ):
        denominator = qexp_to_sympy(q.right)
        if denominator == 0:
            raise NotPolynomial(f"division by zero in {q}")
        return qexp_to_sympy(q.left) / denominator
    raise NotPolynomial(f"{q} is not an arithmetic probability term")


def _has_negative_power(expr):
    for term in sympy.Add.make_args(expr):
        for factor in sympy.Mul.make_args(term):
            _, exponent = factor.as_base_exp()
            if exponent.is_number and exponent < 0:
                return True
    return False


def sympy_to_qexp(expr):
    expr = sympy.expand(expr)
    if expr == 0:
        return ZERO
    if expr.is_Rational:
        return ConstQ(_fraction(expr))
    if _has_negative_power(expr):
        numerator, denominator = sympy.fraction(sympy.together(expr))
        return DivQ(sympy_to_qexp(numerator), sympy_to_qexp(denominator))
    lcm = _denominator_lcm(expr)
    if lcm == 1:
        return I2R(from_sympy(expr))
    return DivQ(I2R(from_sympy(sympy.expand(expr * lcm))), ConstQ(lcm))


# =================================================================
#                 Polynomials in one variable
# =================================================================

@dataclass(frozen=True)
class Polynomial:
    """Coefficients indexed by degree; AExps for integer input, QExps otherwise."""
    var: str
    coefficients: tuple

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def reconstruct(self):
        """Horner form of the polynomial as a term of the coefficients' kind."""
        if not self.coefficients:
            return ZERO if self._is_q() else Const(0)
        if self._is_q():
            x = I2R(Var(self.var))
            result = self.coefficients[-1]
            for coefficient in reversed(self.coefficients[:-1]):
                result = AddQ(coefficient, MulQ(x, result))
            return result
        x = Var(self.var)
        result = self.coefficients[-1]
        for coefficient in reversed(self.coefficients[:-1]):
            result = Add(coefficient, Mul(x, result))
        return result

    def _is_q(self):
        return any(isinstance(c, QExp) for c in self.coefficients)


def polynomial_coefficients(expr, name):
    """Sympy coefficients of `expr` in the variable, lowest degree first."""
    var = symbol(name)
    expr = sympy.expand(expr)
    if not expr.has(var):
        return [expr] if expr != 0 else []
    try:
        poly = sympy.Poly(expr, var)
    except BasePolynomialError:
        raise NotPolynomial(f"{expr} is not polynomial in {name}")
    if poly.degree() > MAX_DEGREE:
        raise DegreeTooHigh(f"degree {poly.degree()} in {name} exceeds {MAX_DEGREE}")
    coefficients = [sympy.expand(c) for c in reversed(poly.all_coeffs())]
    for c in coefficients:
        if c.has(var):
            raise NotPolynomial(f"{expr} is not polynomial in {name}")
    return coefficients


def expand(e, x):
    """Polynomial view of an arithmetic term in the variable `x`."""
    if isinstance(e, QExp):
        coefficients = polynomial_coefficients(qexp_to_sympy(e), x)
        return Polynomial(x, tuple(sympy_to_qexp(c) for c in coefficients))
    coefficients = polynomial_coefficients(to_sympy(e), x)
    return Polynomial(x, tuple(from_sympy(c) for c in coefficients))


# =================================================================
#                 Linear forms and solving
# =================================================================

@dataclass(frozen=True)
class LinearForm:
    """coefficient * var + remainder."""
    var: str
    coefficient: int
    remainder: AExp


@dataclass(frozen=True)
class LinearSolution:
    value: AExp
    condition: object


def _linear_parts(expr, name):
    var = symbol(name)
    expr = sympy.expand(expr)
    if not expr.has(var):
        return 0, expr
    try:
        poly = sympy.Poly(expr, var)
    except BasePolynomialError:
        raise NotLinear(f"{expr} is not linear in {name}")
    if poly.degree() != 1:
        raise NotLinear(f"{expr} is not linear in {name}")
    coefficient = poly.coeff_monomial(var)
    if not coefficient.is_Integer:
        raise NotLinear(f"coefficient {coefficient} of {name} is not an integer constant")
    rest = sympy.expand(expr - coefficient * var)
    if rest.has(var):
        raise NotLinear(f"{expr} is not linear in {name}")
    return int(coefficient), rest


def linear_form(a, x):
    coefficient, rest = _linear_parts(to_sympy(a), x)
    return LinearForm(x, coefficient, from_sympy(rest))


def solve_linear(lhs, rhs, x):
    """Solve lhs = rhs for the integer variable x.

    Returns the value (floor quotient) and the divisibility condition under
    which that value is an exact solution.
    """
    coefficient, rest = _linear_parts(to_sympy(lhs) - to_sympy(rhs), x)
    if coefficient == 0:
        raise ZeroCoefficient(f"{x} does not occur in {lhs} = {rhs}")
    target = -rest
    if coefficient < 0:
        coefficient, target = -coefficient, -target
    if coefficient == 1:
        return LinearSolution(from_sympy(target), TRUE)
    if target.is_Integer:
        if int(target) % coefficient:
            return LinearSolution(Const(int(target) // coefficient), FALSE)
        return LinearSolution(Const(int(target) // coefficient), TRUE)
    numerator = from_sympy(target)
    value = Div(numerator, Const(coefficient))
    condition = Eq(Mul(Const(coefficient), value), numerator)
    return LinearSolution(value, condition)
