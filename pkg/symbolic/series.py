"""Closed forms for sums of powers and of polynomials over integer ranges.

S_p(n) = 1^p + 2^p + ... + n^p is a polynomial of degree p + 1 whose
coefficients come from the Bernoulli numbers (B1 = +1/2 convention). The
polynomial satisfies S_p(m) - S_p(m - 1) = m^p for every integer m, so
S_p(hi) - S_p(lo - 1) is the sum over [lo, hi] for any lo <= hi + 1.
"""

import logging
from fractions import Fraction
from functools import lru_cache
from math import comb

import sympy

from core_ir.errors import DegreeTooHigh
from symbolic.algebra import (
    MAX_DEGREE, to_sympy, from_sympy, polynomial_coefficients,
)

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def bernoulli_numbers(n):
    """B_0 .. B_n by the Akiyama-Tanigawa algorithm."""
    numbers = []
    row = [Fraction(0)] * (n + 1)
    for m in range(n + 1):
        row[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        numbers.append(row[0])
    return tuple(numbers)


@lru_cache(maxsize=None)
def faulhaber_coefficients(p):
    """Coefficients c_0 .. c_{p+1} with S_p(n) = sum(c_d * n^d)."""
    if p < 0 or p > MAX_DEGREE:
        raise DegreeTooHigh(f"power sums are available for degrees 0..{MAX_DEGREE}, got {p}")
    bernoulli = bernoulli_numbers(p)
    coefficients = [Fraction(0)] * (p + 2)
    for j in range(p + 1):
        coefficients[p + 1 - j] = Fraction(comb(p + 1, j)) * bernoulli[j] / (p + 1)
    return tuple(coefficients)


def power_sum_expr(p, n):
    """S_p(n) as a sympy expression in `n`."""
    return sum((sympy.Rational(c.numerator, c.denominator) * n ** d
                for d, c in enumerate(faulhaber_coefficients(p)) if c),
               sympy.Integer(0))


def _range_sum(coefficients, lo, hi):
    total = sympy.Integer(0)
    for degree, coefficient in enumerate(coefficients):
        if coefficient == 0:
            continue
        total += coefficient * (power_sum_expr(degree, hi) - power_sum_expr(degree, lo - 1))
    return sympy.expand(total)


def power_sum(p, lo, hi):
    """Closed form of sum(k^p for k in [lo, hi]) as an AExp."""
    if p < 0 or p > MAX_DEGREE:
        raise DegreeTooHigh(f"power sums are available for degrees 0..{MAX_DEGREE}, got {p}")
    low, high = to_sympy(lo), to_sympy(hi)
    if low.is_Integer and high.is_Integer and high < low:
        return from_sympy(sympy.Integer(0))
    return from_sympy(sympy.expand(power_sum_expr(p, high) - power_sum_expr(p, low - 1)))


def sum_polynomial(poly, lo, hi, guarded=False):
    """Sum of an integer polynomial over [lo, hi].

    Without `guarded` the upper bound is clamped to lo - 1 so an empty range
    sums to zero; with it the caller guarantees lo <= hi + 1.
    """
    if poly.degree > MAX_DEGREE:
        raise DegreeTooHigh(f"degree {poly.degree} exceeds {MAX_DEGREE}")
    low, high = to_sympy(lo), to_sympy(hi)
    if low.is_Integer and high.is_Integer:
        if high < low:
            return from_sympy(sympy.Integer(0))
    elif not guarded:
        high = sympy.Max(high, low - 1)
    coefficients = [to_sympy(c) for c in poly.coefficients]
    return from_sympy(_range_sum(coefficients, low, high))


def sum_closed_form(expr, name, lo, hi):
    """sympy closed form of sum(expr for name in [lo, hi]) assuming lo <= hi + 1.

    `expr` must be polynomial in the summation variable; its coefficients
    may be arbitrary rational expressions in the other symbols.
    """
    coefficients = polynomial_coefficients(expr, name)
    if len(coefficients) - 1 > MAX_DEGREE:
        raise DegreeTooHigh(f"degree {len(coefficients) - 1} exceeds {MAX_DEGREE}")
    logger.debug("closed form of a degree %d series in %s", len(coefficients) - 1, name)
    return _range_sum(coefficients, lo, hi)
