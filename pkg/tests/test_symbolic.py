import unittest
import sys
import os
import random
from fractions import Fraction

import sympy

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_ROOT)

from core_ir.errors import DegreeTooHigh, ZeroCoefficient
from core_ir.terms import (
    Var, Const, Add, Mul, Sub, Le, Eq, Not, And, TrueB, FalseB, Program, conjuncts,
)
from evaluator.evaluate import Evaluator
from symbolic.algebra import canonical_aexp, expand, solve_linear, symbol, Polynomial, MAX_DEGREE
from symbolic.constraints import reduce_bexp, bound_of
from symbolic.series import (
    bernoulli_numbers, faulhaber_coefficients, power_sum, sum_polynomial, sum_closed_form,
)

X, N = Var("x"), Var("n")


def conj(*atoms):
    result = atoms[0]
    for atom in atoms[1:]:
        result = And(result, atom)
    return result


class TestPowerSums(unittest.TestCase):

    def setUp(self):
        self.evaluator = Evaluator(Program())

    def test_bernoulli_numbers(self):
        self.assertEqual(bernoulli_numbers(4),
                         (Fraction(1), Fraction(1, 2), Fraction(1, 6), Fraction(0), Fraction(-1, 30)))

    def test_faulhaber_coefficients(self):
        self.assertEqual(faulhaber_coefficients(1), (Fraction(0), Fraction(1, 2), Fraction(1, 2)))
        self.assertEqual(faulhaber_coefficients(2),
                         (Fraction(0), Fraction(1, 6), Fraction(1, 2), Fraction(1, 3)))

    def test_power_sum_against_brute_force(self):
        """sum(k^p, k=1..n) for every p in 0..10 and n in 0..50."""
        print("\n--- Testing power sums against brute force (561 values) ---")
        checked = 0
        for p in range(MAX_DEGREE + 1):
            closed = power_sum(p, Const(1), N)
            for n in range(0, 51):
                expected = sum(k ** p for k in range(1, n + 1))
                self.assertEqual(self.evaluator.aexp(closed, {"n": n}), expected, f"p={p}, n={n}")
                checked += 1
        self.assertEqual(checked, 561)
        print("  ✅ Test passed!")

    def test_power_sum_with_symbolic_lower_bound(self):
        closed = power_sum(2, X, N)
        for lo, hi in ((1, 5), (3, 3), (-2, 4), (4, 3)):
            expected = sum(k * k for k in range(lo, hi + 1))
            self.assertEqual(self.evaluator.aexp(closed, {"x": lo, "n": hi}), expected)

    def test_degree_limit(self):
        with self.assertRaises(DegreeTooHigh):
            faulhaber_coefficients(MAX_DEGREE + 1)

    def test_sum_closed_form(self):
        k, n = symbol("k"), symbol("n")
        result = sum_closed_form(k, "k", 1, n)
        self.assertEqual(sympy.expand(result - n * (n + 1) / 2), 0)

    def test_sum_polynomial(self):
        """2 - k + k^3 summed over concrete and symbolic ranges."""
        print("\n--- Testing polynomial sums over integer ranges ---")
        poly = Polynomial("k", (Const(2), Const(-1), Const(0), Const(1)))

        def brute(lo, hi):
            return sum(2 - k + k ** 3 for k in range(lo, hi + 1))

        self.assertEqual(sum_polynomial(poly, Const(5), Const(3)), Const(0))
        self.assertEqual(self.evaluator.aexp(sum_polynomial(poly, Const(-2), Const(4)), {}), brute(-2, 4))
        clamped = sum_polynomial(poly, X, N)
        for lo in range(-3, 4):
            for hi in range(-5, 6):
                self.assertEqual(self.evaluator.aexp(clamped, {"x": lo, "n": hi}), brute(lo, hi),
                                 f"[{lo}, {hi}]")
        guarded = sum_polynomial(poly, X, N, guarded=True)
        for lo in range(-3, 4):
            for hi in range(lo - 1, 6):
                self.assertEqual(self.evaluator.aexp(guarded, {"x": lo, "n": hi}), brute(lo, hi))
        print("  ✅ Test passed!")


class TestPolynomials(unittest.TestCase):

    def setUp(self):
        self.evaluator = Evaluator(Program())

    @staticmethod
    def random_polynomial(rng, degree):
        """sum((c + d*n) * x^k) with small random c and d."""
        result = Const(0)
        for k in range(degree + 1):
            term = Add(Const(rng.randint(-3, 3)), Mul(Const(rng.randint(-2, 2)), N))
            for _ in range(k):
                term = Mul(term, X)
            result = Add(result, term)
        return result

    def test_expand_reconstructs_the_polynomial(self):
        print("\n--- Testing expand on random polynomials ---")
        rng = random.Random(5)
        for _ in range(20):
            degree = rng.randint(0, 4)
            e = self.random_polynomial(rng, degree)
            poly = expand(e, "x")
            self.assertLessEqual(poly.degree, degree)
            rebuilt = poly.reconstruct()
            for _ in range(10):
                scope = {"x": rng.randint(-5, 5), "n": rng.randint(-5, 5)}
                self.assertEqual(self.evaluator.aexp(rebuilt, scope), self.evaluator.aexp(e, scope),
                                 f"{e} at {scope}")
        print("  ✅ Test passed!")

    def test_solve_linear(self):
        """a*x + b = m: the value solves it exactly when the condition holds, else no integer does."""
        print("\n--- Testing linear solving with divisibility conditions ---")
        m = Var("m")
        for a in (1, -1, 2, -3, 4):
            for b in (-3, 0, 5):
                lhs = Add(Mul(Const(a), X), Const(b))
                solution = solve_linear(lhs, m, "x")
                for value in range(-12, 13):
                    scope = {"m": value}
                    if self.evaluator.bexp(solution.condition, scope):
                        x = self.evaluator.aexp(solution.value, scope)
                        self.assertEqual(a * x + b, value, f"a={a}, b={b}, m={value}")
                    else:
                        self.assertFalse(any(a * x + b == value for x in range(-30, 31)),
                                         f"a={a}, b={b}, m={value}")
        self.assertIsInstance(solve_linear(Mul(Const(2), X), Const(7), "x").condition, FalseB)
        with self.assertRaises(ZeroCoefficient):
            solve_linear(N, Const(1), "x")
        print("  ✅ Test passed!")


class TestCanonicalForms(unittest.TestCase):

    def test_equal_polynomials_share_a_normal_form(self):
        self.assertEqual(canonical_aexp(Add(X, X)), canonical_aexp(Mul(Const(2), X)))
        self.assertEqual(canonical_aexp(Sub(Add(X, Const(3)), Const(3))), X)


class TestConstraints(unittest.TestCase):

    def setUp(self):
        self.evaluator = Evaluator(Program())

    def assertEquivalent(self, original, reduced, names=("x", "n"), lo=-4, hi=8):
        rng = random.Random(7)
        for _ in range(200):
            scope = {name: rng.randint(lo, hi) for name in names}
            self.assertEqual(self.evaluator.bexp(original, scope),
                             self.evaluator.bexp(reduced, scope), f"at {scope}")

    def test_parallel_bounds_keep_the_tighter(self):
        b = conj(Le(Const(1), X), Le(Const(2), X), Le(X, N))
        reduced = reduce_bexp(b)
        self.assertEquivalent(b, reduced)
        self.assertEqual(len(conjuncts(reduced)), 2)

    def test_contradictions(self):
        self.assertIsInstance(reduce_bexp(conj(Le(X, Const(0)), Le(Const(1), X))), FalseB)
        self.assertIsInstance(reduce_bexp(conj(Eq(X, Const(2)), Not(Eq(X, Const(2))))), FalseB)
        self.assertIsInstance(reduce_bexp(conj(Eq(X, Const(2)), Eq(X, Const(3)))), FalseB)

    def test_trivial_atoms(self):
        self.assertIsInstance(reduce_bexp(Le(Const(1), Const(2))), TrueB)

    def test_opposite_bounds_become_an_equation(self):
        b = conj(Le(X, Const(3)), Le(Const(3), X))
        reduced = reduce_bexp(b)
        self.assertIsInstance(reduced, Eq)
        self.assertEquivalent(b, reduced, names=("x",))

    def test_bound_of(self):
        self.assertEqual(bound_of(Le(X, N), "x"), ("upper", N))
        self.assertEqual(bound_of(Le(Const(1), X), "x"), ("lower", Const(1)))
        self.assertIsNone(bound_of(Le(N, Const(4)), "x"))


if __name__ == '__main__':
    unittest.main(verbosity=2)
