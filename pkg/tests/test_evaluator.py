import unittest
import sys
import os
import tempfile
from fractions import Fraction

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_ROOT)

from core_ir.errors import NonTermination, DivByZero, UnboundedSummation, EmptySupport
from core_ir.syntax import parse_program, parse_qexp
from core_ir.terms import Var, Const, Sub, ArgDev, CallP, Program
from core_ir.traversal import free_vars
from evaluator.evaluate import Evaluator, eval_exp, eval_qexp
from evaluator.distribution import (
    Distribution, EXACT, OVER_APPROX, tabulate, expected_value_bounds,
    write_distribution_csv, read_distribution_csv, emit_plot_data,
)
from evaluator.specialize import specialize

MATMUL_IR = """
for3(i3,step,n) = if n =< i3 then step else for3(i3+1,step+1,n)
for2(i2,step,n) = if n =< i2 then step else for2(i2+1,for3(0,step+2,n),n)
for1(i1,step,n) = if n =< i1 then step else for1(i1+1,for2(0,step,n),n)
tmulta(step,n) = for1(0,step,n)
P(step,n1) = c(step = 0)*c(n1 = n)
"""

TRIANGLE = """
Padd(out) = c(2<=out)*c(out<=n)*(1/n*1/n*(out-1)) +
            c(1+n<=out)*c(out<=2*n)*(1/n*1/n*(1+2*n-out))
"""

THIRD, NINTH = Fraction(1, 3), Fraction(1, 9)


class TestIntegerEvaluation(unittest.TestCase):

    def test_matmul_steps(self):
        """n^3 + 2n^2 assignments for n x n matrices."""
        print("\n--- Testing step counts of the matmul program ---")
        program = parse_program(MATMUL_IR)
        for n, steps in ((0, 0), (1, 3), (2, 16), (3, 45), (4, 96)):
            self.assertEqual(eval_exp(program, "tmulta", [0, n]), steps)
        self.assertEqual(eval_exp(program, "for3", [0, 0, 3]), 3)
        print("  ✅ Test passed!")

    def test_add(self):
        program = parse_program("add(x,y) = if x=<0 then y else add(x-1,y+1)")
        self.assertEqual(eval_exp(program, "add", [2, 3]), 5)

    def test_step_budget(self):
        program = parse_program("f(x) = if x = 0 then 0 else f(x+1)")
        with self.assertRaises(NonTermination):
            eval_exp(program, "f", [1], step_budget=100)

    def test_division_by_zero(self):
        program = parse_program("g(x) = 10/x")
        self.assertEqual(eval_exp(program, "g", [-3]), -4)
        with self.assertRaises(DivByZero):
            eval_exp(program, "g", [0])

    def test_argdev(self):
        e = ArgDev("x", Sub(Var("x"), Const(1)), Const(3))
        self.assertEqual(Evaluator(Program()).exp(e, {"x": 10}), 7)


class TestProbabilityEvaluation(unittest.TestCase):

    def test_uniform_die(self):
        program = parse_program("P(x) = c(1=<x)*c(x=<6)*1/6")
        self.assertEqual(eval_qexp(program, CallP("P", (Const(2),))), Fraction(1, 6))
        self.assertEqual(eval_qexp(program, CallP("P", (Const(7),))), 0)

    def test_sum_and_empty_product(self):
        self.assertEqual(eval_qexp(Program(), parse_qexp("sum(x, c(1=<x)*c(x=<4)*i2r(x)/i2r(10))")), 1)
        self.assertEqual(eval_qexp(Program(), parse_qexp("prod(j, c(1 =< j)*c(j =< 0), 1/2)")), 1)
        self.assertEqual(eval_qexp(Program(), parse_qexp("c(3 =< 5)")), 1)

    def test_unbounded_sum(self):
        with self.assertRaises(UnboundedSummation):
            eval_qexp(Program(), parse_qexp("sum(x, c(1 =< x)*1/2)"))

    def test_parameters_from_env(self):
        program = parse_program("P(x) = c(1=<x)*c(x=<n)*1/n")
        self.assertEqual(eval_qexp(program, CallP("P", (Const(3),)), env={"n": 4}), Fraction(1, 4))


class TestTabulation(unittest.TestCase):

    def setUp(self):
        self.program = parse_program(TRIANGLE)

    def test_triangle_at_three(self):
        print("\n--- Testing tabulation of the triangular distribution ---")
        d = tabulate(self.program, "Padd", {"n": 3}, 0, 8)
        self.assertEqual(d.nonzero(), {2: NINTH, 3: 2 * NINTH, 4: THIRD, 5: 2 * NINTH, 6: NINTH})
        self.assertEqual(d.mass, 1)
        self.assertEqual(d.kind, EXACT)
        self.assertEqual(expected_value_bounds(d), (4, 4))
        print("  ✅ Test passed!")

    def test_parallel_tabulation_matches(self):
        serial = tabulate(self.program, "Padd", {"n": 5}, 0, 12)
        parallel = tabulate(self.program, "Padd", {"n": 5}, 0, 12, workers=4)
        self.assertEqual(serial.support, parallel.support)

    def test_specialize(self):
        pdef = specialize(self.program, "Padd", {"n": 3})
        program = self.program.with_prob(pdef)
        self.assertNotIn("n", free_vars(pdef.body))
        self.assertEqual(tabulate(program, "Padd", {}, 0, 8).support,
                         tabulate(self.program, "Padd", {"n": 3}, 0, 8).support)
        self.assertIs(specialize(self.program, "Padd", {}), self.program.prob("Padd"))

    def test_empty_range(self):
        with self.assertRaises(ValueError):
            tabulate(self.program, "Padd", {"n": 3}, 5, 4)


class TestDistribution(unittest.TestCase):

    def test_invariants(self):
        with self.assertRaises(ValueError):
            Distribution({0: Fraction(3, 2)})
        with self.assertRaises(ValueError):
            Distribution({0: THIRD, 1: THIRD, 2: THIRD, 3: THIRD})
        Distribution({0: 1, 1: 1}, OVER_APPROX)

    def test_unchecked_claims_are_kept(self):
        """A tabulated claim with mass above 1 is kept for the comparison."""
        claim = Distribution({0: THIRD, 1: THIRD, 2: THIRD, 3: THIRD}, checked=False)
        self.assertEqual(claim.mass, 4 * THIRD)
        self.assertEqual(claim.restrict(0, 1).missing, 2 * THIRD)
        self.assertFalse(claim.restrict(0, 1).checked)
        with self.assertRaises(ValueError):
            Distribution({0: 1}, "Approximate", checked=False)
        program = parse_program("P(z) = c(0=<z)*c(z=<3)*1/3")
        self.assertFalse(tabulate(program, "P", {}, 0, 3).checked)

    def test_restrict_keeps_missing_mass(self):
        d = Distribution({1: Fraction(1, 2), 5: Fraction(1, 2)}).restrict(0, 3)
        self.assertEqual(d.support, {1: Fraction(1, 2)})
        self.assertEqual(d.missing, Fraction(1, 2))

    def test_expected_value_bounds(self):
        self.assertEqual(expected_value_bounds(Distribution({16: 1})), (16, 16))
        self.assertEqual(expected_value_bounds(Distribution({0: 1, 1: 1}, OVER_APPROX)), (0, 1))
        with self.assertRaises(EmptySupport):
            expected_value_bounds(Distribution({3: 0}))

    def test_csv_and_plot_files(self):
        d = Distribution({2: NINTH, 3: 8 * NINTH})
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = os.path.join(tmp, "out", "dist.csv")
            write_distribution_csv(d, csv_path)
            with open(csv_path, encoding="utf-8") as f:
                lines = f.read().splitlines()
            self.assertEqual(lines[0], "z,probability_num,probability_den,probability_float")
            self.assertEqual(lines[1], "2,1,9,0.111111111111")
            self.assertEqual(lines[-1], "# mass=1 kind=Exact")
            self.assertEqual(read_distribution_csv(csv_path).support, d.support)

            plot_path = os.path.join(tmp, "dist.dat")
            emit_plot_data(d, plot_path)
            with open(plot_path, encoding="utf-8") as f:
                self.assertEqual(f.read().splitlines(), ["# z value", "2 0.111111111111", "3 0.888888888889"])

    def test_empty_plot_is_header_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "empty.dat")
            emit_plot_data(Distribution({}), path)
            with open(path, encoding="utf-8") as f:
                self.assertEqual(f.read().splitlines(), ["# z value"])


if __name__ == '__main__':
    unittest.main(verbosity=2)
