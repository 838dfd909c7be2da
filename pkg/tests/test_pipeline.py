import unittest
import sys
import os
import argparse
import json
import tempfile
from fractions import Fraction
from unittest.mock import patch

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_ROOT)

from core_ir.errors import (
    MassNotOne, ParseError, UnsupportedConstruct,
    EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_INCOMPLETE, EXIT_VIOLATION,
)
from core_ir.syntax import parse_program
from evaluator.distribution import Distribution, EXACT, OVER_APPROX, tabulate
from frontend_c.instrument import CostModel
from pipeline import (
    JobConfig, C_SOURCE, INTERMEDIATE, parse_range, parse_sweep, parse_binding, parse_expectation,
    default_function, default_distribution, run_pipeline,
)
from shared_utils import utils
from shared_utils.utils import PROGRAMS_PATH


THIRD = Fraction(1, 3)

# inputs 0, 1 and 2; the product is 0 from x = 3 on
SKIP_TWO = """
f(x) = x
Px(x) = c(0=<x)*c(x=<4)*prod(j, c(0=<j)*c(j=<x-1), c(not(j = 2)))*1/3
"""


def sample(name):
    return os.path.join(PROGRAMS_PATH, name)


def namespace(**values):
    defaults = dict(input="prog.ir", target=None, input_dist=None, param=None, range=None,
                    cost=None, step_budget=None, fixpoint_budget=None, enumeration_limit=None,
                    workers=None, seed=None, output=None, csv=None, plot=None, trace=None,
                    report=None, sweep=None, sweep_output=None, expect=None, compare=False,
                    force=False)
    defaults.update(values)
    return argparse.Namespace(**defaults)


class TestConfigParsing(unittest.TestCase):

    def test_bindings_and_ranges(self):
        self.assertEqual(parse_binding("p=3/4"), ("p", Fraction(3, 4)))
        self.assertEqual(parse_binding("n=3"), ("n", 3))
        self.assertEqual(parse_range("out=0..100"), ("out", 0, 100))
        self.assertEqual(parse_range("x = -2 .. 2"), ("x", -2, 2))
        self.assertEqual(parse_expectation("3=3/20"), (3, Fraction(3, 20)))
        for bad in ("x=5..4", "x=1", "=1..2"):
            with self.assertRaises(ValueError, msg=bad):
                parse_range(bad)
        with self.assertRaises(ValueError):
            parse_binding("p=abc")

    def test_sweep(self):
        quarter = Fraction(1, 4)
        self.assertEqual(parse_sweep("p=0..1:1/4"), ("p", (0, quarter, 2 * quarter, 3 * quarter, 1)))
        self.assertEqual(parse_sweep("p=0..1 step 1/2"), ("p", (0, Fraction(1, 2), 1)))
        self.assertEqual(parse_sweep("n=1..3"), ("n", (1, 2, 3)))
        with self.assertRaises(ValueError):
            parse_sweep("p=1..0:1/2")
        with self.assertRaises(ValueError):
            parse_sweep("p=0..1:0")

    def test_from_args(self):
        print("\n--- Testing JobConfig from command-line arguments ---")
        args = namespace(input="matmul.c", param=["n=3"], range=["out=0..100", "x=1..3"],
                         cost=["assign=2"], step_budget=7, compare=True, expect=["16=1"])
        cfg = JobConfig.from_args(args, settings={"fixpoint_budget": 50})
        self.assertEqual(cfg.mode, C_SOURCE)
        self.assertEqual(cfg.params, {"n": 3})
        self.assertEqual(cfg.z_range, (0, 100))
        self.assertEqual(cfg.input_ranges, {"x": (1, 3)})
        self.assertEqual(cfg.cost, CostModel(assign=2))
        self.assertEqual(cfg.step_budget, 7)
        self.assertEqual(cfg.fixpoint_budget, 50)
        self.assertEqual(cfg.expect, {16: Fraction(1)})
        self.assertTrue(cfg.compare)
        print("  ✅ Test passed!")

    def test_settings_defaults(self):
        cfg = JobConfig.from_args(namespace(), settings={})
        self.assertEqual(cfg.mode, INTERMEDIATE)
        self.assertEqual(cfg.step_budget, 1_000_000)
        self.assertEqual(cfg.workers, 4)
        self.assertIsNone(cfg.z_range)

    def test_settings_file_is_validated(self):
        """Invalid budgets in settings.json fall back to the defaults."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "settings.json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"step_budget": 50, "sweep_workers": 0, "colour": 1}, f)
            with patch("shared_utils.utils.SETTINGS_FILE_PATH", path):
                loaded = utils.load_settings()
        self.assertEqual(loaded["step_budget"], 50)
        self.assertEqual(loaded["sweep_workers"], 4)
        self.assertNotIn("colour", loaded)
        with self.assertRaises(ValueError):
            utils.update_setting("fixpoint_budget", Fraction(1, 2))

    def test_inconsistent_options(self):
        with self.assertRaises(ValueError):
            JobConfig("prog.ir", compare=True)
        with self.assertRaises(ValueError):
            JobConfig("prog.ir", sweep=("p", (0, 1)))
        with self.assertRaises(ValueError):
            JobConfig("prog.ir", z_range=(0, 1), params={"p": 1}, sweep=("p", (0, 1)))
        with self.assertRaises(ValueError):
            JobConfig("prog.ir", z_range=(0, 1), compare=True, sweep=("p", (0, 1)))


class TestDefaults(unittest.TestCase):

    def test_default_function_and_distribution(self):
        with open(sample("sum4.ir"), encoding="utf-8") as f:
            program = parse_program(f.read())
        self.assertEqual(default_function(program), "tsum4")
        self.assertEqual(default_distribution(program, "tsum4"), "Pxyzw")
        with open(sample("add.ir"), encoding="utf-8") as f:
            program = parse_program(f.read())
        self.assertEqual(default_distribution(program, "add"), "Pxy")

    def test_ambiguous_defaults(self):
        program = parse_program("f(x) = x\ng(x) = x+1\nP(x) = c(x = 0)")
        with self.assertRaises(ValueError):
            default_function(program)
        program = parse_program("f(x) = x\nP(x) = c(x = 0)\nQ(x) = c(x = 1)")
        with self.assertRaises(ValueError):
            default_distribution(program, "f")


class TestExitCodes(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def write(self, name, text):
        path = os.path.join(self.tmp.name, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_missing_file(self):
        result = run_pipeline(JobConfig(os.path.join(self.tmp.name, "none.ir")))
        self.assertEqual(result.exit_code, EXIT_USAGE)

    def test_parse_errors(self):
        result = run_pipeline(JobConfig(self.write("bad.ir", "f(x) = x $ 1\n")))
        self.assertEqual(result.exit_code, EXIT_PARSE)
        self.assertIsInstance(result.error, ParseError)

        source = "// Toanalyze: f(N)\nvoid f(int n){ while (n > 0) { n = n - 1; } }\n"
        result = run_pipeline(JobConfig(self.write("bad.c", source), mode=C_SOURCE))
        self.assertEqual(result.exit_code, EXIT_PARSE)
        self.assertIsInstance(result.error, UnsupportedConstruct)

    def test_input_mass_is_checked(self):
        path = self.write("mass.ir", "f(x) = x\nP(x) = c(1=<x)*c(x=<3)*1/2\n")
        result = run_pipeline(JobConfig(path, z_range=(0, 5), compare=True))
        self.assertIsInstance(result.error, MassNotOne)
        self.assertEqual(result.exit_code, EXIT_INCOMPLETE)

    def test_artifacts_and_success(self):
        print("\n--- Testing a full job with every artifact ---")
        out = os.path.join(self.tmp.name, "out")
        cfg = JobConfig(
            sample("add.ir"), params={"n": 3}, z_range=(0, 8), compare=True,
            output=os.path.join(out, "padd.ir"), csv=os.path.join(out, "padd.csv"),
            plot=os.path.join(out, "padd.dat"), trace=os.path.join(out, "padd.trace"),
            report=os.path.join(out, "report.txt"),
        )
        result = run_pipeline(cfg)
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertTrue(result.report.passed)
        self.assertEqual(result.distribution.probability(4), Fraction(1, 3))
        for name in ("padd.ir", "padd.csv", "padd.dat", "padd.trace", "report.txt"):
            self.assertTrue(os.path.exists(os.path.join(out, name)), name)
        with open(os.path.join(out, "padd.ir"), encoding="utf-8") as f:
            written = parse_program(f.read())
        self.assertTrue(written.has_prob(result.analysis.name))
        print("  ✅ Test passed!")

    def test_violation(self):
        cfg = JobConfig(sample("add.ir"), params={"n": 3}, z_range=(0, 8), compare=True)
        with patch("pipeline.run.tabulate", return_value=Distribution({2: 1})):
            result = run_pipeline(cfg)
        self.assertEqual(result.exit_code, EXIT_VIOLATION)
        self.assertFalse(result.report.passed)

    def test_user_product_is_over_approximated(self):
        """A product written in the input distribution is not removed as exact."""
        print("\n--- Testing a product over the input values ---")
        path = self.write("skip.ir", SKIP_TWO)
        result = run_pipeline(JobConfig(path, z_range=(0, 4), compare=True))
        self.assertIsNone(result.error)
        self.assertFalse(result.analysis.exact)
        self.assertEqual(result.distribution.kind, OVER_APPROX)
        self.assertTrue(result.report.passed, result.report.render())
        self.assertEqual(result.oracle.nonzero(), {0: THIRD, 1: THIRD, 2: THIRD})
        print("  ✅ Test passed!")

    def test_wrong_exact_result_is_a_violation(self):
        """An Exact claim with mass above 1 reaches the comparison instead of failing early."""
        path = self.write("skip.ir", SKIP_TWO)

        def claim_exact(*args, **kwargs):
            kwargs["kind"] = EXACT
            return tabulate(*args, **kwargs)

        with patch("pipeline.run.tabulate", side_effect=claim_exact):
            result = run_pipeline(JobConfig(path, z_range=(0, 4), compare=True))
        self.assertIsNone(result.error)
        self.assertEqual(result.distribution.mass, 5 * THIRD)
        self.assertEqual(result.exit_code, EXIT_VIOLATION)
        self.assertEqual([v.z for v in result.report.violations], [3, 4])

    def test_unexpected_errors_become_usage_errors(self):
        with patch("pipeline.run.load_program", side_effect=RuntimeError("boom")):
            result = run_pipeline(JobConfig(sample("add.ir")))
        self.assertEqual(result.exit_code, EXIT_USAGE)
        self.assertIsInstance(result.error, RuntimeError)


if __name__ == '__main__':
    unittest.main(verbosity=2)
