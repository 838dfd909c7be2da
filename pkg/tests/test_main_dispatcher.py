import unittest
import sys
import os
import io
import tempfile
from contextlib import redirect_stdout
from fractions import Fraction
from unittest.mock import patch

# Add project root to Python search path
# So test scripts can correctly import main and shared_utils
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PROJECT_ROOT)

# Import target module to test
import main
from core_ir.errors import EXIT_OK, EXIT_USAGE, EXIT_INCOMPLETE, EXIT_VIOLATION
from evaluator.distribution import Distribution, write_distribution_csv
from pipeline.run import PipelineResult
from shared_utils.utils import PROGRAMS_PATH


def sample(name):
    return os.path.join(PROGRAMS_PATH, name)


def run_main(argv):
    """main(argv) with stdout captured; returns (exit code, output)."""
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = main.main(argv)
    return code, buffer.getvalue()


class TestMainDispatcher(unittest.TestCase):

    @patch('main.run_pipeline')
    def test_analyze_builds_the_job(self, mock_run_pipeline):
        """
        Test whether `analyze` turns its flags into a JobConfig and returns the pipeline's exit code.
        """
        print("\n--- Testing command 'analyze' ---")
        mock_run_pipeline.return_value = PipelineResult(exit_code=EXIT_INCOMPLETE)

        code, _ = run_main(["analyze", "prog.ir", "--param", "n=3", "--range", "out=0..8",
                            "--compare", "--seed", "5"])

        print("  [Verify] Was run_pipeline called with the parsed configuration...")
        self.assertTrue(mock_run_pipeline.called, "'analyze' did not start the pipeline!")
        cfg = mock_run_pipeline.call_args[0][0]
        self.assertEqual(cfg.input_path, "prog.ir")
        self.assertEqual(cfg.params, {"n": 3})
        self.assertEqual(cfg.z_range, (0, 8))
        self.assertEqual(cfg.seed, 5)
        self.assertTrue(cfg.compare)
        self.assertEqual(code, EXIT_INCOMPLETE)
        print("  ✅ Test passed!")

    @patch('main.run_pipeline')
    def test_analyze_sweep_without_quotes(self, mock_run_pipeline):
        mock_run_pipeline.return_value = PipelineResult(exit_code=EXIT_OK)
        code, _ = run_main(["analyze", "monty.ir", "--range", "out=0..1",
                            "--sweep", "p=0..1", "step", "1/4"])
        self.assertEqual(code, EXIT_OK)
        cfg = mock_run_pipeline.call_args[0][0]
        quarter = Fraction(1, 4)
        self.assertEqual(cfg.sweep, ("p", (0, quarter, 2 * quarter, 3 * quarter, 1)))

    def test_usage_errors(self):
        print("\n--- Testing argument errors ---")
        with patch('sys.stderr', new_callable=io.StringIO):
            self.assertEqual(main.main([]), EXIT_USAGE)
            self.assertEqual(main.main(["no-such-command"]), EXIT_USAGE)
            self.assertEqual(run_main(["analyze", "prog.ir", "--range", "out=5..1"])[0], EXIT_USAGE)
        self.assertEqual(run_main(["--help"])[0], EXIT_OK)
        print("  ✅ Test passed!")

    def test_eval_function_and_distribution(self):
        print("\n--- Testing command 'eval' ---")
        code, output = run_main(["eval", sample("add.ir"), "add", "2", "3"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("add(2, 3) = 5", output)

        code, output = run_main(["eval", sample("add.ir"), "P", "2", "--param", "n=4"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("P(2) = 1/4", output)

        code, output = run_main(["eval", sample("add.ir"), "P", "--param", "n=4", "--range", "out=0..5"])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("mass = 1", output)
        print("  ✅ Test passed!")

    def test_instrument_writes_listing(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "matmul_step.c")
            code, output = run_main(["instrument", sample("matmul.c"), "-o", path])
            self.assertEqual(code, EXIT_OK)
            self.assertIn("Wrote", output)
            with open(path, encoding="utf-8") as f:
                self.assertIn("return step;", f.read())

    def test_translate_prints_program(self):
        code, output = run_main(["translate", sample("matmul.c")])
        self.assertEqual(code, EXIT_OK)
        self.assertIn("tmulta(step, n)", output.replace("step,n", "step, n"))

    def test_compare_command(self):
        print("\n--- Testing command 'compare' on CSV files ---")
        with tempfile.TemporaryDirectory() as tmp:
            oracle = os.path.join(tmp, "oracle.csv")
            good = os.path.join(tmp, "good.csv")
            bad = os.path.join(tmp, "bad.csv")
            write_distribution_csv(Distribution({2: Fraction(1, 2), 3: Fraction(1, 2)}), oracle)
            write_distribution_csv(Distribution({2: Fraction(1, 2), 3: Fraction(1, 2)}), good)
            write_distribution_csv(Distribution({2: 1}), bad)
            self.assertEqual(run_main(["compare", good, oracle, "--range", "out=0..4"])[0], EXIT_OK)
            code, output = run_main(["compare", bad, oracle])
            self.assertEqual(code, EXIT_VIOLATION)
            self.assertIn("violation", output)
        print("  ✅ Test passed!")

    @patch('main.utils.save_settings', return_value=True)
    def test_settings_update(self, mock_save):
        code, output = run_main(["settings", "step_budget=10"])
        self.assertEqual(code, EXIT_OK)
        self.assertTrue(mock_save.called)
        self.assertEqual(main.utils.settings["step_budget"], 10)
        self.assertIn("step_budget", output)

        mock_save.reset_mock()
        self.assertEqual(run_main(["settings", "colour=1"])[0], EXIT_USAGE)
        self.assertFalse(mock_save.called)

    @patch('main.utils.show_usage', return_value=True)
    def test_usage_command(self, mock_show_usage):
        """Selecting a package shows that package's README."""
        self.assertEqual(run_main(["usage", "oracle"])[0], EXIT_OK)
        mock_show_usage.assert_called_with("oracle")
        self.assertEqual(run_main(["usage"])[0], EXIT_OK)
        mock_show_usage.assert_called_with("")


# This allows running this file directly from the command line
if __name__ == '__main__':
    # Use verbosity=2 for detailed output from unittest framework
    unittest.main(verbosity=2)
