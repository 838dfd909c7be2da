import os
import sys
import argparse
import logging

# =================================================================
#                 Global Paths
# =================================================================

try:
    PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
except NameError:
    PROJECT_ROOT = os.getcwd()

if PROJECT_ROOT not in sys.path:
    sys.path.append(PROJECT_ROOT)

from shared_utils import utils
from core_ir.errors import AnalysisError, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION
from core_ir.syntax import format_program, format_term, parse_program
from evaluator.distribution import (
    tabulate, expected_value_bounds, write_distribution_csv, read_distribution_csv, emit_plot_data,
)
from evaluator.evaluate import Evaluator
from frontend_c.instrument import CostModel, instrument
from frontend_c.parsing import parse_c
from oracle.compare import compare
from pipeline.artifacts import write_text, write_report
from pipeline.config import C_SOURCE, JobConfig, parse_binding, parse_number, parse_range, parse_expectation
from pipeline.run import read_source, load_c, load_program, run_oracle, run_pipeline

logger = logging.getLogger("resdist")

PACKAGES = ("core_ir", "frontend_c", "evaluator", "oracle", "transform", "symbolic", "pipeline")


# =================================================================
#                 Console helpers
# =================================================================

def print_distribution(d, title="Output distribution"):
    utils.print_header(title)
    rows = d.nonzero()
    if not rows:
        print("  (no output value with positive probability in range)")
    for z, p in rows.items():
        print(f"  out = {z:>6}   {str(p):>16}   {float(p):.12g}")
    print("-" * 60)
    print(f"  mass = {d.mass}   kind = {d.kind}")
    if d.nonterminating_mass:
        print(f"  non-terminating mass = {d.nonterminating_mass}")
    if rows:
        lo, hi = expected_value_bounds(d)
        shown = str(lo) if lo == hi else f"[{lo}, {hi}]"
        print(f"  expected value = {shown}")


def emit(text, path):
    """Write text to path, or print it when no path is given."""
    if path:
        write_text(path, text)
        print(f"✅ Wrote {path}")
    else:
        print(text)


def _guarded(handler, args):
    try:
        return handler(args)
    except AnalysisError as e:
        logger.error("%s", e)
        return e.exit_code
    except (OSError, ValueError) as e:
        logger.error("%s", e)
        return EXIT_USAGE


# =================================================================
#                 Subcommands
# =================================================================

def command_instrument(args):
    prog = parse_c(read_source(args.input), name=args.input)
    instrumented = instrument(prog, CostModel.parse(args.cost))
    emit(instrumented.source(), args.output)
    return EXIT_OK


def command_translate(args):
    translation = load_c(args.input, CostModel.parse(args.cost))
    emit(format_program(translation.program), args.output)
    return EXIT_OK


def command_analyze(args):
    cfg = JobConfig.from_args(args, utils.settings)
    result = run_pipeline(cfg)
    pr = result.analysis
    if pr is not None:
        utils.print_header(f"{pr.name}: {pr.form}")
        print(f"{pr.name}(out) = {format_term(pr.body)}")
        for line in pr.diagnostics:
            print(f"  ℹ️  {line}")
    if result.distribution is not None:
        print_distribution(result.distribution)
    if result.sweep is not None:
        utils.print_header(f"Sweep over {cfg.sweep[0]}")
        print(result.sweep.to_string(index=False))
    if result.report is not None:
        print(result.report.render())

    rows = [("Input", cfg.input_path)]
    if result.loaded is not None:
        rows += [("Target", result.loaded.function), ("Input distribution", result.loaded.distribution)]
    if pr is not None:
        rows += [("Form", pr.form), ("Kind", pr.kind), ("Rules applied", len(pr.trace))]
    if result.error is not None:
        rows.append(("Error", result.error))
    rows.append(("Exit code", result.exit_code))
    utils.print_summary("Analysis Summary", rows, ok=result.exit_code == EXIT_OK)
    return result.exit_code


def command_eval(args):
    cfg = JobConfig.from_args(args, utils.settings)
    if cfg.mode == C_SOURCE:
        program = load_c(cfg.input_path, cfg.cost).program
    else:
        program = parse_program(read_source(cfg.input_path))
    name = args.name
    values = [parse_number(v) for v in args.args]
    evaluator = Evaluator(program, cfg.params, cfg.step_budget)

    if program.has_func(name):
        print(f"{name}({', '.join(map(str, values))}) = {evaluator.call(name, values)}")
        return EXIT_OK
    if not program.has_prob(name):
        raise ValueError(f"no function or probability function named '{name}'")
    if values:
        value = evaluator.call_prob(name, values)
        print(f"{name}({', '.join(map(str, values))}) = {value}")
        return EXIT_OK
    if cfg.z_range is None:
        raise ValueError("tabulating a probability function needs --range out=lo..hi")
    d = tabulate(program, name, cfg.params, *cfg.z_range, workers=cfg.workers,
                 step_budget=cfg.step_budget)
    print_distribution(d, f"{name} on {cfg.z_range[0]}..{cfg.z_range[1]}")
    if cfg.csv:
        write_distribution_csv(d, cfg.csv)
    if cfg.plot:
        emit_plot_data(d, cfg.plot)
    return EXIT_OK


def command_oracle(args):
    cfg = JobConfig.from_args(args, utils.settings)
    loaded = load_program(cfg)
    d = run_oracle(loaded, cfg, dict(cfg.params))
    if cfg.z_range is not None:
        d = d.restrict(*cfg.z_range)
    print_distribution(d, f"Oracle for {loaded.function}")
    if cfg.csv:
        write_distribution_csv(d, cfg.csv)
    if cfg.plot:
        emit_plot_data(d, cfg.plot)
    return EXIT_OK


def command_compare(args):
    analyzed = read_distribution_csv(args.analyzed)
    oracle = read_distribution_csv(args.oracle)
    zlo = zhi = None
    if args.range:
        _, zlo, zhi = parse_range(args.range)
    expected = dict(parse_expectation(e) for e in args.expect or ())
    report = compare(analyzed, oracle, zlo, zhi, expected)
    print(report.render())
    if args.report:
        write_report(report, args.report)
    return EXIT_OK if report.passed else EXIT_VIOLATION


def command_settings(args):
    """Show the budgets in settings.json; `key=value` pairs update and save them."""
    for pair in args.assign or ():
        utils.update_setting(*parse_binding(pair))
    if args.assign and not utils.save_settings():
        return EXIT_USAGE
    utils.print_summary("Settings", sorted(utils.settings.items()))
    return EXIT_OK


def command_usage(args):
    module_path = args.package or ""
    return EXIT_OK if utils.show_usage(module_path) else EXIT_USAGE


# =================================================================
#                 Argument parsing
# =================================================================

def _program_arguments(parser):
    parser.add_argument("input", help="Program file: .c (annotated mini-C) or .ir (intermediate language)")
    parser.add_argument("--target", help="Function to analyze (default: the C target / the top-level function)")
    parser.add_argument("--input-dist", dest="input_dist", help="Joint input distribution (default: inferred)")
    parser.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                        help="Parameter value, integer or rational (n=4, p=3/4)")
    parser.add_argument("--range", action="append", default=[], metavar="NAME=LO..HI",
                        help="out=LO..HI for the output; any other name overrides an input range")
    parser.add_argument("--cost", action="append", default=[], metavar="KIND=K",
                        help="Cost model for C input, e.g. assign=1,decl=1")
    parser.add_argument("--step-budget", dest="step_budget", type=int)
    parser.add_argument("--enumeration-limit", dest="enumeration_limit", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--force", action="store_true", help="Enumerate beyond the enumeration limit")
    parser.add_argument("--csv", help="Write the distribution as CSV")
    parser.add_argument("--plot", help="Write `z value` plot data")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="resdist",
        description="Closed-form probability distributions of resource usage.")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log every rule application")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("instrument", help="Add the step counter to an annotated C file")
    p.add_argument("input")
    p.add_argument("--cost", action="append", default=[], metavar="KIND=K")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=command_instrument)

    p = sub.add_parser("translate", help="Instrument, slice and translate C to the intermediate language")
    p.add_argument("input")
    p.add_argument("--cost", action="append", default=[], metavar="KIND=K")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=command_translate)

    p = sub.add_parser("analyze", help="Derive the output distribution in closed form")
    _program_arguments(p)
    p.add_argument("--fixpoint-budget", dest="fixpoint_budget", type=int)
    p.add_argument("--seed", type=int, help="Shuffle rule order inside each priority group")
    p.add_argument("-o", "--output", help="Write the analyzed program")
    p.add_argument("--trace", help="Write every rule application")
    p.add_argument("--compare", action="store_true", help="Check against the enumeration oracle")
    p.add_argument("--report", help="Write the comparison report")
    p.add_argument("--expect", action="append", default=[], metavar="Z=P",
                   help="Reference probability to check against the oracle")
    p.add_argument("--sweep", nargs="+", metavar="NAME=LO..HI",
                   help="Tabulate for every value of a parameter: p=0..1:1/4 or p=0..1 step 1/4")
    p.add_argument("--sweep-output", dest="sweep_output", help="Write the sweep table as CSV")
    p.set_defaults(handler=command_analyze)

    p = sub.add_parser("eval", help="Evaluate a function or probability function")
    _program_arguments(p)
    p.add_argument("name", help="Function or probability function")
    p.add_argument("args", nargs="*", help="Integer arguments")
    p.set_defaults(handler=command_eval)

    p = sub.add_parser("oracle", help="Output distribution by enumerating every input")
    _program_arguments(p)
    p.set_defaults(handler=command_oracle)

    p = sub.add_parser("compare", help="Compare an analyzed CSV against an oracle CSV")
    p.add_argument("analyzed")
    p.add_argument("oracle")
    p.add_argument("--range", metavar="out=LO..HI")
    p.add_argument("--expect", action="append", default=[], metavar="Z=P")
    p.add_argument("--report")
    p.set_defaults(handler=command_compare)

    p = sub.add_parser("settings", help="Show or update the default budgets")
    p.add_argument("assign", nargs="*", metavar="KEY=VALUE")
    p.set_defaults(handler=command_settings)

    p = sub.add_parser("usage", help="Show the README of the project or of a package")
    p.add_argument("package", nargs="?", choices=PACKAGES)
    p.set_defaults(handler=command_usage)
    return parser


# =================================================================
#                         Main
# =================================================================

def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if not e.code else EXIT_USAGE
    utils.setup_logging(args.verbose)
    utils.load_settings()
    return _guarded(args.handler, args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nInterrupted.")
        sys.exit(EXIT_USAGE)
