"""End-to-end job: load, analyze, tabulate, compare and write the artifacts."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import pandas as pd

from core_ir.errors import (
    AnalysisError, UnsupportedRecursion, UnsupportedSeries, SymbolicError,
    EXIT_OK, EXIT_USAGE, EXIT_INCOMPLETE, EXIT_VIOLATION,
)
from core_ir.syntax import parse_program, format_term
from core_ir.terms import Call, CallP, Program
from core_ir.traversal import walk
from evaluator.distribution import (
    Distribution, tabulate, write_distribution_csv, emit_plot_data,
)
from frontend_c.instrument import instrument, uses_step
from frontend_c.parsing import parse_c
from frontend_c.translate import translate_c
from oracle.compare import ComparisonReport, compare
from oracle.enumeration import derive_input_spec, validate_input_dist, enumerate_distribution
from pipeline.artifacts import write_program, write_trace, write_report, sweep_frame, write_sweep
from pipeline.config import C_SOURCE
from transform.phases import PhaseResult, analyze

logger = logging.getLogger(__name__)


@dataclass
class LoadedProgram:
    program: Program
    function: str
    distribution: str


@dataclass
class PipelineResult:
    exit_code: int = EXIT_OK
    analysis: Optional[PhaseResult] = None
    distribution: Optional[Distribution] = None
    oracle: Optional[Distribution] = None
    report: Optional[ComparisonReport] = None
    sweep: Optional[pd.DataFrame] = None
    error: Optional[BaseException] = None
    loaded: Optional[LoadedProgram] = None


# =================================================================
#                 Loading
# =================================================================

def read_source(path):
    with open(path, "r", encoding="utf-8") as f:
        return f.read()


def _called(program):
    names = set()
    for fdef in program.funcs:
        names |= {node.name for node in walk(fdef.body)
                  if isinstance(node, Call) and node.name != fdef.name}
    return names


def default_function(program):
    """The only function no other function calls."""
    called = _called(program)
    candidates = [f.name for f in program.funcs if f.name not in called]
    if len(candidates) != 1:
        raise ValueError("cannot tell which function to analyze "
                         f"({', '.join(candidates) or 'none'}); pass --target")
    return candidates[0]


def default_distribution(program, fname):
    """The joint input distribution for fname: same arity, not used by another distribution."""
    arity = len(program.func(fname).params)
    used = set()
    for pdef in program.probs:
        used |= {node.name for node in walk(pdef.body) if isinstance(node, CallP)}
    candidates = [p.name for p in program.probs if len(p.params) == arity]
    if len(candidates) > 1:
        candidates = [name for name in candidates if name not in used]
    if len(candidates) != 1:
        raise ValueError(f"cannot tell which input distribution belongs to {fname} "
                         f"({', '.join(candidates) or 'none'}); pass --input-dist")
    return candidates[0]


def load_c(path, cost):
    """Parse, instrument (unless done already) and translate a C file."""
    prog = parse_c(read_source(path), name=path)
    if prog.annotation is not None and not uses_step(prog.target):
        prog = instrument(prog, cost)
    return translate_c(prog)


def load_program(cfg):
    if cfg.mode == C_SOURCE:
        translation = load_c(cfg.input_path, cfg.cost)
        program = translation.program
        fname = cfg.target or translation.function
        pname = cfg.input_name or translation.distribution
    else:
        program = parse_program(read_source(cfg.input_path))
        fname = cfg.target or default_function(program)
        pname = cfg.input_name or default_distribution(program, fname)
    if not program.has_func(fname):
        raise ValueError(f"no function named '{fname}' in {cfg.input_path}")
    if not program.has_prob(pname):
        raise ValueError(f"no probability function named '{pname}' in {cfg.input_path}")
    logger.info("Loaded %s: analyzing %s under %s", cfg.input_path, fname, pname)
    return LoadedProgram(program, fname, pname)


# =================================================================
#                 Phases
# =================================================================

def analyze_job(loaded, cfg):
    """Symbolic analysis, then one specialized to --param values when it is not closed."""
    attempts = [None]
    if cfg.params:
        attempts.append(dict(cfg.params))
    result, failure = None, None
    for env in attempts:
        label = "symbolic" if env is None else "specialized"
        try:
            pr = analyze(loaded.program, loaded.function, loaded.distribution, env=env,
                         budget=cfg.fixpoint_budget, seed=cfg.seed)
        except (UnsupportedRecursion, UnsupportedSeries, SymbolicError) as exc:
            logger.warning("%s analysis stopped: %s", label, exc)
            failure = exc
            continue
        result = pr
        if pr.closed:
            break
        logger.info("%s analysis is not closed", label)
    if result is None:
        raise failure
    logger.info("Result: %s(out) = %s", result.name, format_term(result.body))
    return result


def run_oracle(loaded, cfg, env):
    spec = derive_input_spec(loaded.program, loaded.distribution, env, cfg.input_ranges)
    validate_input_dist(loaded.program, spec, env, cfg.enumeration_limit, cfg.force)
    return enumerate_distribution(loaded.program, loaded.function, spec, env,
                                  limit=cfg.enumeration_limit, force=cfg.force,
                                  workers=cfg.workers, step_budget=cfg.step_budget)


def run_sweep(pr, cfg):
    """Tabulate the analyzed distribution once per value of the swept parameter."""
    name, values = cfg.sweep
    lo, hi = cfg.z_range

    def point(value):
        env = dict(cfg.params)
        env[name] = value
        return value, tabulate(pr.program, pr.name, env, lo, hi, kind=pr.kind,
                               step_budget=cfg.step_budget)

    with ThreadPoolExecutor(max_workers=max(1, cfg.workers)) as executor:
        rows = list(executor.map(point, values))
    frame = sweep_frame(name, rows, lo, hi)
    if cfg.sweep_output:
        write_sweep(frame, cfg.sweep_output)
    logger.info("Swept %s over %d values", name, len(values))
    return frame


def _run(cfg):
    loaded = load_program(cfg)
    env = dict(cfg.params)
    pr = analyze_job(loaded, cfg)
    result = PipelineResult(analysis=pr, loaded=loaded)
    if cfg.output:
        write_program(pr, cfg.output)
    if cfg.trace:
        write_trace(pr.trace, cfg.trace)

    # the oracle validates the input distribution before anything is tabulated
    if cfg.compare:
        result.oracle = run_oracle(loaded, cfg, env)

    if cfg.z_range is not None and cfg.sweep is None:
        lo, hi = cfg.z_range
        result.distribution = tabulate(pr.program, pr.name, env, lo, hi, kind=pr.kind,
                                       workers=cfg.workers, step_budget=cfg.step_budget)
        if cfg.csv:
            write_distribution_csv(result.distribution, cfg.csv)
        if cfg.plot:
            emit_plot_data(result.distribution, cfg.plot)

    if cfg.sweep is not None:
        result.sweep = run_sweep(pr, cfg)

    if cfg.compare:
        lo, hi = cfg.z_range
        result.report = compare(result.distribution, result.oracle, lo, hi, cfg.expect)
        if cfg.report:
            write_report(result.report, cfg.report)

    if result.report is not None and not result.report.passed:
        result.exit_code = EXIT_VIOLATION
    elif not pr.closed:
        result.exit_code = EXIT_INCOMPLETE
    return result


def run_pipeline(cfg):
    """Run one job; errors are logged with their phase and turned into the exit code."""
    try:
        return _run(cfg)
    except AnalysisError as exc:
        logger.error("%s", exc)
        return PipelineResult(exc.exit_code, error=exc)
    except (OSError, ValueError) as exc:
        logger.error("%s", exc)
        return PipelineResult(EXIT_USAGE, error=exc)
    except Exception as exc:
        logger.error("Unexpected error: %s", exc, exc_info=True)
        return PipelineResult(EXIT_USAGE, error=exc)
