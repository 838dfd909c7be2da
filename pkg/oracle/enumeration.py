"""Brute-force output distributions by enumerating every input point."""

import logging
import sys
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from tqdm import tqdm

from core_ir.errors import MassNotOne, EnumerationTooLarge, UnboundedSummation, NonTermination
from evaluator.distribution import Distribution, EXACT
from evaluator.evaluate import Evaluator, DEFAULT_STEP_BUDGET

logger = logging.getLogger(__name__)

DEFAULT_ENUMERATION_LIMIT = 10 ** 8


@dataclass
class InputSpec:
    """Joint input distribution `pname` over `variables`, with a finite range per variable."""
    pname: str
    variables: tuple
    ranges: dict = field(default_factory=dict)

    @property
    def points(self):
        total = 1
        for var in self.variables:
            lo, hi = self.ranges[var]
            total *= max(0, hi - lo + 1)
        return total

    def grid(self):
        return product(*(range(self.ranges[v][0], self.ranges[v][1] + 1) for v in self.variables))


def derive_input_spec(program, pname, env=None, overrides=None):
    """Ranges of every input variable, read from the c-constraints of the joint distribution."""
    pdef = program.prob(pname)
    evaluator = Evaluator(program, env)
    box = evaluator.ranges.box(pdef.body, tuple(pdef.params), dict(evaluator.env))
    ranges = {}
    for var in pdef.params:
        if overrides and var in overrides:
            ranges[var] = tuple(overrides[var])
            continue
        lo, hi = box[var]
        if lo is None or hi is None:
            raise UnboundedSummation(
                f"no finite range for input variable '{var}' of {pname}; pass --range {var}=lo..hi",
                phase="oracle")
        ranges[var] = (lo, hi)
    logger.info("Input ranges for %s: %s", pname,
                ", ".join(f"{v}={lo}..{hi}" for v, (lo, hi) in ranges.items()))
    return InputSpec(pname, tuple(pdef.params), ranges)


def _check_size(spec, limit, force):
    if spec.points > limit and not force:
        raise EnumerationTooLarge(spec.points, limit)


def validate_input_dist(program, spec, env=None, limit=DEFAULT_ENUMERATION_LIMIT, force=False):
    """Accept the input distribution when its total mass over the ranges is exactly 1."""
    _check_size(spec, limit, force)
    evaluator = Evaluator(program, env)
    mass = Fraction(0)
    for point in spec.grid():
        mass += evaluator.call_prob(spec.pname, list(point))
    if mass != 1:
        raise MassNotOne(mass)
    logger.info("Input distribution %s has mass 1 over %d points", spec.pname, spec.points)
    return mass


def _enumerate_chunk(evaluator, fname, spec, points):
    partial = defaultdict(Fraction)
    stuck = Fraction(0)
    visited = 0
    for point in points:
        visited += 1
        weight = evaluator.call_prob(spec.pname, list(point))
        if weight == 0:
            continue
        evaluator.fresh_budget()
        try:
            z = evaluator.call(fname, list(point))
        except NonTermination:
            stuck += weight
            continue
        partial[z] += weight
    return partial, stuck, visited


def enumerate_distribution(program, fname, spec, env=None, limit=DEFAULT_ENUMERATION_LIMIT,
                           force=False, workers=1, step_budget=DEFAULT_STEP_BUDGET,
                           progress=True):
    """Exact output distribution of fname under the input distribution of `spec`.

    Inputs whose evaluation exhausts the step budget are counted in
    `nonterminating_mass` instead of the support.
    """
    _check_size(spec, limit, force)
    evaluator = Evaluator(program, env, step_budget)
    support = defaultdict(Fraction)
    stuck = Fraction(0)
    disable = not progress or not sys.stderr.isatty()

    with tqdm(total=spec.points, desc=f"Enumerating {fname}", unit="pt", disable=disable) as bar:
        if workers and workers > 1 and spec.variables:
            first = spec.variables[0]
            lo, hi = spec.ranges[first]
            rest = [range(spec.ranges[v][0], spec.ranges[v][1] + 1) for v in spec.variables[1:]]
            with ThreadPoolExecutor(max_workers=workers) as executor:
                futures = [
                    executor.submit(_enumerate_chunk, evaluator, fname, spec,
                                    [(value,) + tail for tail in product(*rest)])
                    for value in range(lo, hi + 1)
                ]
                for future in as_completed(futures):
                    partial, chunk_stuck, visited = future.result()
                    for z, weight in partial.items():
                        support[z] += weight
                    stuck += chunk_stuck
                    bar.update(visited)
        else:
            partial, stuck, visited = _enumerate_chunk(evaluator, fname, spec, spec.grid())
            support.update(partial)
            bar.update(visited)

    if stuck:
        logger.warning("Inputs with mass %s did not terminate within %d steps", stuck, step_budget)
    logger.info("Oracle for %s: %d output values, mass %s", fname, len(support),
                sum(support.values(), Fraction(0)))
    return Distribution(dict(support), EXACT, nonterminating_mass=stuck)
