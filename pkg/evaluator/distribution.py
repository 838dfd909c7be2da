"""Tabulated output distributions, their CSV form and derived quantities."""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

from core_ir.errors import EmptySupport
from evaluator.evaluate import Evaluator, DEFAULT_STEP_BUDGET

logger = logging.getLogger(__name__)

EXACT = "Exact"
OVER_APPROX = "OverApprox"
KINDS = (EXACT, OVER_APPROX)

CSV_COLUMNS = ["z", "probability_num", "probability_den", "probability_float"]
FLOAT_FORMAT = "%.12g"


@dataclass
class Distribution:
    """Finite map from output value to probability.

    For kind Exact the values are the probabilities themselves; for
    OverApprox each value is an upper bound of the true probability.
    An analyzed tabulation is built with `checked=False`: its values are
    claims to be compared with the oracle, not known probabilities.
    """
    support: dict = field(default_factory=dict)
    kind: str = EXACT
    nonterminating_mass: Fraction = Fraction(0)
    missing: Fraction = Fraction(0)
    checked: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        self.support = {int(z): Fraction(p) for z, p in sorted(self.support.items())}
        if not self.checked:
            if self.kind == EXACT and self.mass > 1:
                logger.warning("exact distribution has mass %s > 1", self.mass)
            return
        for z, p in self.support.items():
            if p < 0 or p > 1:
                raise ValueError(f"probability {p} at z={z} is outside [0, 1]")
        if self.kind == EXACT and self.mass > 1:
            raise ValueError(f"exact distribution has mass {self.mass} > 1")

    @property
    def mass(self):
        return sum(self.support.values(), Fraction(0))

    def probability(self, z):
        return self.support.get(z, Fraction(0))

    def restrict(self, zlo, zhi):
        """Support cut to [zlo, zhi]; the cut-off mass is kept in `missing`."""
        inside = {z: p for z, p in self.support.items() if zlo <= z <= zhi}
        outside = self.mass - sum(inside.values(), Fraction(0))
        return Distribution(inside, self.kind, self.nonterminating_mass, self.missing + outside,
                            self.checked)

    def nonzero(self):
        return {z: p for z, p in self.support.items() if p != 0}

    def to_frame(self):
        rows = [{
            "z": z,
            "probability_num": p.numerator,
            "probability_den": p.denominator,
            "probability_float": float(p),
        } for z, p in self.support.items()]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)


# =================================================================
#                 Tabulation
# =================================================================

def tabulate(program, pname, env, zlo, zhi, kind=EXACT, workers=1,
             step_budget=DEFAULT_STEP_BUDGET):
    """Evaluate the one-argument probability function at every z in [zlo, zhi]."""
    if zlo > zhi:
        raise ValueError(f"empty range [{zlo}, {zhi}]")
    evaluator = Evaluator(program, env, step_budget)

    def point(z):
        evaluator.fresh_budget()
        value = evaluator.call_prob(pname, [z])
        if kind == OVER_APPROX and value > 1:
            value = Fraction(1)
        return z, value

    zs = range(zlo, zhi + 1)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            values = dict(executor.map(point, zs))
    else:
        values = dict(point(z) for z in zs)
    logger.info("Tabulated %s on [%d, %d] (%s)", pname, zlo, zhi, kind)
    return Distribution(values, kind, checked=False)


# =================================================================
#                 Expected value
# =================================================================

def expected_value_bounds(d):
    """Interval of expected values consistent with the distribution.

    Exact distributions give a point (conditioned on termination when the
    mass is below 1). For over-approximations every P(z) is an upper
    bound and the true mass is 1: the lower end fills that mass from the
    smallest z upwards, the upper end from the largest z downwards.
    """
    support = d.nonzero()
    if not support:
        raise EmptySupport("distribution has no point with positive probability")
    if d.kind == EXACT:
        mass = sum(support.values(), Fraction(0))
        mean = sum((z * p for z, p in support.items()), Fraction(0)) / mass
        return mean, mean
    return _fill(sorted(support.items())), _fill(sorted(support.items(), reverse=True))


def _fill(points):
    remaining = Fraction(1)
    total = Fraction(0)
    used = Fraction(0)
    for z, p in points:
        take = min(p, remaining)
        total += z * take
        used += take
        remaining -= take
        if remaining == 0:
            break
    if remaining > 0:
        logger.warning("Over-approximation has mass %s < 1; bounds are conditioned on it", used)
        return total / used
    return total


# =================================================================
#                 Files
# =================================================================

def write_distribution_csv(d, path):
    """CSV with exact and decimal probabilities plus a `# mass=.. kind=..` trailer."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        d.to_frame().to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        f.write(f"# mass={d.mass} kind={d.kind}\n")
    logger.info("Wrote distribution to %s", path)


def read_distribution_csv(path):
    kind = EXACT
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if line.startswith("#") and "kind=" in line:
                kind = line.split("kind=", 1)[1].split()[0]
    frame = pd.read_csv(path, comment="#")
    support = {
        int(row.z): Fraction(int(row.probability_num), int(row.probability_den))
        for row in frame.itertuples(index=False)
    }
    return Distribution(support, kind)


def emit_plot_data(d, path):
    """Two-column `z value` text file for plotting tools."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame = pd.DataFrame(
        {"z": list(d.support), "value": [float(p) for p in d.support.values()]},
        columns=["z", "value"],
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("# z value\n")
        if frame.empty:
            return
        frame.to_csv(f, sep=" ", header=False, index=False,
                     float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote plot data to %s", path)
