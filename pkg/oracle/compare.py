"""Pointwise comparison of an analyzed distribution against the oracle."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction

from evaluator.distribution import EXACT, OVER_APPROX

logger = logging.getLogger(__name__)

BANNER_WIDTH = 60


@dataclass(frozen=True)
class Violation:
    z: int
    analyzed: Fraction
    oracle: Fraction
    reason: str

    def __str__(self):
        return f"z={self.z}: analyzed {self.analyzed} vs oracle {self.oracle} ({self.reason})"


@dataclass
class ComparisonReport:
    kind: str
    zlo: int
    zhi: int
    violations: list = field(default_factory=list)
    max_gap: Fraction = Fraction(0)
    uncovered: Fraction = Fraction(0)
    nonterminating: Fraction = Fraction(0)
    discrepancies: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.violations

    def render(self):
        lines = [
            "=" * BANNER_WIDTH,
            "Comparison against the enumeration oracle".center(BANNER_WIDTH),
            "=" * BANNER_WIDTH,
            f"  Kind:            {self.kind}",
            f"  Range:           {self.zlo}..{self.zhi}",
            f"  Max gap:         {self.max_gap}",
        ]
        if self.uncovered:
            lines.append(f"  Uncovered mass:  {self.uncovered} (oracle mass outside the range)")
        if self.nonterminating:
            lines.append(f"  Non-terminating: {self.nonterminating}")
        lines.append("-" * BANNER_WIDTH)
        if self.passed:
            lines.append("✅ Pass: no violations.")
        else:
            lines.append(f"❌ {len(self.violations)} violation(s):")
            lines.extend(f"   - {v}" for v in self.violations)
        if self.discrepancies:
            lines.append("-" * BANNER_WIDTH)
            lines.append("Reference values that disagree with the oracle:")
            lines.extend(f"   - {d}" for d in self.discrepancies)
        lines.append("=" * BANNER_WIDTH)
        return "\n".join(lines)


def compare(analyzed, oracle, zlo=None, zhi=None, expected=None):
    """Check analyzed against oracle on [zlo, zhi].

    Exact results must agree pointwise. OverApprox results must dominate
    the oracle and stay at or below 1. `expected` maps z to reference values
    that are checked against the oracle only; mismatches are listed as
    discrepancies and do not fail the comparison.
    """
    points = set(analyzed.support) | set(oracle.support)
    if zlo is None:
        zlo = min(points, default=0)
    if zhi is None:
        zhi = max(points, default=0)
    report = ComparisonReport(analyzed.kind, zlo, zhi, nonterminating=oracle.nonterminating_mass)

    for z in range(zlo, zhi + 1):
        a, o = analyzed.probability(z), oracle.probability(z)
        gap = abs(a - o)
        if gap > report.max_gap:
            report.max_gap = gap
        if analyzed.kind == EXACT and a != o:
            report.violations.append(Violation(z, a, o, "not equal"))
        elif analyzed.kind == OVER_APPROX:
            if a < o:
                report.violations.append(Violation(z, a, o, "below oracle"))
            elif a > 1:
                report.violations.append(Violation(z, a, o, "above 1"))

    report.uncovered = sum((p for z, p in oracle.support.items() if not zlo <= z <= zhi), Fraction(0))
    for z, value in sorted((expected or {}).items()):
        actual = oracle.probability(z)
        if Fraction(value) != actual:
            report.discrepancies.append(f"z={z}: reference {value}, oracle {actual}")

    if report.passed:
        logger.info("Comparison passed on %d..%d (max gap %s)", zlo, zhi, report.max_gap)
    else:
        logger.warning("Comparison found %d violation(s)", len(report.violations))
    return report
