"""Ordered log of rule applications."""

from dataclasses import dataclass, field

from core_ir.syntax import format_term
from core_ir.traversal import replace_all

EXACT_TAG = "exact"
APPROX_TAG = "approx"


@dataclass(frozen=True)
class TraceEntry:
    rule: str
    before: object
    after: object
    exact: bool = True
    phase: str = ""

    def line(self):
        tag = EXACT_TAG if self.exact else APPROX_TAG
        return f"{self.rule} | {format_term(self.before)} | {format_term(self.after)} | {tag}"


@dataclass
class RuleTrace:
    """Every rewrite of a probability body, in application order.

    A rewrite replaces every occurrence of `before` by `after`, so replaying
    the entries on the initial body reproduces the final one.
    """
    entries: list = field(default_factory=list)

    def record(self, rule, before, after, exact=True, phase=""):
        self.entries.append(TraceEntry(rule, before, after, exact, phase))

    @property
    def exact(self):
        return all(entry.exact for entry in self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def replay(self, initial, phase=None):
        term = initial
        for entry in self.entries:
            if phase is None or entry.phase == phase:
                term = replace_all(term, entry.before, entry.after)
        return term

    def counts(self):
        """Number of applications per rule name."""
        tally = {}
        for entry in self.entries:
            tally[entry.rule] = tally.get(entry.rule, 0) + 1
        return tally

    def lines(self):
        return [entry.line() for entry in self.entries]
