"""Job configuration: command-line flags merged over settings.json."""

import os
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from frontend_c.instrument import CostModel
from shared_utils import utils

C_SOURCE = "c-source"
INTERMEDIATE = "intermediate"

OUTPUT_NAMES = ("out", "z")

RANGE_RE = re.compile(r"^\s*([A-Za-z_]\w*)\s*=\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*$")
SWEEP_RE = re.compile(
    r"^\s*([A-Za-z_]\w*)\s*=\s*([-\d/]+)\s*\.\.\s*([-\d/]+)\s*(?:(?::|\s+step\s+)\s*([-\d/]+))?\s*$")


def parse_number(text):
    """Integer or rational literal ("3", "-2", "3/4") as int or Fraction."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"'{text}' is not an integer or a fraction")
    return int(value) if value.denominator == 1 else value


def parse_binding(text):
    """name=value, e.g. p=3/4."""
    name, sep, value = text.partition("=")
    if not sep or not name.strip().isidentifier():
        raise ValueError(f"expected name=value, got '{text}'")
    return name.strip(), parse_number(value)


def parse_range(text):
    """name=lo..hi, e.g. out=0..100."""
    match = RANGE_RE.match(text)
    if match is None:
        raise ValueError(f"expected name=lo..hi, got '{text}'")
    lo, hi = int(match.group(2)), int(match.group(3))
    if lo > hi:
        raise ValueError(f"empty range '{text}'")
    return match.group(1), lo, hi


def parse_expectation(text):
    """z=value reference probability, e.g. 3=3/20."""
    z, sep, value = text.partition("=")
    if not sep:
        raise ValueError(f"expected z=probability, got '{text}'")
    return int(z), Fraction(parse_number(value))


def parse_sweep(text):
    """name=lo..hi:step (or `step` spelled out); the step defaults to 1."""
    match = SWEEP_RE.match(text)
    if match is None:
        raise ValueError(f"expected name=lo..hi:step, got '{text}'")
    lo, hi = Fraction(parse_number(match.group(2))), Fraction(parse_number(match.group(3)))
    step = Fraction(parse_number(match.group(4))) if match.group(4) else Fraction(1)
    if step <= 0 or lo > hi:
        raise ValueError(f"sweep '{text}' has no values")
    values = []
    value = lo
    while value <= hi:
        values.append(int(value) if value.denominator == 1 else value)
        value += step
    return match.group(1), tuple(values)


def input_mode(path):
    return C_SOURCE if os.path.splitext(path)[1].lower() == ".c" else INTERMEDIATE


@dataclass
class JobConfig:
    input_path: str
    mode: str = INTERMEDIATE
    target: Optional[str] = None
    input_name: Optional[str] = None
    params: dict = field(default_factory=dict)
    z_range: Optional[tuple] = None
    input_ranges: dict = field(default_factory=dict)
    cost: CostModel = field(default_factory=CostModel)
    step_budget: int = utils.DEFAULT_SETTINGS["step_budget"]
    fixpoint_budget: int = utils.DEFAULT_SETTINGS["fixpoint_budget"]
    enumeration_limit: int = utils.DEFAULT_SETTINGS["enumeration_limit"]
    workers: int = utils.DEFAULT_SETTINGS["sweep_workers"]
    seed: Optional[int] = None
    output: Optional[str] = None
    csv: Optional[str] = None
    plot: Optional[str] = None
    trace: Optional[str] = None
    report: Optional[str] = None
    sweep: Optional[tuple] = None
    sweep_output: Optional[str] = None
    expect: dict = field(default_factory=dict)
    compare: bool = False
    force: bool = False

    def __post_init__(self):
        if self.compare and self.z_range is None:
            raise ValueError("--compare needs the output range, e.g. --range out=0..100")
        if self.sweep is not None and self.z_range is None:
            raise ValueError("--sweep needs the output range, e.g. --range out=0..1")
        if self.sweep is not None and self.compare:
            raise ValueError("--compare and --sweep cannot be combined; compare one --param value at a time")
        if self.sweep is not None and self.sweep[0] in self.params:
            raise ValueError(f"'{self.sweep[0]}' is both swept and fixed by --param")

    @classmethod
    def from_args(cls, args, settings=None):
        """Build a JobConfig from parsed arguments; CLI flags win over settings."""
        settings = settings if settings is not None else utils.load_settings()

        def pick(flag, key):
            value = getattr(args, flag, None)
            return settings.get(key, utils.DEFAULT_SETTINGS[key]) if value is None else value

        params = dict(parse_binding(p) for p in getattr(args, "param", None) or ())
        z_range, input_ranges = None, {}
        for text in getattr(args, "range", None) or ():
            name, lo, hi = parse_range(text)
            if name in OUTPUT_NAMES:
                z_range = (lo, hi)
            else:
                input_ranges[name] = (lo, hi)
        sweep = getattr(args, "sweep", None)
        if isinstance(sweep, (list, tuple)):
            sweep = " ".join(sweep)
        return cls(
            input_path=args.input,
            mode=input_mode(args.input),
            target=getattr(args, "target", None),
            input_name=getattr(args, "input_dist", None),
            params=params,
            z_range=z_range,
            input_ranges=input_ranges,
            cost=CostModel.parse(getattr(args, "cost", None)),
            step_budget=pick("step_budget", "step_budget"),
            fixpoint_budget=pick("fixpoint_budget", "fixpoint_budget"),
            enumeration_limit=pick("enumeration_limit", "enumeration_limit"),
            workers=pick("workers", "sweep_workers"),
            seed=getattr(args, "seed", None),
            output=getattr(args, "output", None),
            csv=getattr(args, "csv", None),
            plot=getattr(args, "plot", None),
            trace=getattr(args, "trace", None),
            report=getattr(args, "report", None),
            sweep=parse_sweep(sweep) if sweep else None,
            sweep_output=getattr(args, "sweep_output", None),
            expect=dict(parse_expectation(e) for e in getattr(args, "expect", None) or ()),
            compare=bool(getattr(args, "compare", False)),
            force=bool(getattr(args, "force", False)),
        )
