"""Brute-force enumeration oracle and distribution comparison."""

from oracle.enumeration import (  # noqa: F401
    InputSpec, derive_input_spec, validate_input_dist, enumerate_distribution,
    DEFAULT_ENUMERATION_LIMIT,
)
from oracle.compare import Violation, ComparisonReport, compare  # noqa: F401
