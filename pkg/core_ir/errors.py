"""Exception hierarchy shared by every phase of the analyzer.

Each error knows the phase it was raised in and the process exit code the
command line reports for it.
"""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INCOMPLETE = 3
EXIT_VIOLATION = 4
EXIT_BUDGET = 5


class AnalysisError(Exception):
    phase = "analysis"
    exit_code = EXIT_INCOMPLETE

    def __init__(self, message, phase=None):
        super().__init__(message)
        if phase is not None:
            self.phase = phase

    def __str__(self):
        return f"[{self.phase}] {super().__str__()}"


# --- parsing and well-formedness ---

class ParseError(AnalysisError):
    phase = "parse"
    exit_code = EXIT_PARSE

    def __init__(self, message, line=None, column=None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line
        self.column = column


class WellFormednessError(AnalysisError):
    phase = "well-formedness"
    exit_code = EXIT_PARSE

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        summary = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"program is not well-formed: {summary}")


# --- C frontend ---

class CSyntaxError(AnalysisError):
    phase = "frontend"
    exit_code = EXIT_PARSE


class UnsupportedConstruct(AnalysisError):
    phase = "frontend"
    exit_code = EXIT_PARSE


class SliceFailure(AnalysisError):
    phase = "frontend"
    exit_code = EXIT_PARSE


class InstrumentationError(AnalysisError):
    phase = "frontend"
    exit_code = EXIT_PARSE


# --- transformation ---

class ArityMismatch(AnalysisError):
    phase = "create"


class UnknownRule(AnalysisError):
    phase = "transform"


class UnsupportedRecursion(AnalysisError):
    phase = "separate"


class UnsupportedSeries(AnalysisError):
    phase = "simplify"


class FixpointBudgetExceeded(AnalysisError):
    phase = "transform"
    exit_code = EXIT_BUDGET


# --- symbolic kernel ---

class SymbolicError(AnalysisError):
    phase = "symbolic"


class NotPolynomial(SymbolicError):
    pass


class NotLinear(SymbolicError):
    pass


class ZeroCoefficient(SymbolicError):
    pass


class DegreeTooHigh(SymbolicError):
    pass


# --- evaluation ---

class EvaluationError(AnalysisError):
    phase = "evaluate"


class NonTermination(EvaluationError):
    exit_code = EXIT_BUDGET


class BudgetExceeded(EvaluationError):
    exit_code = EXIT_BUDGET


class DivByZero(EvaluationError):
    pass


class UnboundedSummation(EvaluationError):
    pass


class EmptySupport(EvaluationError):
    pass


# --- oracle ---

class MassNotOne(AnalysisError):
    phase = "oracle"

    def __init__(self, mass):
        super().__init__(f"input distribution has total mass {mass}, expected 1")
        self.mass = mass


class EnumerationTooLarge(AnalysisError):
    phase = "oracle"
    exit_code = EXIT_BUDGET

    def __init__(self, points, limit):
        super().__init__(f"{points} input points exceed the enumeration limit {limit} (use --force)")
        self.points = points
        self.limit = limit
