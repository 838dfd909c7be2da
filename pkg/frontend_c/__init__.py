"""Mini-C frontend: parsing, instrumentation, slicing and translation."""

from frontend_c.parsing import (  # noqa: F401
    CProgram, Annotation, LoopHeader, parse_c, read_annotation, check_subset, STEP,
)
from frontend_c.instrument import CostModel, instrument, instrumented_functions  # noqa: F401
from frontend_c.translate import CTranslation, translate_c, slice_translate  # noqa: F401
from frontend_c.interpret import interpret_c, CInterpreter  # noqa: F401
