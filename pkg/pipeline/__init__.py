"""Job configuration, the end-to-end pipeline and its artifact writers."""

from pipeline.config import (  # noqa: F401
    JobConfig, C_SOURCE, INTERMEDIATE, parse_number, parse_binding, parse_range,
    parse_expectation, parse_sweep, input_mode,
)
from pipeline.artifacts import (  # noqa: F401
    write_text, write_program, write_trace, write_report, sweep_frame, write_sweep,
)
from pipeline.run import (  # noqa: F401
    LoadedProgram, PipelineResult, load_program, load_c, analyze_job, run_oracle,
    run_sweep, run_pipeline, default_function, default_distribution,
)
