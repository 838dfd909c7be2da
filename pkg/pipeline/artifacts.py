"""Writers for the files a job produces."""

import logging
import os

import pandas as pd

from core_ir.syntax import format_program
from evaluator.distribution import FLOAT_FORMAT

logger = logging.getLogger(__name__)


def write_text(path, text):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text if text.endswith("\n") else text + "\n")
    logger.info("Wrote %s", path)


def write_program(result, path):
    """The analyzed program including the output distribution, in text syntax."""
    header = f"// {result.name}: {result.form}, {result.kind}\n"
    write_text(path, header + format_program(result.program))


def write_trace(trace, path):
    write_text(path, "\n".join(trace.lines()))


def write_report(report, path):
    write_text(path, report.render())


def sweep_frame(name, rows, zlo, zhi):
    """One row per parameter value; exact probabilities as fractions, plus floats."""
    records = []
    for value, dist in rows:
        record = {name: str(value), f"{name}_float": float(value)}
        for z in range(zlo, zhi + 1):
            p = dist.probability(z)
            record[f"P(out={z})"] = str(p)
            record[f"P(out={z})_float"] = float(p)
        records.append(record)
    columns = [name, f"{name}_float"]
    for z in range(zlo, zhi + 1):
        columns += [f"P(out={z})", f"P(out={z})_float"]
    return pd.DataFrame(records, columns=columns)


def write_sweep(frame, path):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("Wrote sweep table to %s", path)
