"""
CSV and JSON renditions of collapse reports, plus plain matrix CSV.
"""

import csv
import io
from pathlib import Path
from typing import Union

import numpy as np
from cogents_core.utils import get_logger
from pydantic import ValidationError

from orthoreg.constants import REPORT_CSV_COLUMNS
from orthoreg.spectra.models import CollapseReport
from orthoreg.tensor import Matrix

from .base import ReportExporter

logger = get_logger(__name__)

PathLike = Union[str, Path]


class CsvReportExporter(ReportExporter):
    """One row per eigenvalue: stage,index,raw,normalized,nonpositive_flag."""

    format = "csv"
    suffix = ".csv"

    def render(self, report: CollapseReport) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(REPORT_CSV_COLUMNS)
        for summary in report.stages:
            spectrum = summary.spectrum
            for index, (raw, normalized) in enumerate(zip(spectrum.raw, spectrum.normalized)):
                writer.writerow([spectrum.source, index, repr(raw), repr(normalized), int(raw <= 0.0)])
        return buffer.getvalue()


class JsonReportExporter(ReportExporter):
    """The full report model, summaries included."""

    format = "json"
    suffix = ".json"

    def render(self, report: CollapseReport) -> str:
        return report.model_dump_json(indent=2) + "\n"


def import_report_json(path: PathLike) -> CollapseReport:
    """
    Load a report written by JsonReportExporter.

    Raises:
        OSError: The file cannot be read
        ValueError: The file is not a valid report
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"Failed to read report {path}: {e}") from e
    try:
        return CollapseReport.model_validate_json(text)
    except ValidationError as e:
        raise ValueError(f"{path}: not a collapse report: {e}") from e


def export_matrix_csv(m: Matrix, path: PathLike) -> Path:
    """Write a numeric matrix as headerless CSV with full float precision."""
    path = Path(path)
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            for row in m:
                writer.writerow([repr(float(v)) for v in row])
    except OSError as e:
        raise OSError(f"Failed to write matrix CSV to {path}: {e}") from e
    logger.debug(f"Wrote {m.shape[0]}x{m.shape[1]} matrix to {path}")
    return path
