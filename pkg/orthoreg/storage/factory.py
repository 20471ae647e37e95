"""
Report exporter selection by format name.
"""

from pathlib import Path
from typing import Dict, Type, Union

from cogents_core.utils import get_logger

from orthoreg.spectra.models import CollapseReport

from .base import ReportExporter
from .reports import CsvReportExporter, JsonReportExporter

logger = get_logger(__name__)

_EXPORTERS: Dict[str, Type[ReportExporter]] = {
    CsvReportExporter.format: CsvReportExporter,
    JsonReportExporter.format: JsonReportExporter,
}


def get_report_exporter(fmt: str) -> ReportExporter:
    """
    Get the exporter for ``fmt``.

    Raises:
        ValueError: Unknown format
    """
    try:
        return _EXPORTERS[fmt.lower()]()
    except KeyError:
        raise ValueError(f"Unknown report format {fmt!r}; expected one of {sorted(_EXPORTERS)}") from None


def export_report(report: CollapseReport, fmt: str, path: Union[str, Path]) -> Path:
    """Write ``report`` to ``path`` in ``fmt`` ("csv" or "json")."""
    exporter = get_report_exporter(fmt)
    written = exporter.write(report, path)
    logger.info(f"Exported {len(report.stages)}-stage report as {exporter.format} to {written}")
    return written
