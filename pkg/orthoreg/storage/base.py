"""
Abstract base class for collapse report exporters.

Defines the interface every on-disk report format implements.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from orthoreg.spectra.models import CollapseReport

PathLike = Union[str, Path]


class ReportExporter(ABC):
    """Writes a collapse report in one file format."""

    #: format name used on the command line
    format: str = ""
    suffix: str = ""

    @abstractmethod
    def render(self, report: CollapseReport) -> str:
        """
        Serialize a report.

        Args:
            report: Report to serialize

        Returns:
            File contents as text
        """

    def write(self, report: CollapseReport, path: PathLike) -> Path:
        """
        Write ``report`` to ``path``.

        Raises:
            OSError: The file cannot be written; the message names the path
        """
        path = Path(path)
        text = self.render(report)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise OSError(f"Failed to write {self.format} report to {path}: {e}") from e
        return path
