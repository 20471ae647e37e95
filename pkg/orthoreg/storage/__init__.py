"""
On-disk formats: MATX matrices, checkpoint bundles and collapse reports.
"""

from orthoreg.tensor import conv_reshape, conv_unreshape

from .base import ReportExporter
from .bundle import ManifestError, load_bundle, save_bundle
from .factory import export_report, get_report_exporter
from .matx import (
    BadDtypeError,
    BadMagicError,
    BadVersionError,
    CrcMismatchError,
    MatxError,
    TruncatedFileError,
    decode_matx,
    encode_matx,
    read_matx,
    write_matx,
)
from .reports import CsvReportExporter, JsonReportExporter, export_matrix_csv, import_report_json

__all__ = [
    "BadDtypeError",
    "BadMagicError",
    "BadVersionError",
    "CrcMismatchError",
    "CsvReportExporter",
    "JsonReportExporter",
    "ManifestError",
    "MatxError",
    "ReportExporter",
    "TruncatedFileError",
    "conv_reshape",
    "conv_unreshape",
    "decode_matx",
    "encode_matx",
    "export_matrix_csv",
    "export_report",
    "get_report_exporter",
    "import_report_json",
    "load_bundle",
    "read_matx",
    "write_matx",
]
