"""
MATX: a minimal binary container for one float64 matrix.

Layout (little-endian):
    magic    4 bytes  b"MATX"
    version  u16      1
    dtype    u8       1 (real64)
    rows     u64
    cols     u64
    payload  rows*cols float64, row-major
    crc      u32      CRC-32 of the payload
"""

import struct
import zlib
from pathlib import Path
from typing import Union

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.constants import MATX_DTYPE_REAL64, MATX_MAGIC, MATX_VERSION
from orthoreg.tensor import DimensionError, Matrix

logger = get_logger(__name__)

PathLike = Union[str, Path]

_HEADER = struct.Struct("<4sHBQQ")
_CRC = struct.Struct("<I")


class MatxError(ValueError):
    """Base class of MATX read failures."""

    code = 1

    def __init__(self, message: str, path: PathLike = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = str(path)


class BadMagicError(MatxError):
    code = 10


class BadVersionError(MatxError):
    code = 11


class BadDtypeError(MatxError):
    code = 12


class CrcMismatchError(MatxError):
    code = 13


class TruncatedFileError(MatxError):
    code = 14


def encode_matx(m: Matrix) -> bytes:
    """Serialize a 2-D matrix to MATX bytes."""
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"MATX stores 2-D matrices, got shape {m.shape}")
    rows, cols = m.shape
    payload = np.ascontiguousarray(m, dtype="<f8").tobytes(order="C")
    header = _HEADER.pack(MATX_MAGIC, MATX_VERSION, MATX_DTYPE_REAL64, rows, cols)
    return header + payload + _CRC.pack(zlib.crc32(payload) & 0xFFFFFFFF)


def decode_matx(data: bytes, path: PathLike = "") -> Matrix:
    """Parse MATX bytes, validating magic, version, dtype, length and CRC."""
    if len(data) < 4:
        raise TruncatedFileError("file shorter than the magic number", path)
    if data[:4] != MATX_MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}", path)
    if len(data) < _HEADER.size:
        raise TruncatedFileError("header is truncated", path)

    _, version, dtype, rows, cols = _HEADER.unpack_from(data)
    if version != MATX_VERSION:
        raise BadVersionError(f"unsupported version {version}", path)
    if dtype != MATX_DTYPE_REAL64:
        raise BadDtypeError(f"unsupported dtype code {dtype}", path)

    size = rows * cols * 8
    expected = _HEADER.size + size + _CRC.size
    if len(data) < expected:
        raise TruncatedFileError(f"expected {expected} bytes, got {len(data)}", path)
    if len(data) > expected:
        raise MatxError(f"{len(data) - expected} trailing bytes after checksum", path)

    payload = data[_HEADER.size : _HEADER.size + size]
    (crc,) = _CRC.unpack_from(data, _HEADER.size + size)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise CrcMismatchError("payload checksum mismatch", path)
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)


def write_matx(m: Matrix, path: PathLike) -> None:
    """Write one matrix to ``path``."""
    path = Path(path)
    data = encode_matx(m)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise OSError(f"Failed to write MATX file {path}: {e}") from e
    logger.debug(f"Wrote {path} ({len(data)} bytes)")


def read_matx(path: PathLike) -> Matrix:
    """Read one matrix from ``path``."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise OSError(f"Failed to read MATX file {path}: {e}") from e
    return decode_matx(data, path)
