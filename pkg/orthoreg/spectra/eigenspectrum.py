"""
Normalized eigenvalues, effective rank and filter correlation matrices.
"""

import math
from typing import Optional

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.constants import DEGENERATE_EIGENVALUE
from orthoreg.tensor import InsufficientSamplesError, Matrix, covariance, sym_eig

from .models import Eigenspectrum

logger = get_logger(__name__)


class NoPositiveEigenvalueError(ValueError):
    """Raised when a spectrum carries no positive mass."""


def normalized_eigenvalues(t: Matrix, source: str = "", divisor: str = "n-1") -> Eigenspectrum:
    """
    Covariance eigenvalues of ``t`` divided by the largest one.

    Rows of ``t`` are samples and columns are features. A spectrum whose
    largest eigenvalue is at most 1e-15 is flagged degenerate and reported as
    all zeros.

    Raises:
        InsufficientSamplesError: ``t`` has fewer than 2 rows
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] < 2:
        raise InsufficientSamplesError(f"{source or 'matrix'}: need at least 2 rows, got shape {t.shape}")

    raw = sym_eig(covariance(t, divisor=divisor)).eigenvalues
    dim = int(raw.size)
    nonpositive = int(np.sum(raw <= 0.0))
    top = float(raw[0]) if dim else 0.0

    if top <= DEGENERATE_EIGENVALUE:
        logger.warning(f"{source or 'matrix'}: degenerate spectrum (largest eigenvalue {top:.3e})")
        return Eigenspectrum(
            source=source,
            raw=raw.tolist(),
            normalized=[0.0] * dim,
            nonpositive_count=nonpositive,
            dim=dim,
            degenerate=True,
        )

    return Eigenspectrum(
        source=source,
        raw=raw.tolist(),
        normalized=(raw / top).tolist(),
        nonpositive_count=nonpositive,
        dim=dim,
    )


def effective_rank(spec: Eigenspectrum) -> float:
    """
    exp of the Shannon entropy of the positive eigenvalue distribution.

    Raises:
        NoPositiveEigenvalueError: No eigenvalue is positive
    """
    raw = np.maximum(np.asarray(spec.raw, dtype=np.float64), 0.0)
    mass = float(raw.sum())
    if mass <= 0.0:
        raise NoPositiveEigenvalueError(f"{spec.source or 'spectrum'}: no positive eigenvalue")
    p = raw[raw > 0.0] / mass
    rank = math.exp(float(-np.sum(p * np.log(p))))
    return min(max(rank, 1.0), float(spec.dim))


def decay_index(spec: Eigenspectrum, threshold: float) -> Optional[int]:
    """First index whose normalized eigenvalue drops below ``threshold``."""
    for index, value in enumerate(spec.normalized):
        if value < threshold:
            return index
    return None


def correlation_matrix(w: Matrix, name: str = "") -> Matrix:
    """
    Absolute Pearson correlations between the columns (filters) of ``w``.

    Columns with zero variance get an all-zero row and column.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] < 2:
        raise InsufficientSamplesError(f"{name or 'matrix'}: need at least 2 rows, got shape {w.shape}")

    cov = covariance(w)
    std = np.sqrt(np.maximum(np.diag(cov), 0.0))
    dead = std <= 0.0
    if np.any(dead):
        logger.warning(f"{name or 'matrix'}: {int(dead.sum())} zero-variance column(s) get zero correlation")
    safe = np.where(dead, 1.0, std)
    corr = np.abs(cov / np.outer(safe, safe))
    np.fill_diagonal(corr, 1.0)
    corr[dead, :] = 0.0
    corr[:, dead] = 0.0
    corr = np.clip(corr, 0.0, 1.0)
    return (corr + corr.T) / 2.0
