"""
Dimensional-collapse diagnostics built on normalized covariance eigenvalues.
"""

from .eigenspectrum import (
    NoPositiveEigenvalueError,
    correlation_matrix,
    decay_index,
    effective_rank,
    normalized_eigenvalues,
)
from .models import CollapseReport, Eigenspectrum, PropertyReport, SpectraConfig, StageSummary
from .properties import (
    prop1_gradnorm_check,
    prop1_norm_check,
    prop1_whitening_check,
    sample_orthogonal,
    sample_rotation,
    sample_whitened,
)
from .report import collapse_report, summarize

__all__ = [
    "CollapseReport",
    "Eigenspectrum",
    "NoPositiveEigenvalueError",
    "PropertyReport",
    "SpectraConfig",
    "StageSummary",
    "collapse_report",
    "correlation_matrix",
    "decay_index",
    "effective_rank",
    "normalized_eigenvalues",
    "prop1_gradnorm_check",
    "prop1_norm_check",
    "prop1_whitening_check",
    "sample_orthogonal",
    "sample_rotation",
    "sample_whitened",
    "summarize",
]
