"""
Collapse reports: eigenspectra of encoder weights and of features at each stage.
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.regularizers import LayerSpec
from orthoreg.tensor import Matrix

from .eigenspectrum import NoPositiveEigenvalueError, decay_index, effective_rank, normalized_eigenvalues
from .models import CollapseReport, Eigenspectrum, SpectraConfig, StageSummary

logger = get_logger(__name__)


def threshold_key(threshold: float) -> str:
    return f"{threshold:g}"


def summarize(spectrum: Eigenspectrum, group: str, cfg: SpectraConfig) -> StageSummary:
    """Attach effective rank and decay indices to a spectrum."""
    rank: Optional[float] = None
    if spectrum.error is None and spectrum.has_positive:
        try:
            rank = effective_rank(spectrum)
        except NoPositiveEigenvalueError:
            rank = None
    decay = {threshold_key(t): decay_index(spectrum, t) for t in cfg.decay_thresholds}
    return StageSummary(group=group, spectrum=spectrum, effective_rank=rank, decay_index=decay)


def _stage_spectrum(matrix: Matrix, source: str, cfg: SpectraConfig) -> Eigenspectrum:
    try:
        return normalized_eigenvalues(matrix, source=source, divisor=cfg.cov_divisor)
    except (ValueError, RuntimeError) as e:
        logger.warning(f"Stage {source} skipped: {e}")
        return Eigenspectrum(source=source, degenerate=True, error=str(e))


def weight_samples(weight: Matrix, axis: str) -> Matrix:
    """Orient a weight so its sample axis comes first."""
    return weight if axis == "rows" else np.asarray(weight).T


def collapse_report(
    layers: Sequence[LayerSpec],
    feature_stages: Sequence[Tuple[str, Matrix]],
    cfg: Optional[SpectraConfig] = None,
) -> CollapseReport:
    """
    One spectrum per OR-eligible layer weight and per feature stage.

    A stage that cannot be analyzed is kept with its ``error`` set and the
    degenerate flag raised; the rest of the report is still produced.
    """
    cfg = cfg or SpectraConfig()
    stages: List[StageSummary] = []
    for layer in layers:
        if not layer.or_eligible:
            continue
        spectrum = _stage_spectrum(weight_samples(layer.weight, cfg.weight_axis), layer.name, cfg)
        stages.append(summarize(spectrum, "weight", cfg))
    for name, features in feature_stages:
        stages.append(summarize(_stage_spectrum(features, name, cfg), "feature", cfg))
    logger.debug(f"Collapse report with {len(stages)} stages")
    return CollapseReport(stages=stages)
