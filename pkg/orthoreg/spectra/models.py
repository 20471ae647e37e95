"""
Data models for eigenspectrum diagnostics.
"""

from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field

from orthoreg.constants import DEFAULT_DECAY_THRESHOLDS, DEFAULT_WEIGHT_AXIS


class SpectraConfig(BaseModel):
    """Settings of the collapse diagnostics."""

    weight_axis: Literal["rows", "cols"] = DEFAULT_WEIGHT_AXIS
    decay_thresholds: Tuple[float, ...] = DEFAULT_DECAY_THRESHOLDS
    cov_divisor: Literal["n-1", "n"] = "n-1"


class Eigenspectrum(BaseModel):
    """Descending covariance eigenvalues of one matrix and their normalized form."""

    source: str
    raw: List[float] = Field(default_factory=list)
    normalized: List[float] = Field(default_factory=list)
    nonpositive_count: int = 0
    dim: int = 0
    degenerate: bool = False
    error: Optional[str] = None

    @property
    def has_positive(self) -> bool:
        return any(value > 0.0 for value in self.raw)


class StageSummary(BaseModel):
    """One stage of a collapse report: a spectrum plus its scalar summaries."""

    group: Literal["weight", "feature"]
    spectrum: Eigenspectrum
    effective_rank: Optional[float] = None
    # threshold (as string key for JSON) -> first index below it, None if never
    decay_index: Dict[str, Optional[int]] = Field(default_factory=dict)

    @property
    def stage(self) -> str:
        return self.spectrum.source


class CollapseReport(BaseModel):
    """Eigenspectra of encoder weights and features."""

    stages: List[StageSummary] = Field(default_factory=list)

    def weights(self) -> List[StageSummary]:
        return [s for s in self.stages if s.group == "weight"]

    def features(self) -> List[StageSummary]:
        return [s for s in self.stages if s.group == "feature"]

    def get(self, stage: str) -> StageSummary:
        for summary in self.stages:
            if summary.stage == stage:
                return summary
        raise KeyError(f"No stage named {stage!r}")

    def is_empty(self) -> bool:
        return len(self.stages) == 0


class PropertyReport(BaseModel):
    """Outcome of one executable check of the orthogonal-layer properties."""

    check: str
    applicable: bool = True
    preconditions_met: bool = True
    passed: bool = False
    metrics: Dict[str, float] = Field(default_factory=dict)
    details: Dict[str, List[float]] = Field(default_factory=dict)
    message: str = ""
