"""
Data models for the training harness: run configuration and training logs.
"""

from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from orthoreg.constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLUSTER_STD,
    DEFAULT_DATA_DIM,
    DEFAULT_EMA_TAU,
    DEFAULT_EPOCHS,
    DEFAULT_HIDDEN_DIM,
    DEFAULT_LR,
    DEFAULT_MASK_PROB,
    DEFAULT_METHOD,
    DEFAULT_N_CLUSTERS,
    DEFAULT_N_SAMPLES,
    DEFAULT_NOISE_STD,
    DEFAULT_PROBE_EPOCHS,
    DEFAULT_PROBE_LR,
    DEFAULT_PROJ_DIM,
    DEFAULT_PROJ_HIDDEN_DIM,
    DEFAULT_REPR_DIM,
    DEFAULT_SEED,
    DEFAULT_TEMPERATURE,
    DEFAULT_TRAIN_GAMMA_PRESET,
    PROBE_TEST_FRACTION,
    PROBE_TOP_K,
)
from orthoreg.regularizers.models import RegularizerConfig
from orthoreg.spectra.models import CollapseReport, SpectraConfig

Method = Literal["byol", "infonce", "vicreg"]
Activation = Literal["tanh", "relu"]


class DataConfig(BaseModel):
    """Gaussian-mixture dataset."""

    n_samples: int = Field(default=DEFAULT_N_SAMPLES, ge=2)
    dim: int = Field(default=DEFAULT_DATA_DIM, ge=1)
    n_clusters: int = Field(default=DEFAULT_N_CLUSTERS, ge=2)
    cluster_std: float = Field(default=DEFAULT_CLUSTER_STD, ge=0.0)


class AugmentConfig(BaseModel):
    noise_std: float = Field(default=DEFAULT_NOISE_STD, ge=0.0)
    mask_prob: float = Field(default=DEFAULT_MASK_PROB, ge=0.0, le=1.0)


class DimsConfig(BaseModel):
    """
    Layer widths. ``hidden`` may be a single width or a list of widths for a
    deeper encoder; ``proj = None`` drops the projector so the SSL loss acts
    on representations.
    """

    hidden: List[int] = Field(default_factory=lambda: [DEFAULT_HIDDEN_DIM])
    repr: int = Field(default=DEFAULT_REPR_DIM, ge=1)
    proj: Optional[int] = Field(default=DEFAULT_PROJ_DIM, ge=1)
    proj_hidden: int = Field(default=DEFAULT_PROJ_HIDDEN_DIM, ge=1)

    @model_validator(mode="before")
    @classmethod
    def _listify_hidden(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("hidden"), int):
            data = {**data, "hidden": [data["hidden"]]}
        return data

    @model_validator(mode="after")
    def _check_widths(self) -> "DimsConfig":
        if any(width < 1 for width in self.hidden):
            raise ValueError(f"hidden widths must be positive, got {self.hidden}")
        return self


class ConvConfig(BaseModel):
    """
    Optional leading conv block: each sample is read as a
    (in_channels, height, width) image, convolved with valid padding and
    stride 1, then flattened.
    """

    enabled: bool = False
    in_channels: int = Field(default=1, ge=1)
    height: int = Field(default=4, ge=1)
    width: int = Field(default=5, ge=1)
    out_channels: int = Field(default=4, ge=1)
    kernel: Tuple[int, int] = (2, 2)

    @model_validator(mode="after")
    def _check_kernel(self) -> "ConvConfig":
        kh, kw = self.kernel
        if kh < 1 or kw < 1 or kh > self.height or kw > self.width:
            raise ValueError(f"kernel {self.kernel} does not fit a {self.height}x{self.width} image")
        return self

    @property
    def input_dim(self) -> int:
        return self.in_channels * self.height * self.width

    @property
    def output_dim(self) -> int:
        kh, kw = self.kernel
        return self.out_channels * (self.height - kh + 1) * (self.width - kw + 1)


class ProbeConfig(BaseModel):
    epochs: int = Field(default=DEFAULT_PROBE_EPOCHS, ge=1)
    lr: float = Field(default=DEFAULT_PROBE_LR, gt=0.0)
    test_fraction: float = Field(default=PROBE_TEST_FRACTION, gt=0.0, lt=1.0)
    top_k: int = Field(default=PROBE_TOP_K, ge=1)


class TrainConfig(BaseModel):
    """Everything that determines a training run."""

    seed: int = DEFAULT_SEED
    method: Method = DEFAULT_METHOD
    activation: Activation = "tanh"
    regularizer: RegularizerConfig = Field(
        default_factory=lambda: RegularizerConfig(gamma_preset=DEFAULT_TRAIN_GAMMA_PRESET)
    )
    data: DataConfig = Field(default_factory=DataConfig)
    augmentation: AugmentConfig = Field(default_factory=AugmentConfig)
    dims: DimsConfig = Field(default_factory=DimsConfig)
    conv: ConvConfig = Field(default_factory=ConvConfig)
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=1)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=2)
    lr: float = Field(default=DEFAULT_LR, gt=0.0)
    ema_tau: float = Field(default=DEFAULT_EMA_TAU, ge=0.0, lt=1.0)
    temperature: float = Field(default=DEFAULT_TEMPERATURE, gt=0.0)
    probe: ProbeConfig = Field(default_factory=ProbeConfig)
    spectra: SpectraConfig = Field(default_factory=SpectraConfig)
    debug: bool = False

    @model_validator(mode="before")
    @classmethod
    def _toy_gamma_preset(cls, data: Any) -> Any:
        if isinstance(data, dict) and isinstance(data.get("regularizer"), dict):
            regularizer = dict(data["regularizer"])
            regularizer.setdefault("gamma_preset", DEFAULT_TRAIN_GAMMA_PRESET)
            data = {**data, "regularizer": regularizer}
        return data

    @model_validator(mode="after")
    def _check_shapes(self) -> "TrainConfig":
        if self.data.n_samples - self.batch_size < 2:
            raise ValueError(
                f"data.n_samples ({self.data.n_samples}) must exceed batch_size ({self.batch_size}) by at least 2; "
                "the first batch is held out for evaluation"
            )
        if self.conv.enabled and self.conv.input_dim != self.data.dim:
            raise ValueError(
                f"conv image {self.conv.in_channels}x{self.conv.height}x{self.conv.width} "
                f"does not match data.dim {self.data.dim}"
            )
        return self


class StepRecord(BaseModel):
    step: int
    epoch: int
    loss_ssl: float
    loss_or: float
    combined: float


class EpochRecord(BaseModel):
    """Epoch means of the step losses plus the held-out representation rank."""

    epoch: int
    loss_ssl: float
    loss_or: float
    combined: float
    effective_rank: Optional[float] = None


class ProbeResult(BaseModel):
    top1: float
    topk: float
    k: int
    n_train: int
    n_test: int


class TrainLog(BaseModel):
    """Per-step and per-epoch losses, plus the final report and probe accuracy."""

    method: Method
    regularizer: str
    gamma: float
    seed: int
    epochs: List[EpochRecord] = Field(default_factory=list)
    steps: List[StepRecord] = Field(default_factory=list)
    report: Optional[CollapseReport] = None
    probe: Optional[ProbeResult] = None
    diverged: bool = False

    def final(self) -> Optional[EpochRecord]:
        return self.epochs[-1] if self.epochs else None

    def summary(self) -> Dict[str, Any]:
        last = self.final()
        return {
            "method": self.method,
            "regularizer": self.regularizer,
            "epochs": len(self.epochs),
            "final_combined": last.combined if last else None,
            "final_effective_rank": last.effective_rank if last else None,
            "probe_top1": self.probe.top1 if self.probe else None,
        }
