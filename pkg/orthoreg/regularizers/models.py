"""
Data models for the regularizers: layer descriptions and regularizer settings.
"""

from enum import Enum
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from orthoreg.constants import (
    DEFAULT_GAMMA_PRESET,
    DEFAULT_VICREG_EPSILON,
    DEFAULT_VICREG_GAMMA,
    DEFAULT_VICREG_THRESHOLD,
    GAMMA_RECIPES,
    VICREG_COV_RATIO,
)
from orthoreg.tensor import DimensionError
from orthoreg.tensor.reshape import conv_reshape


class LayerKind(str, Enum):
    """Kinds of parameter tensors an encoder exposes."""

    LINEAR = "linear"
    CONV = "conv"
    BIAS = "bias"
    NORM = "norm"

    @property
    def or_eligible(self) -> bool:
        return self in (LayerKind.LINEAR, LayerKind.CONV)


class LayerSpec(BaseModel):
    """
    A named parameter tensor in its 2-D form.

    For linear layers the weight is input x output. For conv layers ``shape``
    keeps the raw (C_out, C_in, H, S) layout and ``weight`` holds the
    (S*H*C_in) x C_out reshape. Bias and norm vectors are stored as 1 x n rows.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    kind: LayerKind
    shape: Tuple[int, ...]
    weight: np.ndarray

    @model_validator(mode="after")
    def _check_weight(self) -> "LayerSpec":
        if self.weight.ndim != 2:
            raise DimensionError(f"layer {self.name}: weight must be 2-D, got {self.weight.shape}")
        if self.kind == LayerKind.CONV:
            c_out, c_in, h, s = self.shape
            if self.weight.shape != (s * h * c_in, c_out):
                raise DimensionError(f"layer {self.name}: weight {self.weight.shape} does not match {self.shape}")
        return self

    @property
    def or_eligible(self) -> bool:
        return self.kind.or_eligible

    @classmethod
    def linear(cls, name: str, weight) -> "LayerSpec":
        w = np.asarray(weight, dtype=np.float64)
        return cls(name=name, kind=LayerKind.LINEAR, shape=tuple(w.shape), weight=w)

    @classmethod
    def conv(cls, name: str, filt) -> "LayerSpec":
        tensor = np.asarray(filt, dtype=np.float64)
        return cls(name=name, kind=LayerKind.CONV, shape=tuple(tensor.shape), weight=conv_reshape(tensor))

    @classmethod
    def vector(cls, name: str, values, kind: LayerKind = LayerKind.BIAS) -> "LayerSpec":
        v = np.asarray(values, dtype=np.float64).reshape(1, -1)
        return cls(name=name, kind=kind, shape=(v.shape[1],), weight=v)


RegularizerKind = Literal["none", "so", "srip", "vicreg-whiten"]


class RegularizerConfig(BaseModel):
    """Regularizer choice and its weights."""

    kind: RegularizerKind = "none"
    gamma: Optional[float] = Field(default=None, ge=0.0)
    gamma_preset: str = DEFAULT_GAMMA_PRESET
    srip_seed: int = 0
    vicreg_gamma: float = Field(default=DEFAULT_VICREG_GAMMA, ge=0.0)
    vicreg_threshold: float = DEFAULT_VICREG_THRESHOLD
    vicreg_epsilon: float = Field(default=DEFAULT_VICREG_EPSILON, gt=0.0)
    cov_divisor: Literal["n-1", "n"] = "n-1"
    whiten_target: Literal["predictor", "projector", "representation"] = "predictor"

    @model_validator(mode="after")
    def _fill_gamma(self) -> "RegularizerConfig":
        if self.gamma_preset not in GAMMA_RECIPES:
            raise ValueError(f"Unknown gamma preset: {self.gamma_preset}")
        if self.gamma is None:
            if self.kind in ("so", "srip"):
                recipe = GAMMA_RECIPES[self.gamma_preset]
                if self.kind not in recipe:
                    raise ValueError(f"Preset {self.gamma_preset} has no recipe for {self.kind}")
                self.gamma = recipe[self.kind]
            else:
                self.gamma = 0.0
        return self

    @property
    def vicreg_cov_gamma(self) -> float:
        return self.vicreg_gamma * VICREG_COV_RATIO

    @property
    def applies_or(self) -> bool:
        """True when an orthogonality term contributes to the objective."""
        return self.kind in ("so", "srip") and self.gamma > 0.0

