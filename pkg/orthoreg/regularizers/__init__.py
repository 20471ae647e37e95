"""
Loss terms acting on encoder weights and features.
"""

from .models import LayerKind, LayerSpec, RegularizerConfig
from .orthogonality import (
    combined_loss,
    gram_residual,
    or_loss,
    or_loss_tape,
    so_grad,
    so_loss,
    so_loss_tape,
    srip_grad,
    srip_loss,
    srip_loss_tape,
    srip_seed,
)
from .whitening import (
    vicreg_covariance_loss,
    vicreg_covariance_loss_tape,
    vicreg_variance_loss,
    vicreg_variance_loss_tape,
)

__all__ = [
    "LayerKind",
    "LayerSpec",
    "RegularizerConfig",
    "combined_loss",
    "gram_residual",
    "or_loss",
    "or_loss_tape",
    "so_grad",
    "so_loss",
    "so_loss_tape",
    "srip_grad",
    "srip_loss",
    "srip_loss_tape",
    "srip_seed",
    "vicreg_covariance_loss",
    "vicreg_covariance_loss_tape",
    "vicreg_variance_loss",
    "vicreg_variance_loss_tape",
]
