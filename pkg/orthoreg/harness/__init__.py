"""
Desk-scale joint-embedding training harness (BYOL, InfoNCE, VICReg) with the
orthogonality and whitening regularizers plugged into the step loss.
"""

from .data import augment, gen_synthetic, two_views
from .models import (
    AugmentConfig,
    ConvConfig,
    DataConfig,
    DimsConfig,
    EpochRecord,
    ProbeConfig,
    ProbeResult,
    StepRecord,
    TrainConfig,
    TrainLog,
)
from .network import DualNetState, Network, build_state, ema_update
from .objectives import (
    StepResult,
    byol_loss,
    byol_step,
    byol_views_step,
    infonce_loss,
    infonce_step,
    infonce_views_step,
    vicreg_step,
    vicreg_views_step,
    views_step,
)
from .probe import linear_probe
from .trainer import Trainer, TrainingDivergedError, representation_rank, train

__all__ = [
    "AugmentConfig",
    "ConvConfig",
    "DataConfig",
    "DimsConfig",
    "DualNetState",
    "EpochRecord",
    "Network",
    "ProbeConfig",
    "ProbeResult",
    "StepRecord",
    "StepResult",
    "TrainConfig",
    "TrainLog",
    "Trainer",
    "TrainingDivergedError",
    "augment",
    "build_state",
    "byol_loss",
    "byol_step",
    "byol_views_step",
    "ema_update",
    "gen_synthetic",
    "infonce_loss",
    "infonce_step",
    "infonce_views_step",
    "linear_probe",
    "representation_rank",
    "train",
    "two_views",
    "vicreg_step",
    "vicreg_views_step",
    "views_step",
]
