"""
Synthetic Gaussian-mixture data and the two-view augmentation.
"""

from typing import Tuple

import numpy as np
import numpy.typing as npt
from cogents_core.utils import get_logger

from orthoreg.constants import CLUSTER_CENTER_RANGE
from orthoreg.tensor import Matrix

from .models import AugmentConfig, DataConfig

logger = get_logger(__name__)


def gen_synthetic(cfg: DataConfig, seed: int) -> Tuple[Matrix, npt.NDArray[np.int64]]:
    """
    Draw a labelled Gaussian mixture.

    Centers are uniform in [-3, 3]^dim; each point is its center plus
    N(0, cluster_std^2) noise. Cluster sizes differ by at most one.

    Args:
        cfg: Dataset shape
        seed: Seed of the draw; equal seeds give bit-identical datasets

    Returns:
        (features, labels) with labels the cluster index of each row
    """
    if cfg.n_clusters < 2:
        raise ValueError(f"n_clusters must be >= 2, got {cfg.n_clusters}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    centers = rng.uniform(-CLUSTER_CENTER_RANGE, CLUSTER_CENTER_RANGE, size=(cfg.n_clusters, cfg.dim))
    labels = rng.permutation(np.arange(cfg.n_samples) % cfg.n_clusters).astype(np.int64)
    noise = rng.standard_normal((cfg.n_samples, cfg.dim))
    features = centers[labels] + cfg.cluster_std * noise
    logger.debug(f"Generated {cfg.n_samples}x{cfg.dim} mixture with {cfg.n_clusters} clusters")
    return features, labels


def augment(x: Matrix, rng: np.random.Generator, cfg: AugmentConfig) -> Matrix:
    """Additive Gaussian noise, then independent per-coordinate masking."""
    x = np.asarray(x, dtype=np.float64)
    noisy = x + cfg.noise_std * rng.standard_normal(x.shape)
    keep = rng.random(x.shape) >= cfg.mask_prob
    return np.where(keep, noisy, 0.0)


def two_views(x: Matrix, rng: np.random.Generator, cfg: AugmentConfig) -> Tuple[Matrix, Matrix]:
    return augment(x, rng, cfg), augment(x, rng, cfg)
