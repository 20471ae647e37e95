"""
Linear probe: multinomial logistic regression on frozen representations.
"""

from typing import Optional

import numpy as np
import numpy.typing as npt
from cogents_core.utils import get_logger

from orthoreg.tensor import DimensionError, Matrix

from .models import ProbeConfig, ProbeResult

logger = get_logger(__name__)


def _softmax(logits: Matrix) -> Matrix:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _topk_accuracy(logits: Matrix, labels: npt.NDArray[np.int64], k: int) -> float:
    # stable ordering so ties resolve by class index
    ranked = np.argsort(-logits, axis=1, kind="stable")[:, :k]
    return float(np.mean(np.any(ranked == labels[:, None], axis=1)))


def linear_probe(
    representations: Matrix, labels, cfg: Optional[ProbeConfig] = None, seed: int = 0
) -> ProbeResult:
    """
    Train a softmax classifier by full-batch gradient descent on a seeded 80%
    split and report top-1 / top-k accuracy on the held-out rest.

    Features are standardized with the training split's statistics.

    Raises:
        DimensionError: Row count differs from label count
        ValueError: Fewer than two classes
    """
    cfg = cfg or ProbeConfig()
    x = np.asarray(representations, dtype=np.float64)
    y_raw = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y_raw.shape[0]:
        raise DimensionError(f"representations {x.shape} do not match {y_raw.shape[0]} labels")
    classes, y = np.unique(y_raw, return_inverse=True)
    if classes.size < 2:
        raise ValueError(f"linear probe needs at least 2 classes, got {classes.size}")

    n = x.shape[0]
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    order = rng.permutation(n)
    n_test = min(max(1, int(round(cfg.test_fraction * n))), n - 1)
    test_idx, train_idx = order[:n_test], order[n_test:]

    mean = x[train_idx].mean(axis=0)
    std = x[train_idx].std(axis=0)
    std[std == 0.0] = 1.0
    x_std = (x - mean) / std

    n_classes = classes.size
    x_train, y_train = x_std[train_idx], y[train_idx]
    onehot = np.eye(n_classes)[y_train]
    w = np.zeros((x.shape[1], n_classes))
    b = np.zeros(n_classes)
    for _ in range(cfg.epochs):
        residual = (_softmax(x_train @ w + b) - onehot) / x_train.shape[0]
        w -= cfg.lr * (x_train.T @ residual)
        b -= cfg.lr * residual.sum(axis=0)

    logits = x_std[test_idx] @ w + b
    k = min(cfg.top_k, n_classes)
    result = ProbeResult(
        top1=_topk_accuracy(logits, y[test_idx], 1),
        topk=_topk_accuracy(logits, y[test_idx], k),
        k=k,
        n_train=int(train_idx.size),
        n_test=int(test_idx.size),
    )
    logger.info(f"Linear probe: top-1 {result.top1:.4f}, top-{k} {result.topk:.4f} on {n_test} held-out rows")
    return result
