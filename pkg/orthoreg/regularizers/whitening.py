"""
VICReg-style feature whitening terms.

L_var = (1/D) * sum_d max(0, threshold - sqrt(Var(z_d) + eps))
L_cov = sum_{i != j} Cov(z_i, z_j)^2
"""

from typing import Literal

import numpy as np

from orthoreg.constants import DEFAULT_VICREG_EPSILON, DEFAULT_VICREG_THRESHOLD
from orthoreg.tensor import DimensionError, GradTape, InsufficientSamplesError, Matrix, Var

CovDivisor = Literal["n-1", "n"]


def _ddof(divisor: CovDivisor) -> int:
    return 1 if divisor == "n-1" else 0


def _check_samples(shape) -> None:
    if len(shape) != 2:
        raise DimensionError(f"features must be 2-D, got shape {shape}")
    if shape[0] < 2:
        raise InsufficientSamplesError(f"need at least 2 samples, got {shape[0]}")


def vicreg_variance_loss_tape(
    tape: GradTape,
    h: Var,
    threshold: float = DEFAULT_VICREG_THRESHOLD,
    epsilon: float = DEFAULT_VICREG_EPSILON,
    divisor: CovDivisor = "n-1",
) -> Var:
    _check_samples(h.shape)
    std = tape.sqrt(tape.add(tape.variance(h, axis=0, ddof=_ddof(divisor)), epsilon))
    return tape.mean(tape.relu(tape.sub(threshold, std)))


def vicreg_covariance_loss_tape(tape: GradTape, h: Var, divisor: CovDivisor = "n-1") -> Var:
    _check_samples(h.shape)
    n, d = h.shape
    centered = tape.sub(h, tape.mean(h, axis=0, keepdims=True))
    cov = tape.scale(tape.matmul(tape.transpose(centered), centered), 1.0 / (n - _ddof(divisor)))
    off_diagonal = tape.mul(cov, 1.0 - np.eye(d))
    return tape.sum(tape.square(off_diagonal))


def vicreg_variance_loss(
    h: Matrix,
    threshold: float = DEFAULT_VICREG_THRESHOLD,
    epsilon: float = DEFAULT_VICREG_EPSILON,
    divisor: CovDivisor = "n-1",
) -> float:
    """Mean hinge on the regularized per-column standard deviation."""
    tape = GradTape()
    return float(vicreg_variance_loss_tape(tape, tape.const(h), threshold, epsilon, divisor).value)


def vicreg_covariance_loss(h: Matrix, divisor: CovDivisor = "n-1") -> float:
    """Sum of squared off-diagonal covariance entries."""
    tape = GradTape()
    return float(vicreg_covariance_loss_tape(tape, tape.const(h), divisor).value)
