"""
Numeric core: dense matrix helpers, the Jacobi eigensolver, the spectral norm
estimator and the reverse-mode gradient tape.
"""

from .errors import ContractError, ConvergenceError, DimensionError, InsufficientSamplesError
from .linalg import (
    Eigensystem,
    Matrix,
    covariance,
    matmul,
    power_iter_specnorm,
    spectral_norm,
    sym_eig,
)
from .reshape import conv_reshape, conv_unreshape, im2col
from .tape import GradTape, Var, tape_grad

__all__ = [
    "ContractError",
    "ConvergenceError",
    "DimensionError",
    "Eigensystem",
    "GradTape",
    "InsufficientSamplesError",
    "Matrix",
    "Var",
    "conv_reshape",
    "conv_unreshape",
    "covariance",
    "im2col",
    "matmul",
    "power_iter_specnorm",
    "spectral_norm",
    "sym_eig",
    "tape_grad",
]
