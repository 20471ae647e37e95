"""
Dense matrix helpers: products, covariance, the Jacobi symmetric eigensolver
and the two-step spectral norm estimator.

Every matrix is a 2-D float64 numpy array.
"""

from typing import List, Literal, Optional, Union

import numpy as np
import numpy.typing as npt
from cogents_core.utils import get_logger
from pydantic import BaseModel, ConfigDict

from orthoreg.constants import (
    JACOBI_MAX_SWEEPS,
    JACOBI_REL_TOL,
    POWER_ITER_DEGENERATE_NORM,
    POWER_ITER_STEPS,
    SYMMETRY_TOL,
)

from .errors import ConvergenceError, DimensionError, InsufficientSamplesError

logger = get_logger(__name__)

Matrix = npt.NDArray[np.float64]
SeedLike = Union[int, np.random.SeedSequence, None]
CovDivisor = Literal["n-1", "n"]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with a shape check."""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def covariance(t: Matrix, divisor: CovDivisor = "n-1") -> Matrix:
    """
    Covariance of the columns of ``t`` (rows are samples).

    Args:
        t: N x D matrix
        divisor: "n-1" (unbiased) or "n"

    Returns:
        D x D symmetric covariance matrix
    """
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 2:
        raise DimensionError(f"covariance needs a 2-D matrix, got shape {t.shape}")
    n = t.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs at least 2 samples, got {n}")
    centered = t - t.mean(axis=0, keepdims=True)
    denom = n - 1 if divisor == "n-1" else n
    cov = (centered.T @ centered) / denom
    # exact symmetry regardless of BLAS summation order
    return (cov + cov.T) / 2.0


class Eigensystem(BaseModel):
    """Eigenvalues in descending order with matching eigenvector columns."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    def reconstruct(self) -> Matrix:
        """Return V diag(lambda) V^T."""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def _off_diagonal_max(a: Matrix) -> float:
    if a.shape[0] < 2:
        return 0.0
    off = np.abs(a - np.diag(np.diag(a)))
    return float(off.max())


def sym_eig(a: Matrix, tol: float = JACOBI_REL_TOL, max_sweeps: int = JACOBI_MAX_SWEEPS) -> Eigensystem:
    """
    Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input is symmetrized as (a + a^T) / 2 first. Sweeps stop once every
    off-diagonal magnitude is at most ``tol * ||a||_F``.

    Raises:
        DimensionError: Input is not square or is visibly asymmetric
        ConvergenceError: ``max_sweeps`` exhausted
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"sym_eig needs a square matrix, got shape {a.shape}")

    n = a.shape[0]
    if n == 0:
        return Eigensystem(eigenvalues=np.zeros(0), eigenvectors=np.zeros((0, 0)))

    asym = float(np.max(np.abs(a - a.T)))
    if asym > SYMMETRY_TOL:
        raise DimensionError(f"sym_eig needs a symmetric matrix, max|a - a^T| = {asym:.3e}")

    work = (a + a.T) / 2.0
    vecs = np.eye(n)
    threshold = tol * float(np.linalg.norm(work))

    sweeps = 0
    while _off_diagonal_max(work) > threshold:
        if sweeps >= max_sweeps:
            raise ConvergenceError("Jacobi eigensolver did not converge", _off_diagonal_max(work), sweeps)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                if apq == 0.0:
                    continue
                theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.hypot(theta, 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = work[:, p].copy()
                col_q = work[:, q].copy()
                work[:, p] = c * col_p - s * col_q
                work[:, q] = s * col_p + c * col_q

                row_p = work[p, :].copy()
                row_q = work[q, :].copy()
                work[p, :] = c * row_p - s * row_q
                work[q, :] = s * row_p + c * row_q
                work[p, q] = 0.0
                work[q, p] = 0.0

                vec_p = vecs[:, p].copy()
                vec_q = vecs[:, q].copy()
                vecs[:, p] = c * vec_p - s * vec_q
                vecs[:, q] = s * vec_p + c * vec_q
        sweeps += 1

    diag = np.diag(work).copy()
    order = np.argsort(-diag, kind="stable")
    return Eigensystem(eigenvalues=diag[order], eigenvectors=vecs[:, order], sweeps=sweeps)


def spectral_norm(a: Matrix) -> float:
    """Exact spectral norm of a symmetric matrix via ``sym_eig``."""
    eig = sym_eig(a)
    if eig.eigenvalues.size == 0:
        return 0.0
    return float(np.max(np.abs(eig.eigenvalues)))


def draw_start_vector(n: int, seed: SeedLike) -> npt.NDArray[np.float64]:
    """Standard normal start vector for power iteration."""
    return np.random.default_rng(seed).standard_normal(n)


def power_iter_specnorm(m: Matrix, seed: SeedLike = None, v0: Optional[npt.NDArray[np.float64]] = None) -> float:
    """
    Two-step power iteration estimate of the spectral norm of a square matrix.

    Computes u = M v0, v = M u and returns ||v|| / ||u||. For symmetric M the
    result never exceeds the true spectral norm (up to rounding).

    Args:
        m: Square matrix
        seed: Seed for the standard normal start vector
        v0: Explicit start vector, overrides ``seed``

    Returns:
        The estimate, or 0.0 when ||u|| falls below the degenerate threshold
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"power iteration needs a square matrix, got shape {m.shape}")

    v = draw_start_vector(m.shape[0], seed) if v0 is None else np.asarray(v0, dtype=np.float64)
    norms: List[float] = []
    for _ in range(POWER_ITER_STEPS):
        v = m @ v
        norms.append(float(np.linalg.norm(v)))
        if norms[0] < POWER_ITER_DEGENERATE_NORM:
            return 0.0
    return norms[-1] / norms[-2]
