"""
Executable checks of what an orthogonal layer S = X W preserves:

1. whitened input (zero mean, covariance sigma^2 I) gives whitened output,
2. for square W, ||S||_F = ||X||_F,
3. for square W, the back-propagated gradient keeps its norm.

Each check returns a PropertyReport instead of raising when its
preconditions do not hold.
"""

from typing import Tuple

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.tensor import Matrix, covariance, sym_eig

from .models import PropertyReport

logger = get_logger(__name__)

ORTHOGONALITY_TOL = 1e-10
NORM_REL_TOL = 1e-9


# ----- samplers -----


def sample_orthogonal(rows: int, cols: int, rng: np.random.Generator) -> Matrix:
    """Matrix with orthonormal columns (rows >= cols) from the QR of a Gaussian matrix."""
    if rows < cols:
        raise ValueError(f"need rows >= cols for orthonormal columns, got {rows}x{cols}")
    q, r = np.linalg.qr(rng.standard_normal((rows, cols)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def sample_rotation(theta: float) -> Matrix:
    return np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])


def sample_whitened(n: int, dim: int, sigma2: float, rng: np.random.Generator) -> Matrix:
    """
    N x dim sample with zero column means and covariance exactly sigma2 * I
    (up to rounding), built by eigen-whitening a Gaussian sample.
    """
    raw = rng.standard_normal((n, dim))
    centered = raw - raw.mean(axis=0, keepdims=True)
    eig = sym_eig(covariance(centered))
    transform = eig.eigenvectors @ np.diag(1.0 / np.sqrt(eig.eigenvalues)) @ eig.eigenvectors.T
    white = centered @ transform * np.sqrt(sigma2)
    return white - white.mean(axis=0, keepdims=True)


# ----- helpers -----


def _orthogonality_gap(w: Matrix) -> float:
    return float(np.max(np.abs(w.T @ w - np.eye(w.shape[1]))))


def _whitening_gap(x: Matrix) -> Tuple[float, float, float]:
    cov = covariance(x)
    sigma2 = float(np.trace(cov) / cov.shape[0])
    mean_gap = float(np.max(np.abs(x.mean(axis=0))))
    cov_gap = float(np.max(np.abs(cov - sigma2 * np.eye(cov.shape[0]))))
    return sigma2, mean_gap, cov_gap


def _square_applicable(check: str, w: Matrix) -> PropertyReport:
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        return PropertyReport(
            check=check, applicable=False, passed=False, message=f"needs a square weight, got shape {w.shape}"
        )
    gap = _orthogonality_gap(w)
    return PropertyReport(
        check=check,
        preconditions_met=gap <= ORTHOGONALITY_TOL,
        metrics={"orthogonality_gap": gap},
    )


# ----- checks -----


def prop1_whitening_check(w: Matrix, x: Matrix, tol: float = 1e-8) -> PropertyReport:
    """Whitened input through orthonormal columns stays whitened."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 2 or x.shape[1] != w.shape[0]:
        return PropertyReport(
            check="whitening", applicable=False, message=f"shapes do not compose: x {x.shape}, w {w.shape}"
        )

    w_gap = _orthogonality_gap(w)
    sigma2, x_mean_gap, x_cov_gap = _whitening_gap(x)
    preconditions = w_gap <= tol and x_mean_gap <= tol and x_cov_gap <= tol

    s = x @ w
    s_cov = covariance(s)
    s_mean = float(np.max(np.abs(s.mean(axis=0))))
    deviation = float(np.linalg.norm(s_cov - sigma2 * np.eye(s_cov.shape[0])))
    passed = preconditions and s_mean <= tol and deviation <= tol

    message = "" if preconditions else "preconditions violated: weight not orthonormal or input not whitened"
    if not preconditions:
        logger.warning(f"whitening check: {message}")
    return PropertyReport(
        check="whitening",
        preconditions_met=preconditions,
        passed=passed,
        metrics={
            "sigma2": sigma2,
            "orthogonality_gap": w_gap,
            "input_mean_gap": x_mean_gap,
            "input_cov_gap": x_cov_gap,
            "output_mean_max": s_mean,
            "output_cov_deviation": deviation,
        },
        details={"output_cov_diagonal": np.diag(s_cov).tolist()},
        message=message,
    )


def prop1_norm_check(w: Matrix, x: Matrix) -> PropertyReport:
    """||X W||_F^2 equals ||X||_F^2 for square orthogonal W."""
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    report = _square_applicable("norm", w)
    if not report.applicable:
        return report

    lhs = float(np.sum((x @ w) ** 2))
    rhs = float(np.sum(x**2))
    gap = abs(lhs - rhs)
    report.metrics.update({"output_norm_sq": lhs, "input_norm_sq": rhs, "abs_gap": gap})
    report.passed = report.preconditions_met and gap <= NORM_REL_TOL * rhs
    if not report.preconditions_met:
        report.message = "preconditions violated: weight not orthogonal"
    return report


def prop1_gradnorm_check(w: Matrix, g: Matrix) -> PropertyReport:
    """||dL/dS W^T||_F^2 equals ||dL/dS||_F^2 for square orthogonal W."""
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    report = _square_applicable("gradnorm", w)
    if not report.applicable:
        return report

    back = g @ w.T
    lhs = float(np.sum(back**2))
    rhs = float(np.sum(g**2))
    gap = abs(lhs - rhs)
    col_in = np.sum(g**2, axis=0)
    col_out = np.sum(back**2, axis=0)
    ratios = np.divide(col_out, col_in, out=np.zeros_like(col_out), where=col_in > 0)
    report.metrics.update({"input_grad_norm_sq": lhs, "output_grad_norm_sq": rhs, "abs_gap": gap})
    report.details["column_ratios"] = ratios.tolist()
    report.passed = report.preconditions_met and gap <= NORM_REL_TOL * rhs
    if not report.preconditions_met:
        report.message = "preconditions violated: weight not orthogonal"
    return report
