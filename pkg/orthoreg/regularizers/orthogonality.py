"""
Orthogonality regularizers: soft orthogonality (SO) and the spectral
restricted isometry penalty (SRIP), plus the encoder-wide sum and the combined
objective.

Both penalties compare a Gram matrix with the identity. When the weight has
more input rows than output columns the Gram matrix is W^T W, otherwise W W^T.
"""

import math
from typing import List, Sequence, Tuple

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.constants import POWER_ITER_DEGENERATE_NORM
from orthoreg.tensor import DimensionError, GradTape, Matrix, Var, power_iter_specnorm, tape_grad
from orthoreg.tensor.linalg import draw_start_vector

from .models import LayerSpec, RegularizerConfig

logger = get_logger(__name__)


def _check_weight(w) -> Matrix:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.size == 0:
        raise DimensionError(f"weight must be a non-empty 2-D matrix, got shape {w.shape}")
    return w


def uses_input_gram(shape: Tuple[int, ...]) -> bool:
    """True when the penalty uses W^T W (input > output)."""
    return shape[0] > shape[1]


def column_gram(a: Matrix) -> Matrix:
    """
    a^T a with every entry a correctly rounded sum, so permuting the rows of
    ``a`` leaves the result bit-identical.
    """
    products = a[:, :, None] * a[:, None, :]
    n = a.shape[1]
    gram = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            gram[i, j] = gram[j, i] = math.fsum(products[:, i, j])
    return gram


def gram_residual(w: Matrix) -> Matrix:
    """W^T W - I if rows > cols, else W W^T - I."""
    w = _check_weight(w)
    if uses_input_gram(w.shape):
        return column_gram(w) - np.eye(w.shape[1])
    return column_gram(w.T) - np.eye(w.shape[0])


def gram_residual_tape(tape: GradTape, w: Var) -> Var:
    if uses_input_gram(w.shape):
        return tape.sub(tape.matmul(tape.transpose(w), w), np.eye(w.shape[1]))
    return tape.sub(tape.matmul(w, tape.transpose(w)), np.eye(w.shape[0]))


# ----- soft orthogonality -----


def so_loss(w: Matrix) -> float:
    """Squared Frobenius distance between the active Gram matrix and I."""
    r = gram_residual(w)
    return math.fsum((r * r).ravel())


def so_grad(w: Matrix) -> Matrix:
    """Closed-form gradient: 4 W (W^T W - I) or 4 (W W^T - I) W."""
    w = _check_weight(w)
    r = gram_residual(w)
    if uses_input_gram(w.shape):
        return 4.0 * (w @ r)
    return 4.0 * (r @ w)


def so_loss_tape(tape: GradTape, w: Var) -> Var:
    return tape.frobenius_square(gram_residual_tape(tape, w))


# ----- spectral restricted isometry -----


def srip_seed(global_seed: int, step: int, layer_index: int) -> np.random.SeedSequence:
    """Seed of the start vector for one layer at one training step."""
    return np.random.SeedSequence([int(global_seed), int(step), int(layer_index)])


def srip_loss(w: Matrix, seed=None) -> float:
    """Two-step power iteration estimate of the spectral norm of the Gram residual."""
    return power_iter_specnorm(gram_residual(w), seed)


def srip_loss_tape(tape: GradTape, w: Var, seed=None) -> Var:
    """
    SRIP recorded on a tape with the start vector held constant.

    When the first iterate vanishes the estimate is clamped to a constant 0,
    which also zeroes its gradient.
    """
    r = gram_residual_tape(tape, w)
    n = r.shape[0]
    v0 = draw_start_vector(n, seed).reshape(n, 1)
    u = tape.matmul(r, v0)
    if float(np.linalg.norm(u.value)) < POWER_ITER_DEGENERATE_NORM:
        return tape.const(0.0)
    v = tape.matmul(r, u)
    return tape.div(tape.norm(v), tape.norm(u))


def srip_grad(w: Matrix, seed=None) -> Matrix:
    """Gradient of the SRIP estimate with the start vector fixed by ``seed``."""
    w = _check_weight(w)
    (g,) = tape_grad(lambda tape, wv: srip_loss_tape(tape, wv, seed), [w])
    return g


# ----- encoder-wide objective -----


def _layer_penalty(w: Matrix, cfg: RegularizerConfig, step: int, layer_index: int) -> float:
    if cfg.kind == "so":
        return so_loss(w)
    return srip_loss(w, srip_seed(cfg.srip_seed, step, layer_index))


def or_loss(encoder: Sequence[LayerSpec], cfg: RegularizerConfig, step: int = 0) -> float:
    """
    Sum of the per-layer penalty over OR-eligible layers.

    SRIP draws one start vector per eligible layer, indexed by the layer's
    position among eligible layers.
    """
    if cfg.kind not in ("so", "srip"):
        raise ValueError(f"or_loss needs regularizer kind so or srip, got {cfg.kind}")
    eligible = [layer for layer in encoder if layer.or_eligible]
    if not eligible:
        logger.warning("No linear or conv layers to regularize; orthogonality loss is 0")
        return 0.0
    total = 0.0
    for index, layer in enumerate(eligible):
        total += _layer_penalty(layer.weight, cfg, step, index)
    return total


def or_loss_tape(
    tape: GradTape, weights: Sequence[Tuple[LayerSpec, Var]], cfg: RegularizerConfig, step: int = 0
) -> Var:
    """Differentiable ``or_loss`` over (layer, weight variable) pairs."""
    if cfg.kind not in ("so", "srip"):
        raise ValueError(f"or_loss needs regularizer kind so or srip, got {cfg.kind}")
    terms: List[Var] = []
    eligible = [(layer, w) for layer, w in weights if layer.or_eligible]
    for index, (_, w) in enumerate(eligible):
        if cfg.kind == "so":
            terms.append(so_loss_tape(tape, w))
        else:
            terms.append(srip_loss_tape(tape, w, srip_seed(cfg.srip_seed, step, index)))
    if not terms:
        logger.warning("No linear or conv layers to regularize; orthogonality loss is 0")
        return tape.const(0.0)
    total = terms[0]
    for term in terms[1:]:
        total = tape.add(total, term)
    return total


def combined_loss(loss_ssl: float, loss_or: float, gamma: float) -> float:
    """Loss = Loss_SSL + gamma * Loss_OR."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    return loss_ssl + gamma * loss_or
