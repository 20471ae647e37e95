"""
Per-step objectives: BYOL (2 - 2 cos), symmetric InfoNCE and VICReg, each
optionally augmented with feature whitening and the orthogonality penalty:

    combined = loss_ssl + gamma * loss_or
"""

from typing import Dict, Optional

import numpy as np
from cogents_core.utils import get_logger
from pydantic import BaseModel, ConfigDict, Field

from orthoreg.constants import COSINE_EPS, VICREG_COV_WEIGHT, VICREG_SIM_WEIGHT, VICREG_VAR_WEIGHT
from orthoreg.regularizers import (
    RegularizerConfig,
    combined_loss,
    or_loss_tape,
    vicreg_covariance_loss_tape,
    vicreg_variance_loss_tape,
)
from orthoreg.tensor import GradTape, InsufficientSamplesError, Matrix, Var

from .data import two_views
from .models import TrainConfig
from .network import DualNetState, Embedding

logger = get_logger(__name__)


class StepResult(BaseModel):
    """Losses and online-parameter gradients of one step."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    loss_ssl: float
    loss_or: float
    combined: float
    grads: Dict[str, np.ndarray] = Field(default_factory=dict)
    tape: Optional[GradTape] = Field(default=None, exclude=True)

    @property
    def finite(self) -> bool:
        if not np.isfinite(self.combined):
            return False
        return all(np.all(np.isfinite(g)) for g in self.grads.values())


# ----- loss terms -----


def cosine_rows(tape: GradTape, a: Var, b: Var, eps: float = COSINE_EPS) -> Var:
    """Row-wise cosine similarity with ``eps`` added to the denominator."""
    dot = tape.sum(tape.mul(a, b), axis=1)
    norm_a = tape.sqrt(tape.sum(tape.square(a), axis=1))
    norm_b = tape.sqrt(tape.sum(tape.square(b), axis=1))
    return tape.div(dot, tape.add(tape.mul(norm_a, norm_b), eps))


def byol_loss_tape(tape: GradTape, p1: Var, z2: Var, p2: Var, z1: Var) -> Var:
    """Mean of 2 - 2 cos(p, z) over both view orderings."""
    forward = tape.mean(tape.sub(2.0, tape.scale(cosine_rows(tape, p1, z2), 2.0)))
    backward = tape.mean(tape.sub(2.0, tape.scale(cosine_rows(tape, p2, z1), 2.0)))
    return tape.scale(tape.add(forward, backward), 0.5)


def byol_loss(p1: Matrix, z2: Matrix, p2: Matrix, z1: Matrix) -> float:
    tape = GradTape()
    return byol_loss_tape(tape, *(tape.const(m) for m in (p1, z2, p2, z1))).item()


def infonce_loss_tape(tape: GradTape, z1: Var, z2: Var, temperature: float) -> Var:
    """
    Cross-entropy of cosine-similarity logits / temperature with positives on
    the diagonal, averaged over both directions.
    """
    n = z1.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"InfoNCE needs a batch of at least 2, got {n}")
    logits = tape.scale(
        tape.matmul(tape.row_normalize(z1, COSINE_EPS), tape.transpose(tape.row_normalize(z2, COSINE_EPS))),
        1.0 / temperature,
    )
    diagonal = tape.mul(logits, np.eye(n))
    row_loss = tape.sub(tape.logsumexp(logits, axis=1), tape.sum(diagonal, axis=1, keepdims=True))
    col_loss = tape.sub(tape.logsumexp(logits, axis=0), tape.sum(diagonal, axis=0, keepdims=True))
    return tape.scale(tape.add(tape.mean(row_loss), tape.mean(col_loss)), 0.5)


def infonce_loss(z1: Matrix, z2: Matrix, temperature: float) -> float:
    tape = GradTape()
    return infonce_loss_tape(tape, tape.const(z1), tape.const(z2), temperature).item()


def vicreg_loss_tape(tape: GradTape, z1: Var, z2: Var, reg: RegularizerConfig) -> Var:
    """25 * invariance MSE + 25 * mean variance hinge + 1 * covariance / D."""
    d = z1.shape[1]
    invariance = tape.mean(tape.square(tape.sub(z1, z2)))
    variance = tape.scale(
        tape.add(
            vicreg_variance_loss_tape(tape, z1, reg.vicreg_threshold, reg.vicreg_epsilon, reg.cov_divisor),
            vicreg_variance_loss_tape(tape, z2, reg.vicreg_threshold, reg.vicreg_epsilon, reg.cov_divisor),
        ),
        0.5,
    )
    covariance = tape.scale(
        tape.add(
            vicreg_covariance_loss_tape(tape, z1, reg.cov_divisor),
            vicreg_covariance_loss_tape(tape, z2, reg.cov_divisor),
        ),
        1.0 / d,
    )
    return tape.add(
        tape.add(tape.scale(invariance, VICREG_SIM_WEIGHT), tape.scale(variance, VICREG_VAR_WEIGHT)),
        tape.scale(covariance, VICREG_COV_WEIGHT),
    )


def whitening_terms_tape(tape: GradTape, h1: Var, h2: Var, reg: RegularizerConfig) -> Var:
    """Feature whitening averaged over the two views."""

    def one_view(h: Var) -> Var:
        var = vicreg_variance_loss_tape(tape, h, reg.vicreg_threshold, reg.vicreg_epsilon, reg.cov_divisor)
        cov = vicreg_covariance_loss_tape(tape, h, reg.cov_divisor)
        return tape.add(tape.scale(var, reg.vicreg_gamma), tape.scale(cov, reg.vicreg_cov_gamma))

    return tape.scale(tape.add(one_view(h1), one_view(h2)), 0.5)


# ----- steps -----


def effective_regularizer(reg: RegularizerConfig) -> RegularizerConfig:
    """so/srip with gamma = 0 behave exactly like no regularizer."""
    if reg.kind in ("so", "srip") and not reg.applies_or:
        return reg.model_copy(update={"kind": "none", "gamma": 0.0})
    return reg


def _finish(
    tape: GradTape,
    state: DualNetState,
    bound: Dict[str, Var],
    o1: Embedding,
    o2: Embedding,
    loss_ssl: Var,
    reg: RegularizerConfig,
    step: int,
) -> StepResult:
    if reg.kind == "vicreg-whiten":
        loss_ssl = tape.add(
            loss_ssl,
            whitening_terms_tape(
                tape, o1.whitening_target(reg.whiten_target), o2.whitening_target(reg.whiten_target), reg
            ),
        )

    total = loss_ssl
    loss_or = 0.0
    gamma = 0.0
    if reg.applies_or:
        or_var = or_loss_tape(tape, state.encoder.weight_pairs(bound), reg, step)
        loss_or = or_var.item()
        gamma = reg.gamma
        total = tape.add(loss_ssl, tape.scale(or_var, gamma))

    names = list(bound)
    grads = tape.grad(total, [bound[name] for name in names])
    ssl_value = loss_ssl.item()
    return StepResult(
        loss_ssl=ssl_value,
        loss_or=loss_or,
        combined=combined_loss(ssl_value, loss_or, gamma),
        grads=dict(zip(names, grads)),
        tape=tape,
    )


def byol_views_step(state: DualNetState, v1: Matrix, v2: Matrix, cfg: TrainConfig, step: int = 0) -> StepResult:
    """
    BYOL step on two given views. Target projections are computed on their
    own tape and enter the online tape as named constants.
    """
    if not state.has_target or state.predictor is None:
        raise ValueError("BYOL needs a predictor and a target network")
    reg = effective_regularizer(cfg.regularizer)
    z1_target = state.target_embed(v1)
    z2_target = state.target_embed(v2)

    tape = GradTape()
    bound = state.bind_online(tape)
    o1 = state.online_forward(tape, v1, bound)
    o2 = state.online_forward(tape, v2, bound)
    t1 = tape.const(z1_target, name="target.view1")
    t2 = tape.const(z2_target, name="target.view2")
    loss = byol_loss_tape(tape, o1.prediction, t2, o2.prediction, t1)
    return _finish(tape, state, bound, o1, o2, loss, reg, step)


def infonce_views_step(state: DualNetState, v1: Matrix, v2: Matrix, cfg: TrainConfig, step: int = 0) -> StepResult:
    if v1.shape[0] < 2:
        raise InsufficientSamplesError(f"InfoNCE needs a batch of at least 2, got {v1.shape[0]}")
    reg = effective_regularizer(cfg.regularizer)
    tape = GradTape()
    bound = state.bind_online(tape)
    o1 = state.online_forward(tape, v1, bound)
    o2 = state.online_forward(tape, v2, bound)
    loss = infonce_loss_tape(tape, o1.embedding, o2.embedding, cfg.temperature)
    return _finish(tape, state, bound, o1, o2, loss, reg, step)


def vicreg_views_step(state: DualNetState, v1: Matrix, v2: Matrix, cfg: TrainConfig, step: int = 0) -> StepResult:
    reg = effective_regularizer(cfg.regularizer)
    tape = GradTape()
    bound = state.bind_online(tape)
    o1 = state.online_forward(tape, v1, bound)
    o2 = state.online_forward(tape, v2, bound)
    loss = vicreg_loss_tape(tape, o1.embedding, o2.embedding, cfg.regularizer)
    return _finish(tape, state, bound, o1, o2, loss, reg, step)


_VIEW_STEPS = {
    "byol": byol_views_step,
    "infonce": infonce_views_step,
    "vicreg": vicreg_views_step,
}


def views_step(state: DualNetState, v1: Matrix, v2: Matrix, cfg: TrainConfig, step: int = 0) -> StepResult:
    return _VIEW_STEPS[cfg.method](state, v1, v2, cfg, step)


def byol_step(
    state: DualNetState, batch: Matrix, cfg: TrainConfig, rng: np.random.Generator, step: int = 0
) -> StepResult:
    """Augment ``batch`` into two views and take the BYOL step."""
    v1, v2 = two_views(batch, rng, cfg.augmentation)
    return byol_views_step(state, v1, v2, cfg, step)


def infonce_step(
    state: DualNetState, batch: Matrix, cfg: TrainConfig, rng: np.random.Generator, step: int = 0
) -> StepResult:
    """
    Augment ``batch`` into two views and take the InfoNCE step.

    Raises:
        InsufficientSamplesError: Fewer than 2 rows (no negatives)
    """
    if np.asarray(batch).shape[0] < 2:
        raise InsufficientSamplesError("InfoNCE needs a batch of at least 2")
    v1, v2 = two_views(batch, rng, cfg.augmentation)
    return infonce_views_step(state, v1, v2, cfg, step)


def vicreg_step(
    state: DualNetState, batch: Matrix, cfg: TrainConfig, rng: np.random.Generator, step: int = 0
) -> StepResult:
    v1, v2 = two_views(batch, rng, cfg.augmentation)
    return vicreg_views_step(state, v1, v2, cfg, step)
