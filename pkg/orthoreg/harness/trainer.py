"""
Training loop: plain SGD on loss_ssl + gamma * loss_or, EMA target updates for
BYOL, per-epoch rank tracking on a held-out batch, and the final collapse
report and linear probe.
"""

from typing import List, Optional

import numpy as np
from cogents_core.utils import get_logger

from orthoreg.regularizers import combined_loss
from orthoreg.spectra import collapse_report
from orthoreg.spectra.eigenspectrum import NoPositiveEigenvalueError, effective_rank, normalized_eigenvalues
from orthoreg.tensor import Matrix

from .data import gen_synthetic, two_views
from .models import EpochRecord, StepRecord, TrainConfig, TrainLog
from .network import DualNetState, build_state, ema_update
from .objectives import effective_regularizer, views_step
from .probe import linear_probe

logger = get_logger(__name__)


class TrainingDivergedError(RuntimeError):
    """Raised on a non-finite loss or gradient; carries the log up to the last finite step."""

    def __init__(self, message: str, log: TrainLog):
        super().__init__(message)
        self.log = log


def representation_rank(representations: Matrix) -> Optional[float]:
    """Effective rank of a batch of representations, None when degenerate."""
    try:
        spectrum = normalized_eigenvalues(representations, source="representation")
        if spectrum.degenerate:
            return None
        return effective_rank(spectrum)
    except (NoPositiveEigenvalueError, ValueError, RuntimeError) as e:
        logger.warning(f"Representation rank unavailable: {e}")
        return None


class Trainer:
    """
    One deterministic training run.

    The first ``batch_size`` rows of the dataset form the held-out batch used
    for per-epoch ranks and the final feature spectra; SGD runs on the rest.
    Each epoch shuffles the training rows and splits them into
    ``max(1, n_train // batch_size)`` near-equal batches.
    """

    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.regularizer = effective_regularizer(cfg.regularizer)
        self.features, self.labels = gen_synthetic(cfg.data, cfg.seed)
        self.eval_batch = self.features[: cfg.batch_size]
        self.train_rows = self.features[cfg.batch_size :]
        self.state: DualNetState = build_state(cfg)
        self.rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
        self.log = TrainLog(
            method=cfg.method,
            regularizer=self.regularizer.kind,
            gamma=self.regularizer.gamma if self.regularizer.applies_or else 0.0,
            seed=cfg.seed,
        )
        self.step = 0

    def _batches(self) -> List[np.ndarray]:
        n_train = self.train_rows.shape[0]
        order = self.rng.permutation(n_train)
        return np.array_split(order, max(1, n_train // self.cfg.batch_size))

    def _diverged(self, epoch: int) -> TrainingDivergedError:
        self.log.diverged = True
        message = f"Training diverged at epoch {epoch}, step {self.step}: non-finite loss or gradient"
        logger.error(message)
        return TrainingDivergedError(message, self.log.model_copy(deep=True))

    def run_epoch(self, epoch: int) -> EpochRecord:
        cfg = self.cfg
        ssl, orth = [], []
        for index in self._batches():
            v1, v2 = two_views(self.train_rows[index], self.rng, cfg.augmentation)
            result = views_step(self.state, v1, v2, cfg, self.step)
            if not result.finite:
                raise self._diverged(epoch)
            self.state.apply_update(result.grads, cfg.lr)
            if self.state.has_target:
                ema_update(self.state, cfg.ema_tau)
            self.log.steps.append(
                StepRecord(
                    step=self.step,
                    epoch=epoch,
                    loss_ssl=result.loss_ssl,
                    loss_or=result.loss_or,
                    combined=result.combined,
                )
            )
            if cfg.debug:
                logger.debug(f"step {self.step}: ssl={result.loss_ssl:.6f} or={result.loss_or:.6f}")
            ssl.append(result.loss_ssl)
            orth.append(result.loss_or)
            self.step += 1

        mean_ssl = float(np.mean(ssl))
        mean_or = float(np.mean(orth))
        record = EpochRecord(
            epoch=epoch,
            loss_ssl=mean_ssl,
            loss_or=mean_or,
            combined=combined_loss(mean_ssl, mean_or, self.log.gamma),
            effective_rank=representation_rank(self.state.represent(self.eval_batch)),
        )
        if not np.isfinite(record.combined):
            raise self._diverged(epoch)
        return record

    def run(self) -> TrainLog:
        cfg = self.cfg
        logger.info(
            f"Training {cfg.method} with regularizer={self.log.regularizer} (gamma={self.log.gamma:g}), "
            f"seed={cfg.seed}, {cfg.epochs} epochs"
        )
        for epoch in range(cfg.epochs):
            record = self.run_epoch(epoch)
            self.log.epochs.append(record)
            rank = "n/a" if record.effective_rank is None else f"{record.effective_rank:.3f}"
            logger.info(
                f"epoch {epoch + 1}/{cfg.epochs}: ssl={record.loss_ssl:.6f} or={record.loss_or:.6f} "
                f"combined={record.combined:.6f} erank={rank}"
            )

        self.log.report = collapse_report(
            self.state.encoder.layer_specs(), self.state.feature_stages(self.eval_batch), cfg.spectra
        )
        self.log.probe = linear_probe(self.state.represent(self.features), self.labels, cfg.probe, cfg.seed)
        logger.info(f"Finished training: {self.log.summary()}")
        return self.log


def train(cfg: TrainConfig) -> TrainLog:
    """
    Run a full training and return its log.

    Raises:
        TrainingDivergedError: A loss or gradient became non-finite
    """
    return Trainer(cfg).run()
