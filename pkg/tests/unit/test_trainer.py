import numpy as np
import pytest

from orthoreg.harness import Trainer, TrainingDivergedError, representation_rank, train
from orthoreg.harness import trainer as trainer_module


class TestTrainer:
    @pytest.mark.unit
    def test_log_structure(self, make_config):
        """Test step and epoch records, the collapse report and the probe."""
        log = train(make_config())
        # 88 training rows in batches of 32 -> 2 steps per epoch
        assert len(log.steps) == 4
        assert [s.step for s in log.steps] == [0, 1, 2, 3]
        assert [e.epoch for e in log.epochs] == [0, 1]
        assert all(e.effective_rank is not None for e in log.epochs)
        assert not log.diverged

        assert [s.stage for s in log.report.weights()] == ["encoder.fc0.weight", "encoder.fc1.weight"]
        assert [s.stage for s in log.report.features()] == [
            "input",
            "encoder.fc0",
            "encoder.fc1",
            "projector",
            "predictor",
        ]
        assert log.probe is not None
        assert log.probe.n_train + log.probe.n_test == 120
        assert log.summary()["epochs"] == 2

    @pytest.mark.unit
    @pytest.mark.parametrize("method", ["byol", "infonce", "vicreg"])
    def test_same_seed_same_log(self, make_config, method):
        """Test that a run is a pure function of its configuration."""
        cfg = make_config(method=method, regularizer={"kind": "srip", "gamma": 0.1})
        first = train(cfg).model_dump_json()
        second = train(cfg).model_dump_json()
        assert first == second

    @pytest.mark.unit
    def test_different_seed_different_log(self, make_config):
        """Test the seed reaches data, init and augmentation."""
        assert train(make_config(seed=0)).steps[0].loss_ssl != train(make_config(seed=1)).steps[0].loss_ssl

    @pytest.mark.unit
    @pytest.mark.parametrize("kind", ["so", "srip"])
    def test_zero_gamma_is_bit_identical_to_none(self, make_config, kind):
        """Test gamma = 0 gives exactly the unregularized log."""
        plain = train(make_config(regularizer={"kind": "none"}))
        zero = train(make_config(regularizer={"kind": kind, "gamma": 0.0}))
        assert zero.model_dump_json() == plain.model_dump_json()

    @pytest.mark.unit
    def test_epoch_combined_decomposition(self, make_config):
        """Test epoch combined = mean ssl + gamma * mean or."""
        log = train(make_config(regularizer={"kind": "so", "gamma": 0.05}))
        assert log.regularizer == "so"
        assert log.gamma == 0.05
        for record in log.epochs:
            assert record.loss_or > 0.0
            assert record.combined == pytest.approx(record.loss_ssl + 0.05 * record.loss_or)
        for step in log.steps:
            assert step.combined == pytest.approx(step.loss_ssl + 0.05 * step.loss_or)

    @pytest.mark.unit
    def test_so_reduces_orthogonality_loss(self, make_config):
        """Test a strong SO weight drives the encoder towards orthogonality."""
        log = train(make_config(regularizer={"kind": "so", "gamma": 0.5}, epochs=6, lr=0.05))
        assert log.epochs[-1].loss_or < log.epochs[0].loss_or

    @pytest.mark.unit
    def test_divergence_stops_with_partial_log(self, make_config, monkeypatch):
        """Test a non-finite loss raises with the log up to the last finite step."""
        real_step = trainer_module.views_step

        def failing_step(state, v1, v2, cfg, step=0):
            result = real_step(state, v1, v2, cfg, step)
            if step == 2:
                return result.model_copy(update={"combined": float("nan")})
            return result

        monkeypatch.setattr(trainer_module, "views_step", failing_step)
        with pytest.raises(TrainingDivergedError) as excinfo:
            train(make_config())
        log = excinfo.value.log
        assert log.diverged
        assert len(log.steps) == 2
        assert len(log.epochs) == 1

    @pytest.mark.unit
    def test_held_out_batch(self, make_config):
        """Test the first batch_size rows are held out of training."""
        trainer = Trainer(make_config())
        assert trainer.eval_batch.shape == (32, 6)
        assert trainer.train_rows.shape == (88, 6)
        np.testing.assert_array_equal(trainer.eval_batch, trainer.features[:32])


@pytest.mark.unit
def test_representation_rank_degenerate():
    """Test collapsed representations have no rank instead of raising."""
    assert representation_rank(np.ones((10, 3))) is None
    rank = representation_rank(np.random.default_rng(0).standard_normal((50, 3)))
    assert 1.0 <= rank <= 3.0
