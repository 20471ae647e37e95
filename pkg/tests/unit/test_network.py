import numpy as np
import pytest

from orthoreg.harness import build_state, ema_update
from orthoreg.regularizers import LayerKind
from orthoreg.tensor import GradTape


class TestNetworks:
    @pytest.mark.unit
    def test_byol_state_has_predictor_and_target(self, make_config):
        """Test that BYOL builds a predictor and an EMA target of encoder + projector."""
        state = build_state(make_config(method="byol"))
        assert state.predictor is not None
        assert state.has_target
        assert len(state.target_pairs()) == 2
        assert state.target_encoder.params.keys() == state.encoder.params.keys()

    @pytest.mark.unit
    @pytest.mark.parametrize("method", ["infonce", "vicreg"])
    def test_symmetric_methods_have_no_target(self, make_config, method):
        """Test InfoNCE and VICReg train a single network."""
        state = build_state(make_config(method=method))
        assert state.predictor is None
        assert not state.has_target

    @pytest.mark.unit
    def test_init_is_seeded(self, make_config):
        """Test identical seeds give identical weights."""
        a = build_state(make_config(seed=3))
        b = build_state(make_config(seed=3))
        c = build_state(make_config(seed=4))
        for key, value in a.online_params().items():
            np.testing.assert_array_equal(value, b.online_params()[key])
        assert not np.array_equal(a.encoder.params["encoder.fc0.weight"], c.encoder.params["encoder.fc0.weight"])

    @pytest.mark.unit
    def test_layer_specs(self, make_config):
        """Test encoder weights are linear input x output, biases are bias vectors."""
        state = build_state(make_config(dims={"hidden": [8, 7]}))
        specs = state.encoder.layer_specs()
        assert [s.name for s in specs] == [
            "encoder.fc0.weight",
            "encoder.fc0.bias",
            "encoder.fc1.weight",
            "encoder.fc1.bias",
            "encoder.fc2.weight",
            "encoder.fc2.bias",
        ]
        assert [s.kind for s in specs[::2]] == [LayerKind.LINEAR] * 3
        assert [s.kind for s in specs[1::2]] == [LayerKind.BIAS] * 3
        assert specs[0].weight.shape == (6, 8)
        assert specs[4].weight.shape == (7, 5)
        assert state.encoder.deepest_weight() == "encoder.fc2.weight"

    @pytest.mark.unit
    def test_conv_encoder(self, make_config):
        """Test a conv-led encoder reads each sample as an image."""
        cfg = make_config(data={"dim": 20}, conv={"enabled": True, "height": 4, "width": 5, "out_channels": 3})
        state = build_state(cfg)
        specs = state.encoder.layer_specs()
        assert specs[0].kind == LayerKind.CONV
        assert specs[0].shape == (3, 1, 2, 2)
        assert specs[0].weight.shape == (4, 3)
        reps = state.represent(np.random.default_rng(0).standard_normal((7, 20)))
        assert reps.shape == (7, 5)

    @pytest.mark.unit
    def test_conv_geometry_must_match_data(self, make_config):
        """Test that the image size has to equal the data dimension."""
        with pytest.raises(ValueError):
            make_config(conv={"enabled": True, "height": 4, "width": 5})

    @pytest.mark.unit
    def test_feature_stages(self, make_config):
        """Test the input, one stage per encoder layer, then projector and predictor."""
        state = build_state(make_config())
        stages = state.feature_stages(np.random.default_rng(0).standard_normal((10, 6)))
        assert [name for name, _ in stages] == ["input", "encoder.fc0", "encoder.fc1", "projector", "predictor"]
        assert stages[0][1].shape == (10, 6)
        assert stages[-1][1].shape == (10, 4)

    @pytest.mark.unit
    def test_no_projector(self, make_config):
        """Test proj = None feeds representations straight to the loss."""
        state = build_state(make_config(method="vicreg", dims={"proj": None}))
        assert state.projector is None
        assert [name for name, _ in state.feature_stages(np.zeros((4, 6)))] == ["input", "encoder.fc0", "encoder.fc1"]

    @pytest.mark.unit
    def test_whitening_targets(self, make_config):
        """Test each whitening target selects the matching output."""
        state = build_state(make_config())
        tape = GradTape()
        emb = state.online_forward(tape, np.random.default_rng(1).standard_normal((5, 6)), state.bind_online(tape))
        assert emb.whitening_target("representation") is emb.representation
        assert emb.whitening_target("projector") is emb.projection
        assert emb.whitening_target("predictor") is emb.prediction


class TestEmaUpdate:
    @pytest.mark.unit
    def test_tau_zero_copies_online(self, make_config):
        """Test tau = 0 makes the target equal the online network."""
        state = build_state(make_config())
        ema_update(state, 0.0)
        for key, value in state.encoder.params.items():
            np.testing.assert_array_equal(state.target_encoder.params[key], value)

    @pytest.mark.unit
    def test_convex_combination(self, make_config):
        """Test target <- tau * target + (1 - tau) * online."""
        state = build_state(make_config())
        key = "encoder.fc0.weight"
        before = state.target_encoder.params[key].copy()
        online = state.encoder.params[key].copy()
        ema_update(state, 0.9)
        np.testing.assert_allclose(state.target_encoder.params[key], 0.9 * before + 0.1 * online)
        np.testing.assert_array_equal(state.encoder.params[key], online)

    @pytest.mark.unit
    def test_fixed_point(self, make_config):
        """Test that a target equal to the online network stays put."""
        state = build_state(make_config())
        ema_update(state, 0.0)
        ema_update(state, 0.99)
        for key, value in state.encoder.params.items():
            np.testing.assert_allclose(state.target_encoder.params[key], value, rtol=0, atol=1e-15)

    @pytest.mark.unit
    @pytest.mark.parametrize("tau", [-0.1, 1.0, 1.5])
    def test_rejects_out_of_range_tau(self, make_config, tau):
        """Test tau in [0, 1)."""
        with pytest.raises(ValueError):
            ema_update(build_state(make_config()), tau)
