import logging

import numpy as np
import pytest

from orthoreg.regularizers import (
    LayerKind,
    LayerSpec,
    RegularizerConfig,
    combined_loss,
    gram_residual,
    or_loss,
    or_loss_tape,
    so_grad,
    so_loss,
    srip_grad,
    srip_loss,
    srip_loss_tape,
    srip_seed,
)
from orthoreg.spectra import sample_orthogonal
from orthoreg.tensor import DimensionError, GradTape, conv_reshape, power_iter_specnorm


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.mark.unit
def test_gram_residual_picks_smaller_gram(rng):
    """Test that tall weights use W^T W and wide weights use W W^T."""
    assert gram_residual(rng.standard_normal((5, 3))).shape == (3, 3)
    assert gram_residual(rng.standard_normal((3, 5))).shape == (3, 3)
    assert gram_residual(rng.standard_normal((4, 4))).shape == (4, 4)


@pytest.mark.unit
def test_so_loss_of_scaled_identity():
    """Test ||(2I)^T (2I) - I||_F^2 = 2 * 3^2."""
    assert so_loss(2.0 * np.eye(2)) == pytest.approx(18.0)


@pytest.mark.unit
@pytest.mark.parametrize("shape", [(4, 4), (6, 3), (3, 6)])
def test_penalties_vanish_on_orthogonal_weights(rng, shape):
    """Test SO and SRIP are ~0 for orthonormal rows or columns."""
    rows, cols = shape
    q = sample_orthogonal(max(shape), min(shape), rng)
    w = q if rows >= cols else q.T
    assert so_loss(w) == pytest.approx(0.0, abs=1e-20)
    assert srip_loss(w, seed=1) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.unit
def test_so_loss_ignores_conv_row_order():
    """Test permuting the rows of a reshaped filter leaves SO unchanged to the last bit."""
    rng = np.random.default_rng(9)
    for _ in range(200):
        m = conv_reshape(rng.standard_normal((3, 2, 2, 2)))
        reference = so_loss(m)
        for _ in range(20):
            assert so_loss(m[rng.permutation(m.shape[0])]) == reference


@pytest.mark.unit
def test_so_loss_of_transpose(rng):
    """Test SO picks the same Gram matrix for W and W^T."""
    for shape in [(5, 3), (3, 7), (2, 9)]:
        w = rng.standard_normal(shape)
        assert so_loss(w.T) == so_loss(w)
    square = rng.standard_normal((4, 4))
    assert so_loss(square.T) == pytest.approx(so_loss(square), rel=1e-12)


@pytest.mark.unit
def test_gradient_descent_on_so_reaches_orthogonality(rng):
    """Test 200 plain gradient steps on SO never raise it and end near 0."""
    w = rng.standard_normal((6, 4)) / np.sqrt(6)
    losses = [so_loss(w)]
    for _ in range(200):
        w = w - 0.01 * so_grad(w)
        losses.append(so_loss(w))
    assert all(b <= a + 1e-15 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-2 * losses[0]


@pytest.mark.unit
def test_so_loss_of_tall_weight():
    """Test W = [[1,0],[0,1],[1,0]]: W^T W - I = diag(1, 0)."""
    assert so_loss(np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)


@pytest.mark.unit
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_srip_of_diag_two_one(seed):
    """Test SRIP on diag(2, 1): the residual diag(3, 0) is rank one, so the estimate is exact."""
    assert srip_loss(np.diag([2.0, 1.0]), seed=seed) == pytest.approx(3.0, abs=1e-9)


@pytest.mark.unit
def test_srip_ignores_start_vector_sign(rng):
    """Test v0 and -v0 give the same spectral norm estimate."""
    for _ in range(20):
        r = gram_residual(rng.standard_normal((5, 3)))
        v0 = rng.standard_normal(3)
        assert power_iter_specnorm(r, v0=-v0) == power_iter_specnorm(r, v0=v0)


@pytest.mark.unit
def test_srip_tape_matches_value():
    """Test the taped SRIP equals the plain estimate for the same seed."""
    w = np.diag([3.0, 0.5])
    tape = GradTape()
    value = srip_loss_tape(tape, tape.param(w), seed=3).item()
    assert value == pytest.approx(srip_loss(w, seed=3))
    assert value <= 8.0 + 1e-12


@pytest.mark.unit
def test_so_grad_matches_closed_form(rng):
    """Test 4 W (W^T W - I) for a tall weight."""
    w = rng.standard_normal((5, 3))
    expected = 4.0 * w @ (w.T @ w - np.eye(3))
    np.testing.assert_allclose(so_grad(w), expected)


@pytest.mark.unit
def test_srip_grad_finite_difference(rng):
    """Test the SRIP gradient with a fixed start vector."""
    w = rng.standard_normal((4, 3)) / 2.0
    seed = np.random.SeedSequence([5, 1, 0])
    g = srip_grad(w, seed)
    h = 1e-6
    for index in [(0, 0), (1, 2), (3, 1)]:
        plus, minus = w.copy(), w.copy()
        plus[index] += h
        minus[index] -= h
        numeric = (srip_loss(plus, seed) - srip_loss(minus, seed)) / (2 * h)
        assert g[index] == pytest.approx(numeric, rel=1e-4, abs=1e-7)


@pytest.mark.unit
def test_penalties_reject_empty_weight():
    """Test the non-empty 2-D contract."""
    with pytest.raises(DimensionError):
        so_loss(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        so_grad(np.zeros(3))


@pytest.mark.unit
def test_srip_seed_is_stable():
    """Test that the per-layer seed depends on (seed, step, layer) only."""
    a = np.random.default_rng(srip_seed(1, 2, 3)).standard_normal(4)
    b = np.random.default_rng(srip_seed(1, 2, 3)).standard_normal(4)
    c = np.random.default_rng(srip_seed(1, 2, 4)).standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


class TestOrLoss:
    """Encoder-wide orthogonality penalty."""

    @pytest.fixture
    def encoder(self, rng):
        return [
            LayerSpec.linear("fc0.weight", rng.standard_normal((6, 4))),
            LayerSpec.vector("fc0.bias", np.ones(4)),
            LayerSpec.conv("conv0.weight", rng.standard_normal((3, 2, 2, 2))),
            LayerSpec.vector("bn.scale", np.ones(3), kind=LayerKind.NORM),
        ]

    @pytest.mark.unit
    def test_so_sums_eligible_layers_only(self, encoder):
        """Test that biases and norm vectors are skipped."""
        cfg = RegularizerConfig(kind="so", gamma=0.1)
        expected = so_loss(encoder[0].weight) + so_loss(encoder[2].weight)
        assert or_loss(encoder, cfg) == pytest.approx(expected)

    @pytest.mark.unit
    def test_srip_indexes_layers_among_eligible(self, encoder):
        """Test that the n-th eligible layer uses seed (srip_seed, step, n)."""
        cfg = RegularizerConfig(kind="srip", gamma=0.1, srip_seed=4)
        expected = srip_loss(encoder[0].weight, srip_seed(4, 7, 0))
        expected += srip_loss(encoder[2].weight, srip_seed(4, 7, 1))
        assert or_loss(encoder, cfg, step=7) == pytest.approx(expected)

    @pytest.mark.unit
    def test_tape_matches_value(self, encoder):
        """Test that the taped penalty equals the plain one for both kinds."""
        for kind in ("so", "srip"):
            cfg = RegularizerConfig(kind=kind, gamma=0.1)
            tape = GradTape()
            pairs = [(layer, tape.param(layer.weight)) for layer in encoder]
            assert or_loss_tape(tape, pairs, cfg, step=2).item() == pytest.approx(or_loss(encoder, cfg, step=2))

    @pytest.mark.unit
    def test_no_eligible_layers_warns_and_returns_zero(self, caplog):
        """Test the empty-encoder edge case."""
        cfg = RegularizerConfig(kind="so", gamma=0.1)
        with caplog.at_level(logging.WARNING):
            assert or_loss([LayerSpec.vector("b", np.ones(3))], cfg) == 0.0

    @pytest.mark.unit
    def test_requires_or_kind(self, encoder):
        """Test that none/vicreg-whiten have no orthogonality loss."""
        with pytest.raises(ValueError):
            or_loss(encoder, RegularizerConfig(kind="none"))


class TestRegularizerConfig:
    @pytest.mark.unit
    def test_default_recipe(self):
        """Test that gamma comes from the default backbone recipe."""
        assert RegularizerConfig(kind="so").gamma == pytest.approx(1e-6)
        assert RegularizerConfig(kind="srip").gamma == pytest.approx(1e-3)
        assert RegularizerConfig(kind="none").gamma == 0.0

    @pytest.mark.unit
    def test_named_preset(self):
        """Test a named preset and a preset without the requested kind."""
        assert RegularizerConfig(kind="srip", gamma_preset="wideresnet28w2").gamma == pytest.approx(1e-4)
        with pytest.raises(ValueError):
            RegularizerConfig(kind="srip", gamma_preset="vit-base")
        with pytest.raises(ValueError):
            RegularizerConfig(kind="so", gamma_preset="resnet1000")

    @pytest.mark.unit
    def test_negative_gamma_rejected(self):
        """Test gamma >= 0."""
        with pytest.raises(ValueError):
            RegularizerConfig(kind="so", gamma=-1.0)

    @pytest.mark.unit
    def test_applies_or(self):
        """Test that gamma = 0 disables the orthogonality term."""
        assert RegularizerConfig(kind="so", gamma=0.1).applies_or
        assert not RegularizerConfig(kind="so", gamma=0.0).applies_or
        assert not RegularizerConfig(kind="vicreg-whiten").applies_or

    @pytest.mark.unit
    def test_covariance_weight_ratio(self):
        """Test the covariance weight follows the variance weight."""
        assert RegularizerConfig(vicreg_gamma=2.0).vicreg_cov_gamma == pytest.approx(0.008)


@pytest.mark.unit
def test_combined_loss():
    """Test Loss = Loss_SSL + gamma * Loss_OR."""
    assert combined_loss(1.5, 2.0, 0.25) == pytest.approx(2.0)
    assert combined_loss(1.5, 2.0, 0.0) == 1.5
    with pytest.raises(ValueError):
        combined_loss(1.0, 1.0, -0.1)
