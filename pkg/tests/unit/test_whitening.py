import numpy as np
import pytest

from orthoreg.regularizers import (
    vicreg_covariance_loss,
    vicreg_covariance_loss_tape,
    vicreg_variance_loss,
    vicreg_variance_loss_tape,
)
from orthoreg.tensor import InsufficientSamplesError, tape_grad


@pytest.mark.unit
def test_variance_loss_zero_when_spread_is_large():
    """Test the hinge is inactive once every std exceeds the threshold."""
    rng = np.random.default_rng(0)
    h = 5.0 * rng.standard_normal((200, 4))
    assert vicreg_variance_loss(h) == 0.0


@pytest.mark.unit
def test_variance_loss_of_constant_features():
    """Test collapsed features pay threshold - sqrt(eps) per dimension."""
    h = np.ones((10, 3))
    assert vicreg_variance_loss(h, threshold=1.0, epsilon=1e-4) == pytest.approx(1.0 - 1e-2)


@pytest.mark.unit
def test_variance_loss_divisor():
    """Test the n-1 and n conventions on a two-point column."""
    h = np.array([[0.0], [1.0]])
    # var = 0.5 (n-1) or 0.25 (n)
    assert vicreg_variance_loss(h, epsilon=1e-12) == pytest.approx(1.0 - np.sqrt(0.5))
    assert vicreg_variance_loss(h, epsilon=1e-12, divisor="n") == pytest.approx(0.5)


@pytest.mark.unit
def test_covariance_loss_of_indicator_columns():
    """Test orthogonal zero-mean indicator columns have zero covariance."""
    h = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    assert vicreg_covariance_loss(h) == pytest.approx(0.0, abs=1e-24)


@pytest.mark.unit
def test_covariance_loss_counts_both_off_diagonals():
    """Test Cov(z1, z2) = c gives 2 c^2."""
    h = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, 1.0], [-1.0, -1.0]])
    c = np.cov(h, rowvar=False)[0, 1]
    assert vicreg_covariance_loss(h) == pytest.approx(2.0 * c * c)


@pytest.mark.unit
def test_whitening_terms_need_two_samples():
    """Test that a single row is rejected."""
    with pytest.raises(InsufficientSamplesError):
        vicreg_variance_loss(np.ones((1, 3)))
    with pytest.raises(InsufficientSamplesError):
        vicreg_covariance_loss(np.ones((1, 3)))


@pytest.mark.unit
@pytest.mark.parametrize("divisor", ["n-1", "n"])
def test_whitening_gradients_match_finite_differences(divisor):
    """Test both tape gradients against central differences."""
    rng = np.random.default_rng(1)
    h0 = 0.3 * rng.standard_normal((7, 3))
    (g_var,) = tape_grad(lambda tape, h: vicreg_variance_loss_tape(tape, h, divisor=divisor), [h0])
    (g_cov,) = tape_grad(lambda tape, h: vicreg_covariance_loss_tape(tape, h, divisor=divisor), [h0])
    step = 1e-6
    for index in [(0, 0), (3, 1), (6, 2)]:
        plus, minus = h0.copy(), h0.copy()
        plus[index] += step
        minus[index] -= step
        num_var = (vicreg_variance_loss(plus, divisor=divisor) - vicreg_variance_loss(minus, divisor=divisor)) / (
            2 * step
        )
        num_cov = (vicreg_covariance_loss(plus, divisor) - vicreg_covariance_loss(minus, divisor)) / (2 * step)
        assert g_var[index] == pytest.approx(num_var, rel=1e-5, abs=1e-8)
        assert g_cov[index] == pytest.approx(num_cov, rel=1e-5, abs=1e-8)


@pytest.mark.unit
def test_whitening_terms_ignore_row_order():
    """Test both terms depend on the set of samples, not their order."""
    rng = np.random.default_rng(2)
    for _ in range(20):
        h = 0.5 * rng.standard_normal((int(rng.integers(2, 30)), int(rng.integers(1, 6))))
        shuffled = h[rng.permutation(h.shape[0])]
        assert vicreg_variance_loss(shuffled) == pytest.approx(vicreg_variance_loss(h), rel=1e-12, abs=1e-15)
        assert vicreg_covariance_loss(shuffled) == pytest.approx(vicreg_covariance_loss(h), rel=1e-12, abs=1e-15)
