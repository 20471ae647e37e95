import numpy as np
import pytest

from orthoreg.harness import AugmentConfig, DataConfig, augment, gen_synthetic, two_views


@pytest.mark.unit
def test_gen_synthetic_shapes_and_balance():
    """Test dataset shape and cluster sizes differing by at most one."""
    x, y = gen_synthetic(DataConfig(n_samples=103, dim=7, n_clusters=4), seed=0)
    assert x.shape == (103, 7)
    assert y.shape == (103,)
    counts = np.bincount(y, minlength=4)
    assert counts.max() - counts.min() <= 1
    assert set(np.unique(y)) == {0, 1, 2, 3}


@pytest.mark.unit
def test_gen_synthetic_is_deterministic():
    """Test equal seeds give bit-identical datasets and different seeds do not."""
    cfg = DataConfig(n_samples=50, dim=5)
    x1, y1 = gen_synthetic(cfg, seed=3)
    x2, y2 = gen_synthetic(cfg, seed=3)
    x3, _ = gen_synthetic(cfg, seed=4)
    assert x1.tobytes() == x2.tobytes()
    np.testing.assert_array_equal(y1, y2)
    assert not np.array_equal(x1, x3)


@pytest.mark.unit
def test_zero_std_puts_points_on_centers():
    """Test that cluster_std = 0 collapses each cluster onto its center in [-3, 3]^dim."""
    x, y = gen_synthetic(DataConfig(n_samples=40, dim=3, n_clusters=2, cluster_std=0.0), seed=1)
    for label in (0, 1):
        members = x[y == label]
        np.testing.assert_array_equal(members, np.repeat(members[:1], len(members), axis=0))
    assert np.all(np.abs(x) <= 3.0)


@pytest.mark.unit
def test_data_config_validation():
    """Test that a single cluster is rejected."""
    with pytest.raises(ValueError):
        DataConfig(n_clusters=1)


@pytest.mark.unit
def test_augment_identity_when_disabled():
    """Test no noise and no masking returns the input."""
    x = np.random.default_rng(0).standard_normal((5, 4))
    out = augment(x, np.random.default_rng(1), AugmentConfig(noise_std=0.0, mask_prob=0.0))
    np.testing.assert_array_equal(out, x)


@pytest.mark.unit
def test_augment_full_mask():
    """Test mask_prob = 1 zeroes every coordinate."""
    x = np.ones((3, 4))
    out = augment(x, np.random.default_rng(1), AugmentConfig(noise_std=0.5, mask_prob=1.0))
    np.testing.assert_array_equal(out, np.zeros((3, 4)))


@pytest.mark.unit
@pytest.mark.parametrize("mask_prob", [0.2, 0.5])
def test_augment_mask_rate(mask_prob):
    """Test the masked share of 10^5 coordinates is within 0.01 of mask_prob."""
    out = augment(np.ones((100, 1000)), np.random.default_rng(7), AugmentConfig(noise_std=0.0, mask_prob=mask_prob))
    assert abs(float(np.mean(out == 0.0)) - mask_prob) <= 0.01


@pytest.mark.unit
def test_two_views_differ_but_are_reproducible():
    """Test the two views are independent draws from one generator."""
    x = np.zeros((6, 3))
    cfg = AugmentConfig(noise_std=1.0, mask_prob=0.0)
    v1, v2 = two_views(x, np.random.default_rng(5), cfg)
    w1, w2 = two_views(x, np.random.default_rng(5), cfg)
    assert not np.array_equal(v1, v2)
    np.testing.assert_array_equal(v1, w1)
    np.testing.assert_array_equal(v2, w2)
