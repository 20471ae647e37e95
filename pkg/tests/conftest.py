"""
Shared fixtures: small, fast run configurations.
"""

import pytest

from orthoreg.harness import TrainConfig


def small_config(**overrides) -> TrainConfig:
    """A few-second training run on a 6-dimensional, 3-cluster mixture."""
    base = {
        "seed": 0,
        "method": "byol",
        "data": {"n_samples": 120, "dim": 6, "n_clusters": 3},
        "dims": {"hidden": [8], "repr": 5, "proj": 4, "proj_hidden": 8},
        "epochs": 2,
        "batch_size": 32,
        "probe": {"epochs": 30},
    }
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key] = {**base[key], **value}
        else:
            base[key] = value
    return TrainConfig.model_validate(base)


@pytest.fixture
def make_config():
    return small_config
