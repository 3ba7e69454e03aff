import numpy as np
import pytest

from gotcha.config import TrainConfig
from gotcha.gallery import Gallery, gen_synthetic


@pytest.fixture
def tiny_gallery():
    return gen_synthetic(24, 6, 6, noise=0.05, seed=101)


@pytest.fixture
def small_gallery():
    return gen_synthetic(120, 40, 32, noise=0.05, seed=7)


@pytest.fixture
def desk_config():
    return TrainConfig(epochs=1, episodes_per_epoch=16, seed=0)


def make_gallery(ids, attributes, features) -> Gallery:
    return Gallery(
        ids=list(ids),
        attributes=np.asarray(attributes, dtype=np.int8),
        features=np.asarray(features, dtype=np.float32),
    )
