import numpy as np
import pytest

from retarget import ImportanceMap, RasterImage


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


def random_image(rng, width, height):
    px = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    return RasterImage(px)


def random_map(rng, width, height):
    return ImportanceMap(rng.random((height, width)))
