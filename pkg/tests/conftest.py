import numpy as np
import pytest

from promptvox.cloud_io import PointCloud, SourceKind


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_cloud(rng, n, color_255_grid=True):
    """Random cloud in [0,1]^3. With color_255_grid, colors sit on the
    uint8 lattice so quantization is lossless."""
    positions = rng.random((n, 3))
    if color_255_grid:
        colors = rng.integers(0, 256, size=(n, 3)) / 255.0
    else:
        colors = rng.random((n, 3))
    return PointCloud(positions, colors, SourceKind.SYNTHETIC)


@pytest.fixture
def make_cloud(rng):
    def factory(n=50, **kwargs):
        return random_cloud(rng, n, **kwargs)

    return factory
