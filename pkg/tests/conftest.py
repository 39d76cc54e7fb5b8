import numpy as np
import pytest

from pedrecon import CameraIntrinsics, DisparityMap


@pytest.fixture
def camera() -> CameraIntrinsics:
    return CameraIntrinsics(fx=500.0, fy=500.0, cx=64.0, cy=48.0,
                            baseline=0.2, width=128, height=96)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def uniform_disparity(width: int, height: int, value: float) -> DisparityMap:
    return DisparityMap(np.full((height, width), value), np.ones((height, width), dtype=bool))
