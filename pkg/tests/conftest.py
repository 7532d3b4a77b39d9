import numpy as np
import pytest


def smooth_image(seed: int, h: int = 64, w: int = 64) -> np.ndarray:
    """A mid-range random image with some spatial structure, in [0.1, 0.9]."""
    rng = np.random.default_rng(seed)
    img = rng.uniform(0.0, 1.0, (h, w))
    for _ in range(3):
        img = (img + np.roll(img, 1, 0) + np.roll(img, 1, 1) + np.roll(img, 2, 1)) / 4.0
    lo, hi = img.min(), img.max()
    return 0.1 + 0.8 * (img - lo) / (hi - lo)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
