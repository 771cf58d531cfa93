import numpy as np
import pytest

from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer
from dualcam.Noise.rng import make_rng
from dualcam.Synthesizer.scenes import moving_texture_sequence, smooth_texture


@pytest.fixture
def rng() -> np.random.Generator:
    return make_rng(1234)


@pytest.fixture
def texture() -> ImageBuffer:
    """64x64 sRGB smooth colour texture."""
    return ImageBuffer(smooth_texture(make_rng(7), 64, 64), ColorSpace.SRGB)


@pytest.fixture
def large_texture() -> ImageBuffer:
    """256x256 sRGB texture with enough detail for flow estimation."""
    return ImageBuffer(smooth_texture(make_rng(11), 256, 256, scales=(1.5, 3.0, 6.0)), ColorSpace.SRGB)


@pytest.fixture
def moving_sequence():
    def build(n_frames: int = 9, size: int = 64, velocity=(1.0, 0.5), seed: int = 3):
        return moving_texture_sequence(make_rng(seed), n_frames, size, size, velocity)
    return build
