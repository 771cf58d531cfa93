import numpy as np
from scipy import ndimage

from dualcam.Flow.warp import warp_array
from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer


def smooth_texture(rng: np.random.Generator, height: int, width: int, channels: int = 3,
                   scales: tuple[float, ...] = (1.5, 6.0), low: float = 0.1, high: float = 0.8) -> np.ndarray:
    """
    Random colour texture: Gaussian-smoothed noise at several scales, rescaled to [low, high].
    """
    texture = np.zeros((height, width, channels))
    for scale in scales:
        noise = rng.standard_normal((height, width, channels))
        layer = ndimage.gaussian_filter(noise, sigma=(scale, scale, 0), mode='wrap')
        texture += layer / layer.std()
    texture -= texture.min()
    texture /= max(texture.max(), 1e-12)
    return low + (high - low) * texture


def moving_texture_sequence(rng: np.random.Generator, n_frames: int, height: int, width: int,
                            velocity: tuple[float, float] = (1.0, 0.5), margin: int = 16) -> list[ImageBuffer]:
    """
    Procedural sRGB sequence of a texture translating by `velocity` pixels per frame.

    The middle frame shows the texture unshifted, so the flow from it to frame k is
    velocity * (k - middle).
    """
    canvas = smooth_texture(rng, height + 2 * margin, width + 2 * margin)
    middle = n_frames // 2
    frames = []
    for k in range(n_frames):
        dx, dy = (velocity[0] * (k - middle), velocity[1] * (k - middle))
        shifted = warp_array(canvas, np.full(canvas.shape[:2], -dx), np.full(canvas.shape[:2], -dy))
        frames.append(ImageBuffer(shifted[margin:margin + height, margin:margin + width], ColorSpace.SRGB))
    return frames
