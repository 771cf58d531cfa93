"""
Forward and inverse camera ISP stages.

The forward ISP runs demosaic -> white balance -> colour correction -> gamma compression -> tone mapping.
Unprocessing inverts the last three stages to bring sRGB frames back to linear camera RGB.
"""
import logging

import numpy as np
from scipy import ndimage

from dualcam.Imaging.image_buffer import BayerImage, ColorSpace, ImageBuffer
from dualcam.Isp.isp_config import IspConfig

logger = logging.getLogger(__name__)

_RB_KERNEL = np.array([[1.0, 2.0, 1.0],
                       [2.0, 4.0, 2.0],
                       [1.0, 2.0, 1.0]])
_G_KERNEL = np.array([[0.0, 1.0, 0.0],
                      [1.0, 4.0, 1.0],
                      [0.0, 1.0, 0.0]])


def smoothstep(x: np.ndarray) -> np.ndarray:
    return 3.0 * x ** 2 - 2.0 * x ** 3


def inverse_smoothstep(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * x) / 3.0)


def srgb_to_linear(img: ImageBuffer, cfg: IspConfig) -> ImageBuffer:
    """
    Invert the tone map, then expand gamma.
    """
    img.require_space(ColorSpace.SRGB, 'srgb_to_linear')
    linear = inverse_smoothstep(img.data) ** cfg.gamma
    return img.with_data(linear, ColorSpace.LINEAR_RGB)


def linear_to_srgb(img: ImageBuffer, cfg: IspConfig) -> ImageBuffer:
    """
    Compress gamma, then apply the tone map. Exact inverse of srgb_to_linear on [0, 1].
    """
    img.require_space(ColorSpace.LINEAR_RGB, 'linear_to_srgb')
    compressed = np.clip(img.data, 0.0, 1.0) ** (1.0 / cfg.gamma)
    return img.with_data(smoothstep(compressed), ColorSpace.SRGB)


def apply_ccm(img: ImageBuffer, cfg: IspConfig, direction: str = 'forward') -> ImageBuffer:
    """
    Multiply every pixel by the CCM (forward) or by its inverse (inverse).
    """
    if img.channels != 3:
        raise ValueError(f"apply_ccm expects a 3-channel image, got {img.channels}.")
    matrix = cfg.ccm_matrix
    if direction == 'inverse':
        try:
            matrix = np.linalg.inv(matrix)
        except np.linalg.LinAlgError as e:
            raise ValueError(f"CCM is singular: {e}") from e
    elif direction != 'forward':
        raise ValueError(f"Unknown CCM direction '{direction}'.")
    return img.with_data(img.data @ matrix.T)


def invert_gain(x: np.ndarray, gain: float, threshold: float) -> np.ndarray:
    """
    Divide by `gain` while keeping highlights bright.

    Above `threshold` the effective inverse gain blends quadratically towards 1, so a saturated
    pixel stays saturated.
    """
    alpha = (np.maximum(x - threshold, 0.0) / (1.0 - threshold)) ** 2
    return x * (alpha + (1.0 - alpha) / gain)


def _check_gains(*gains: float) -> None:
    for gain in gains:
        if gain <= 0:
            raise ValueError(f"Gains must be positive, got {gain}.")


def apply_gains(img: ImageBuffer, red_gain: float, blue_gain: float,
                threshold: float = 0.9, direction: str = 'apply') -> ImageBuffer:
    """
    Apply (and clamp) or invert white-balance gains on the red and blue channels. Green is untouched.
    """
    _check_gains(red_gain, blue_gain)
    if img.channels != 3:
        raise ValueError(f"apply_gains expects a 3-channel image, got {img.channels}.")
    data = img.data.copy()
    for channel, gain in ((0, red_gain), (2, blue_gain)):
        if direction == 'apply':
            data[:, :, channel] = np.clip(data[:, :, channel] * gain, 0.0, 1.0)
        elif direction == 'invert':
            data[:, :, channel] = invert_gain(data[:, :, channel], gain, threshold)
        else:
            raise ValueError(f"Unknown gain direction '{direction}'.")
    return img.with_data(data)


def scale_exposure(img: ImageBuffer, ratio: float, threshold: float = 0.9,
                   direction: str = 'invert') -> ImageBuffer:
    """
    Under-expose (invert) all channels by `ratio` with the WB-inversion highlight blend,
    or re-expose (apply) them with clamping.
    """
    _check_gains(ratio)
    if direction == 'invert':
        return img.with_data(invert_gain(img.data, ratio, threshold))
    if direction == 'apply':
        return img.with_data(np.clip(img.data * ratio, 0.0, 1.0))
    raise ValueError(f"Unknown exposure direction '{direction}'.")


def _check_even(height: int, width: int, operation: str) -> None:
    if height % 2 or width % 2:
        raise ValueError(f"{operation} requires even dimensions, got {width}x{height}.")


def mosaic(img: ImageBuffer) -> BayerImage:
    """
    Sample an RGGB Bayer mosaic from a linear RGB image.
    """
    img.require_space(ColorSpace.LINEAR_RGB, 'mosaic')
    if img.channels != 3:
        raise ValueError(f"mosaic expects a 3-channel image, got {img.channels}.")
    _check_even(img.height, img.width, 'mosaic')

    rgb = img.data
    raw = np.empty((img.height, img.width))
    raw[0::2, 0::2] = rgb[0::2, 0::2, 0]
    raw[0::2, 1::2] = rgb[0::2, 1::2, 1]
    raw[1::2, 0::2] = rgb[1::2, 0::2, 1]
    raw[1::2, 1::2] = rgb[1::2, 1::2, 2]
    return BayerImage(raw)


def bayer_masks(height: int, width: int) -> np.ndarray:
    """
    H x W x 3 boolean masks of the red, green and blue sites of an RGGB mosaic.
    """
    masks = np.zeros((height, width, 3), dtype=bool)
    masks[0::2, 0::2, 0] = True
    masks[0::2, 1::2, 1] = True
    masks[1::2, 0::2, 1] = True
    masks[1::2, 1::2, 2] = True
    return masks


def demosaic(raw: BayerImage) -> ImageBuffer:
    """
    Bilinear demosaic with replicated edges.

    Each missing sample is the normalized weighted mean of the same-colour sites in its 3x3
    neighbourhood, which keeps constants exact up to the border.
    """
    _check_even(raw.height, raw.width, 'demosaic')
    masks = bayer_masks(raw.height, raw.width)
    rgb = np.empty((raw.height, raw.width, 3))
    for channel, kernel in enumerate((_RB_KERNEL, _G_KERNEL, _RB_KERNEL)):
        mask = masks[:, :, channel].astype(np.float64)
        numerator = ndimage.convolve(raw.data * mask, kernel, mode='nearest')
        denominator = ndimage.convolve(mask, kernel, mode='nearest')
        rgb[:, :, channel] = numerator / denominator
    return ImageBuffer(rgb, ColorSpace.LINEAR_RGB)


def run_isp(raw: BayerImage, cfg: IspConfig) -> ImageBuffer:
    """
    Process a raw mosaic into sRGB: demosaic -> white balance -> CCM -> gamma -> tone map.
    The raw is clamped to [0, 1] on entry, and so is the colour-corrected image before gamma.
    """
    rgb = demosaic(raw.with_data(np.clip(raw.data, 0.0, 1.0)))
    rgb = apply_gains(rgb, cfg.wb_red_gain, cfg.wb_blue_gain, cfg.saturation_threshold, 'apply')
    rgb = apply_ccm(rgb, cfg, 'forward')
    rgb = rgb.with_data(np.clip(rgb.data, 0.0, 1.0))
    return linear_to_srgb(rgb, cfg)


def unprocess(img: ImageBuffer, cfg: IspConfig) -> ImageBuffer:
    """
    sRGB -> linear camera RGB: inverse tone map, gamma expansion and inverse CCM, clamped to [0, 1].
    """
    linear = apply_ccm(srgb_to_linear(img, cfg), cfg, 'inverse')
    return linear.with_data(np.clip(linear.data, 0.0, 1.0))
