import logging
import os

import cv2
import numpy as np

from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer

logger = logging.getLogger(__name__)

_DTYPES = {8: np.uint8, 16: np.uint16}


def load_image(path: str, space: ColorSpace = ColorSpace.SRGB) -> ImageBuffer:
    """
    Load an 8 or 16-bit grayscale/RGB PNG into an ImageBuffer with intensities in [0, 1].

    :param path: Path to the PNG file.
    :param space: Colour-space tag of the returned buffer.
    :raises FileNotFoundError: If the file does not exist.
    :raises ValueError: If the file cannot be decoded or has an unsupported depth or channel count.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Image file not found: {path}")

    raw = cv2.imread(path, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError(f"Unreadable image file: {path}")

    if raw.dtype == np.uint8:
        depth = 8
    elif raw.dtype == np.uint16:
        depth = 16
    else:
        raise ValueError(f"Unsupported bit depth ({raw.dtype}) in {path}; expected 8 or 16-bit PNG.")

    if raw.ndim == 3 and raw.shape[2] == 3:
        raw = cv2.cvtColor(raw, cv2.COLOR_BGR2RGB)
    elif raw.ndim != 2:
        raise ValueError(f"Unsupported channel layout {raw.shape} in {path}; expected grayscale or RGB.")

    data = raw.astype(np.float64) / (2 ** depth - 1)
    return ImageBuffer(data, space)


def quantize(data: np.ndarray, depth: int) -> np.ndarray:
    """
    Clamp to [0, 1] and quantize with round-half-away-from-zero.
    """
    if depth not in _DTYPES:
        raise ValueError(f"Unsupported bit depth {depth}; expected 8 or 16.")
    scale = 2 ** depth - 1
    # Values are non-negative after clamping, so floor(x + 0.5) rounds half away from zero.
    levels = np.floor(np.clip(data, 0.0, 1.0) * scale + 0.5)
    return levels.astype(_DTYPES[depth])


def save_image(img: ImageBuffer, path: str, depth: int = 16) -> None:
    """
    Write an ImageBuffer as a PNG. Out-of-range values are clamped, never wrapped.

    :raises OSError: If the file cannot be written.
    """
    out = quantize(img.data, depth)
    if img.channels == 1:
        out = out[:, :, 0]
    else:
        out = cv2.cvtColor(out, cv2.COLOR_RGB2BGR)

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if not cv2.imwrite(path, out):
        raise OSError(f"Could not write image to {path}")
    logger.debug(f"[Imaging] Saved {img!r} to {path} at {depth}-bit.")
