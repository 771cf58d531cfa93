from dataclasses import dataclass
from enum import Enum

import numpy as np


class ColorSpace(str, Enum):
    SRGB = 'srgb'
    LINEAR_RGB = 'linear_rgb'
    RAW_LINEAR = 'raw_linear'


# Rec.601 luma weights, shared by flow estimation, SSIM and fusion.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _freeze(data: np.ndarray) -> np.ndarray:
    data = np.array(data, dtype=np.float64, copy=True)
    data.setflags(write=False)
    return data


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """
    H x W x C floating-point image tagged with its colour space.

    The array is copied on construction and made read-only, so buffers can be shared
    between workers without any operation mutating its inputs.
    """
    data: np.ndarray
    space: ColorSpace = ColorSpace.SRGB

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"ImageBuffer expects H x W x 1 or H x W x 3 data, got shape {data.shape}.")
        if not np.all(np.isfinite(data)):
            raise ValueError("ImageBuffer data contains non-finite values.")
        object.__setattr__(self, 'data', _freeze(data))
        object.__setattr__(self, 'space', ColorSpace(self.space))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray, space: ColorSpace | None = None) -> 'ImageBuffer':
        """
        Build a new buffer from `data`, keeping this buffer's colour space unless one is given.
        """
        return ImageBuffer(data, self.space if space is None else space)

    def luma(self) -> np.ndarray:
        """
        Rec.601 luma plane (H x W). Single-channel buffers are returned as-is.
        """
        if self.channels == 1:
            return self.data[:, :, 0]
        return self.data @ LUMA_WEIGHTS

    def require_space(self, space: ColorSpace, operation: str) -> None:
        if self.space != space:
            raise ValueError(f"{operation} expects a {space.value} image, got {self.space.value}.")

    def __repr__(self):
        return f"ImageBuffer(width={self.width}, height={self.height}, channels={self.channels}, space='{self.space.value}')"


@dataclass(frozen=True, eq=False)
class BayerImage:
    """
    Single-plane RGGB raw mosaic: (0,0) red, (0,1) and (1,0) green, (1,1) blue, period 2.
    """
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 2:
            raise ValueError(f"BayerImage expects a single H x W plane, got shape {data.shape}.")
        if data.shape[0] % 2 or data.shape[1] % 2:
            raise ValueError(f"BayerImage dimensions must be even, got {data.shape[1]}x{data.shape[0]}.")
        if not np.all(np.isfinite(data)):
            raise ValueError("BayerImage data contains non-finite values.")
        object.__setattr__(self, 'data', _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> 'BayerImage':
        return BayerImage(data)

    def __repr__(self):
        return f"BayerImage(width={self.width}, height={self.height}, phase='RGGB')"


def require_same_shape(*images, operation: str) -> None:
    """
    Raise ValueError unless all images (buffers, mosaics or arrays) share one shape.
    """
    shapes = {tuple(getattr(img, 'shape', np.shape(img))) for img in images}
    if len(shapes) > 1:
        raise ValueError(f"{operation}: shape mismatch between inputs {sorted(shapes)}.")
