"""
Bilinear sampling with edge clamping.

Sampling positions are clamped into the frame before interpolation, so the same taps and weights
serve both gathering (backwarp, blur) and scattering (the blur adjoint).
"""
import numpy as np

from dualcam.Flow.flow_field import FlowField
from dualcam.Imaging.image_buffer import ImageBuffer


def bilinear_taps(xs: np.ndarray, ys: np.ndarray, width: int, height: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Flat pixel indices and weights of the four bilinear neighbours of every (x, y) position.

    Returns:
        (indices, weights), each of shape (4,) + xs.shape; weights sum to 1 along axis 0.
    """
    x = np.clip(xs, 0.0, width - 1)
    y = np.clip(ys, 0.0, height - 1)
    x0 = np.minimum(np.floor(x), max(width - 2, 0)).astype(np.int64)
    y0 = np.minimum(np.floor(y), max(height - 2, 0)).astype(np.int64)
    x1 = np.minimum(x0 + 1, width - 1)
    y1 = np.minimum(y0 + 1, height - 1)
    fx = x - x0
    fy = y - y0

    indices = np.stack([y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1])
    weights = np.stack([(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy])
    return indices, weights


def pixel_grid(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    ys, xs = np.mgrid[0:height, 0:width]
    return xs.astype(np.float64), ys.astype(np.float64)


def gather(data: np.ndarray, indices: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """
    Interpolate an H x W x C array at precomputed taps. Output shape is indices.shape[1:] + (C,).
    """
    flat = data.reshape(-1, data.shape[2])
    out = np.zeros(indices.shape[1:] + (data.shape[2],))
    for tap in range(indices.shape[0]):
        out += weights[tap][..., np.newaxis] * flat[indices[tap]]
    return out


def warp_array(data: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    out(p) = bilinear(data, p + (u, v)(p)) for H x W or H x W x C arrays.
    """
    squeeze = data.ndim == 2
    if squeeze:
        data = data[:, :, np.newaxis]
    height, width = data.shape[:2]
    xs, ys = pixel_grid(height, width)
    indices, weights = bilinear_taps(xs + u, ys + v, width, height)
    out = gather(data, indices, weights)
    return out[:, :, 0] if squeeze else out


def backwarp(img: ImageBuffer, flow: FlowField) -> ImageBuffer:
    """
    Resample `img` at p + flow(p) with bilinear interpolation; samples outside the frame clamp to the edge.
    """
    if (img.height, img.width) != flow.shape:
        raise ValueError(f"backwarp: image {img.width}x{img.height} does not match flow {flow.width}x{flow.height}.")
    return img.with_data(warp_array(img.data, flow.u, flow.v))
