"""
Coarse-to-fine Lucas-Kanade dense optical flow.
"""
import logging

import numpy as np
from scipy import ndimage

from dualcam.Flow.flow_field import FlowConfig, FlowField
from dualcam.Flow.warp import warp_array
from dualcam.Imaging.image_buffer import ImageBuffer, require_same_shape

logger = logging.getLogger(__name__)

MIN_SIZE = 32
MIN_COARSE_SIZE = 8


def build_pyramid(gray: np.ndarray, levels: int) -> list[np.ndarray]:
    """
    Gaussian pyramid, finest level first. Level k+1 keeps the even pixels of the blurred level k.
    """
    pyramid = [gray]
    for _ in range(levels - 1):
        pyramid.append(ndimage.gaussian_filter(pyramid[-1], 1.0, mode='nearest')[::2, ::2])
    return pyramid


def upsample_flow(uv: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """
    Bilinearly resample a coarse flow onto the next finer grid and double its vectors.
    Fine pixel x sits at coarse coordinate x / 2.
    """
    ys, xs = np.mgrid[0:shape[0], 0:shape[1]] / 2.0
    out = np.empty(shape + (2,))
    for c in range(2):
        out[:, :, c] = 2.0 * ndimage.map_coordinates(uv[:, :, c], [ys, xs], order=1, mode='nearest')
    return out


def _refine(ref: np.ndarray, tgt: np.ndarray, uv: np.ndarray, cfg: FlowConfig) -> tuple[np.ndarray, float]:
    def window_mean(a: np.ndarray) -> np.ndarray:
        return ndimage.uniform_filter(a, cfg.window, mode='nearest')

    grad_ref_y, grad_ref_x = np.gradient(ref)
    valid = np.zeros(ref.shape, dtype=bool)
    for _ in range(cfg.iters_per_level):
        warped = warp_array(tgt, uv[:, :, 0], uv[:, :, 1])
        grad_w_y, grad_w_x = np.gradient(warped)
        ix = 0.5 * (grad_ref_x + grad_w_x)
        iy = 0.5 * (grad_ref_y + grad_w_y)
        it = ref - warped

        sxx = window_mean(ix * ix)
        sxy = window_mean(ix * iy)
        syy = window_mean(iy * iy)
        bx = window_mean(ix * it)
        by = window_mean(iy * it)

        det = sxx * syy - sxy ** 2
        min_eigen = 0.5 * (sxx + syy) - np.sqrt((0.5 * (sxx - syy)) ** 2 + sxy ** 2)
        valid = (min_eigen >= cfg.min_eigen) & (det > 0)
        safe_det = np.where(valid, det, 1.0)

        du = np.where(valid, (syy * bx - sxy * by) / safe_det, 0.0)
        dv = np.where(valid, (sxx * by - sxy * bx) / safe_det, 0.0)
        uv[:, :, 0] += du
        uv[:, :, 1] += dv
    return uv, float(np.mean(valid))


def estimate_flow(ref: ImageBuffer, tgt: ImageBuffer, cfg: FlowConfig = FlowConfig()) -> FlowField:
    """
    Estimate the flow from `ref` to `tgt` such that ref(p) ~ tgt(p + flow(p)).

    Both images are reduced to Rec.601 luma. At every level each pixel solves the 2x2 structure-tensor
    system over its window; pixels whose smallest eigenvalue is below cfg.min_eigen keep the flow
    inherited from the coarser level.

    :raises ValueError: If shapes differ or the image is too small for the pyramid.
    """
    require_same_shape(ref, tgt, operation='estimate_flow')
    height, width = ref.height, ref.width
    if min(height, width) < MIN_SIZE:
        raise ValueError(f"estimate_flow needs images of at least {MIN_SIZE}x{MIN_SIZE}, got {width}x{height}.")
    if min(height, width) >> (cfg.levels - 1) < MIN_COARSE_SIZE:
        raise ValueError(f"Image {width}x{height} is too small for a {cfg.levels}-level pyramid.")

    ref_pyramid = build_pyramid(ref.luma(), cfg.levels)
    tgt_pyramid = build_pyramid(tgt.luma(), cfg.levels)

    uv = np.zeros(ref_pyramid[-1].shape + (2,))
    for level in reversed(range(cfg.levels)):
        ref_level, tgt_level = ref_pyramid[level], tgt_pyramid[level]
        if uv.shape[:2] != ref_level.shape:
            uv = upsample_flow(uv, ref_level.shape)
        uv, coverage = _refine(ref_level, tgt_level, uv, cfg)
        logger.debug(f"[Flow] Level {level} ({ref_level.shape[1]}x{ref_level.shape[0]}): {coverage:.1%} of pixels textured.")

    # Bound vectors by the image diagonal, with headroom for the float32 cast.
    diagonal = np.hypot(height, width) * (1.0 - 1e-6)
    magnitude = np.hypot(uv[:, :, 0], uv[:, :, 1])
    scale = np.minimum(1.0, diagonal / np.maximum(magnitude, 1e-12))
    return FlowField(uv * scale[:, :, np.newaxis])
