import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from dualcam.Imaging.image_buffer import LUMA_WEIGHTS, ImageBuffer, require_same_shape
from dualcam.Isp.isp_config import check_keys

logger = logging.getLogger(__name__)

MODES = ('residual_confidence', 'luma_chroma', 'average')
PROXY_SIZE = 3


@dataclass(frozen=True)
class FusionConfig:
    """
    :param mode: 'residual_confidence', 'luma_chroma' or 'average'.
    :param window: Odd side of the window pooling each candidate's inconsistency with the long exposure.
    :param epsilon: Regulariser of the inverse-inconsistency confidence.
    """
    mode: str = 'residual_confidence'
    window: int = 11
    epsilon: float = 1e-4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"Unknown fusion mode '{self.mode}'. Expected one of {MODES}.")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 1, got {self.window}.")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}.")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'FusionConfig':
        check_keys(cls, data)
        return cls(**data)


def confidence(candidate: np.ndarray, long: np.ndarray, cfg: FusionConfig) -> np.ndarray:
    """
    1 / (epsilon + local mean of |blur_proxy(candidate) - long|^2), summed over channels.
    """
    proxy = ndimage.uniform_filter(candidate, size=(PROXY_SIZE, PROXY_SIZE, 1), mode='nearest')
    inconsistency = np.sum((proxy - long) ** 2, axis=2)
    return 1.0 / (cfg.epsilon + ndimage.uniform_filter(inconsistency, size=cfg.window, mode='nearest'))


def fusion_weights(deblurred: ImageBuffer, denoised: ImageBuffer, long: ImageBuffer,
                   cfg: FusionConfig = FusionConfig()) -> np.ndarray:
    """
    H x W weight of the deblurred candidate; the denoised one gets 1 minus it.
    """
    if cfg.mode == 'average':
        return np.full((deblurred.height, deblurred.width), 0.5)
    conf_deblurred = confidence(deblurred.data, long.data, cfg)
    conf_denoised = confidence(denoised.data, long.data, cfg)
    return conf_deblurred / (conf_deblurred + conf_denoised)


def fuse(deblurred: ImageBuffer, denoised: ImageBuffer, long: ImageBuffer,
         cfg: FusionConfig = FusionConfig()) -> ImageBuffer:
    """
    Combine the deblurred long exposure with the merged burst.

    residual_confidence and average produce a per-pixel convex combination of the two candidates.
    luma_chroma keeps the luma of the denoised image and the chroma of the deblurred one.

    :raises ValueError: On a shape mismatch.
    """
    require_same_shape(deblurred, denoised, long, operation='fuse')

    if cfg.mode == 'luma_chroma':
        if deblurred.channels == 1:
            return denoised
        luma_shift = denoised.data @ LUMA_WEIGHTS - deblurred.data @ LUMA_WEIGHTS
        fused = np.clip(deblurred.data + luma_shift[..., np.newaxis], 0.0, 1.0)
        return denoised.with_data(fused)

    if cfg.mode == 'average':
        return denoised.with_data(0.5 * (deblurred.data + denoised.data))

    weight = fusion_weights(deblurred, denoised, long, cfg)
    logger.debug(f"[Fusion] Mean deblurred weight {weight.mean():.3f}")
    fused = denoised.data + weight[..., np.newaxis] * (deblurred.data - denoised.data)
    return denoised.with_data(fused)
