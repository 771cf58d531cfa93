"""
Residual-weighted burst merging.

Every frame is backwarped onto the reference. Its local squared residual against the reference
becomes a log weight, and the weights are normalised per pixel with a softmax.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from dualcam.Flow.flow_field import FlowField
from dualcam.Flow.warp import backwarp
from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer, require_same_shape
from dualcam.Isp.isp import linear_to_srgb, srgb_to_linear
from dualcam.Isp.isp_config import IspConfig, check_keys

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MergeConfig:
    """
    :param tau: Softmax temperature on squared residuals, in intensity^2 units.
    :param patch: Odd side of the residual pooling window.
    :param use_flow_mag: Add flow_weight * |flow|^2 to each frame's residual.
    :param flow_weight: Penalty per squared pixel of displacement.
    :param linear: Merge in linear RGB instead of sRGB.
    """
    tau: float = 0.01
    patch: int = 7
    use_flow_mag: bool = False
    flow_weight: float = 1e-4
    linear: bool = False

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"tau must be positive, got {self.tau}.")
        if self.patch < 1 or self.patch % 2 == 0:
            raise ValueError(f"patch must be odd and >= 1, got {self.patch}.")
        if self.flow_weight < 0:
            raise ValueError(f"flow_weight must be non-negative, got {self.flow_weight}.")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'MergeConfig':
        check_keys(cls, data)
        return cls(**data)


@dataclass(frozen=True, eq=False)
class WeightMap:
    """
    N x H x W per-frame merge weights; non-negative and summing to 1 at every pixel.
    """
    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64, copy=True)
        if weights.ndim != 3 or weights.shape[0] < 1:
            raise ValueError(f"WeightMap expects N x H x W weights, got shape {weights.shape}.")
        if np.any(weights < 0) or not np.allclose(weights.sum(axis=0), 1.0, atol=1e-6):
            raise ValueError("WeightMap weights must be non-negative and sum to 1 per pixel.")
        weights.setflags(write=False)
        object.__setattr__(self, 'weights', weights)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def height(self) -> int:
        return self.weights.shape[1]

    @property
    def width(self) -> int:
        return self.weights.shape[2]

    def to_tensor(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float32)


def residuals(warped: Sequence[ImageBuffer], ref_index: int, patch: int) -> np.ndarray:
    """
    N x H x W box-filtered mean squared difference of each frame to the reference, averaged over channels.
    """
    reference = warped[ref_index].data
    out = np.empty((len(warped),) + reference.shape[:2])
    for i, frame in enumerate(warped):
        squared = np.mean((frame.data - reference) ** 2, axis=2)
        out[i] = ndimage.uniform_filter(squared, size=patch, mode='nearest')
    out[ref_index] = 0.0
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=0, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=0, keepdims=True)


def compute_weights(warped: Sequence[ImageBuffer], ref_index: int, cfg: MergeConfig = MergeConfig(),
                    flows: Sequence[FlowField] | None = None) -> WeightMap:
    """
    Softmax weights over -residual / tau for a backwarped burst.

    :param warped: Burst frames already aligned to the reference.
    :param ref_index: Index of the reference frame.
    :param cfg: Merge settings.
    :param flows: Flows used for alignment; required only with cfg.use_flow_mag.
    :raises ValueError: On an empty burst, a shape mismatch or an out-of-range reference.
    """
    if not warped:
        raise ValueError("compute_weights needs at least one frame.")
    require_same_shape(*warped, operation='compute_weights')
    if not 0 <= ref_index < len(warped):
        raise ValueError(f"Reference index {ref_index} out of range for {len(warped)} frames.")

    r = residuals(warped, ref_index, cfg.patch)
    if cfg.use_flow_mag:
        if flows is None or len(flows) != len(warped):
            raise ValueError("use_flow_mag needs one flow per burst frame.")
        r = r + cfg.flow_weight * np.stack([flow.magnitude().astype(np.float64) ** 2 for flow in flows])
    return WeightMap(softmax(-r / cfg.tau))


def merge_burst_with_weights(burst: Sequence[ImageBuffer], flows: Sequence[FlowField],
                             cfg: MergeConfig = MergeConfig(), isp: IspConfig = IspConfig()) -> tuple[ImageBuffer, WeightMap]:
    """
    Align every frame to the middle one with its flow and merge with residual softmax weights.

    Returns:
        The merged sRGB image and the weights used.
    """
    if len(burst) != len(flows):
        raise ValueError(f"merge_burst got {len(burst)} frames but {len(flows)} flows.")
    if not burst or len(burst) % 2 == 0:
        raise ValueError(f"Burst size must be odd, got {len(burst)}.")
    require_same_shape(*burst, operation='merge_burst')

    frames = list(burst)
    if cfg.linear:
        frames = [srgb_to_linear(frame, isp) for frame in frames]
    warped = [backwarp(frame, flow) for frame, flow in zip(frames, flows)]
    weight_map = compute_weights(warped, len(burst) // 2, cfg, flows)

    stack = np.stack([frame.data for frame in warped])
    merged = np.sum(weight_map.weights[..., np.newaxis] * stack, axis=0)
    result = warped[len(burst) // 2].with_data(merged)
    if cfg.linear:
        result = linear_to_srgb(result, isp)

    logger.info(f"[Denoise] Merged {len(burst)} frames, reference weight mean {weight_map.weights[len(burst) // 2].mean():.3f}")
    return result, weight_map


def merge_burst(burst: Sequence[ImageBuffer], flows: Sequence[FlowField], cfg: MergeConfig = MergeConfig(),
                isp: IspConfig = IspConfig()) -> ImageBuffer:
    return merge_burst_with_weights(burst, flows, cfg, isp)[0]
