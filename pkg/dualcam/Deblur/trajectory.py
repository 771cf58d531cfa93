import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from dualcam.Flow.flow_field import FlowField
from dualcam.Imaging.image_buffer import require_same_shape

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class TrajectoryField:
    """
    Per-pixel exposure trajectory: K^2 time-ordered (dx, dy) offsets, array of shape H x W x K^2 x 2.

    Trajectories built from a burst pass through (0, 0) at the time of the reference frame.
    """
    offsets: np.ndarray

    def __post_init__(self):
        offsets = np.array(self.offsets, dtype=np.float64, copy=True)
        if offsets.ndim != 4 or offsets.shape[3] != 2:
            raise ValueError(f"TrajectoryField expects H x W x K^2 x 2 offsets, got shape {offsets.shape}.")
        taps = offsets.shape[2]
        if taps < 1 or round(np.sqrt(taps)) ** 2 != taps:
            raise ValueError(f"Offset count per pixel must be a perfect square K^2, got {taps}.")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("TrajectoryField contains non-finite offsets.")
        offsets.setflags(write=False)
        object.__setattr__(self, 'offsets', offsets)

    @property
    def height(self) -> int:
        return self.offsets.shape[0]

    @property
    def width(self) -> int:
        return self.offsets.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.offsets.shape[:2]

    @property
    def taps(self) -> int:
        return self.offsets.shape[2]

    @property
    def K(self) -> int:
        return round(np.sqrt(self.taps))

    def is_static(self) -> bool:
        return not np.any(self.offsets)

    @classmethod
    def zeros(cls, height: int, width: int, K: int = 3) -> 'TrajectoryField':
        return cls(np.zeros((height, width, K * K, 2)))

    def to_tensor(self) -> np.ndarray:
        """Rank-4 (H, W, K^2, 2) array for the DCKT sidecar."""
        return np.asarray(self.offsets, dtype=np.float32)

    @classmethod
    def from_tensor(cls, tensor: np.ndarray) -> 'TrajectoryField':
        return cls(tensor)

    def __repr__(self):
        return f"TrajectoryField(width={self.width}, height={self.height}, K={self.K})"


def build_trajectories(flows: Sequence[FlowField], K: int = 3) -> TrajectoryField:
    """
    Resample burst flows into K^2-point exposure trajectories.

    Flow i is anchored at time s_i = i / (N - 1) (the reference at 0.5). Each pixel's trajectory is the
    piecewise-linear path through its anchors, evaluated at K^2 uniform times u_k = k / (K^2 - 1).
    Nothing is extrapolated beyond the first and last anchors.

    :param flows: N flows from the reference frame to each burst frame; flows[N // 2] is all zeros.
    :raises ValueError: If N is even, shapes differ or the reference flow is not zero.
    """
    n = len(flows)
    if n < 1 or n % 2 == 0:
        raise ValueError(f"Burst size must be odd, got {n} flows.")
    if K < 2:
        raise ValueError(f"Trajectory kernel side must be >= 2, got {K}.")
    require_same_shape(*flows, operation='build_trajectories')
    reference = n // 2
    if np.max(np.abs(flows[reference].uv)) > 1e-6:
        raise ValueError("The reference flow must be all zeros.")

    height, width = flows[0].shape
    taps = K * K
    anchors = np.stack([flow.uv.astype(np.float64) for flow in flows])  # N x H x W x 2
    offsets = np.empty((height, width, taps, 2))

    if n == 1:
        offsets[:] = anchors[0][:, :, np.newaxis, :]
        return TrajectoryField(offsets)

    for k in range(taps):
        position = k / (taps - 1) * (n - 1)
        segment = min(int(np.floor(position)), n - 2)
        t = position - segment
        offsets[:, :, k, :] = (1.0 - t) * anchors[segment] + t * anchors[segment + 1]
    logger.debug(f"[Deblur] Built {K}x{K} trajectories from {n} flows.")
    return TrajectoryField(offsets)
