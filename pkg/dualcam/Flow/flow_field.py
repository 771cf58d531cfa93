from dataclasses import asdict, dataclass

import numpy as np

from dualcam.Isp.isp_config import check_keys


@dataclass(frozen=True, eq=False)
class FlowField:
    """
    Per-pixel displacement (dx, dy) in pixels from the reference to a target frame:
    ref(p) ~ tgt(p + flow(p)). Stored as float32, like the .flo format.
    """
    uv: np.ndarray

    def __post_init__(self):
        uv = np.array(self.uv, dtype=np.float32, copy=True)
        if uv.ndim != 3 or uv.shape[2] != 2:
            raise ValueError(f"FlowField expects H x W x 2 data, got shape {uv.shape}.")
        if not np.all(np.isfinite(uv)):
            raise ValueError("FlowField contains non-finite values.")
        diagonal = np.hypot(uv.shape[0], uv.shape[1])
        if uv.size and np.max(np.hypot(uv[:, :, 0], uv[:, :, 1])) > diagonal:
            raise ValueError(f"FlowField displacement exceeds the image diagonal ({diagonal:.1f} px).")
        uv.setflags(write=False)
        object.__setattr__(self, 'uv', uv)

    @property
    def height(self) -> int:
        return self.uv.shape[0]

    @property
    def width(self) -> int:
        return self.uv.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.uv.shape[:2]

    @property
    def u(self) -> np.ndarray:
        return self.uv[:, :, 0]

    @property
    def v(self) -> np.ndarray:
        return self.uv[:, :, 1]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    @classmethod
    def zeros(cls, height: int, width: int) -> 'FlowField':
        return cls(np.zeros((height, width, 2)))

    @classmethod
    def constant(cls, height: int, width: int, dx: float, dy: float) -> 'FlowField':
        uv = np.empty((height, width, 2))
        uv[:, :, 0] = dx
        uv[:, :, 1] = dy
        return cls(uv)

    def __repr__(self):
        return f"FlowField(width={self.width}, height={self.height})"


@dataclass(frozen=True)
class FlowConfig:
    """
    Pyramidal Lucas-Kanade settings.

    :param levels: Pyramid depth.
    :param window: Odd side of the structure-tensor window.
    :param iters_per_level: Warp-and-solve iterations per level.
    :param min_eigen: Smallest structure-tensor eigenvalue for which a pixel is updated;
        weaker pixels keep the flow inherited from the coarser level.
    """
    levels: int = 3
    window: int = 21
    iters_per_level: int = 10
    min_eigen: float = 1e-4

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"Pyramid needs at least one level, got {self.levels}.")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"Window must be odd and >= 3, got {self.window}.")
        if self.iters_per_level < 1:
            raise ValueError(f"iters_per_level must be >= 1, got {self.iters_per_level}.")
        if self.min_eigen < 0:
            raise ValueError(f"min_eigen must be non-negative, got {self.min_eigen}.")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'FlowConfig':
        check_keys(cls, data)
        return cls(**data)
