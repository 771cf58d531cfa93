from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

IDENTITY_CCM = (1.0, 0.0, 0.0,
                0.0, 1.0, 0.0,
                0.0, 0.0, 1.0)


def check_keys(cls, data: dict) -> None:
    """
    Reject keys that are not fields of the dataclass `cls`.
    """
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"Unknown {cls.__name__} keys: {sorted(unknown)}. Known keys: {sorted(known)}.")


@dataclass(frozen=True)
class IspConfig:
    """
    Parameters of the forward/inverse ISP.

    :param gamma: Gamma exponent.
    :param ccm: Row-major 3x3 camera-RGB -> sRGB matrix; rows must sum to 1.
    :param wb_red_gain: White-balance gain of the red channel.
    :param wb_blue_gain: White-balance gain of the blue channel.
    :param saturation_threshold: Intensity above which gain inversion keeps highlights bright.
    """
    gamma: float = 2.2
    ccm: tuple[float, ...] = field(default=IDENTITY_CCM)
    wb_red_gain: float = 1.0
    wb_blue_gain: float = 1.0
    saturation_threshold: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, 'ccm', tuple(float(v) for v in np.ravel(self.ccm)))
        if len(self.ccm) != 9:
            raise ValueError(f"CCM must have 9 entries, got {len(self.ccm)}.")
        if self.gamma <= 0:
            raise ValueError(f"Gamma must be positive, got {self.gamma}.")

        matrix = self.ccm_matrix
        if abs(np.linalg.det(matrix)) <= 1e-8:
            raise ValueError("CCM is singular.")
        row_sums = matrix.sum(axis=1)
        if not np.allclose(row_sums, 1.0, atol=1e-6, rtol=0):
            raise ValueError(f"CCM rows must sum to 1, got {row_sums.tolist()}.")

        if self.wb_red_gain < 1 or self.wb_blue_gain < 1:
            raise ValueError(f"White-balance gains must be >= 1, got red={self.wb_red_gain}, blue={self.wb_blue_gain}.")
        if not 0 < self.saturation_threshold < 1:
            raise ValueError(f"Saturation threshold must lie in (0, 1), got {self.saturation_threshold}.")

    @property
    def ccm_matrix(self) -> np.ndarray:
        return np.array(self.ccm, dtype=np.float64).reshape(3, 3)

    def with_gains(self, red_gain: float, blue_gain: float) -> 'IspConfig':
        return replace(self, wb_red_gain=float(red_gain), wb_blue_gain=float(blue_gain))

    def to_dict(self) -> dict:
        data = asdict(self)
        data['ccm'] = list(self.ccm)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'IspConfig':
        check_keys(cls, data)
        return cls(**data)

    @classmethod
    def from_yaml(cls, path: str) -> 'IspConfig':
        with open(path, 'r', encoding='utf-8') as file:
            return cls.from_dict(yaml.safe_load(file) or {})
