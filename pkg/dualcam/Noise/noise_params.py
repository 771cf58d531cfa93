from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseParams:
    """
    Heteroscedastic noise parameters: Var[n | x] = sigma_s * x + sigma_r2.

    :param sigma_s: Shot-noise slope.
    :param sigma_r2: Read-noise variance.
    :param g_a: Analog gain, when the parameters were derived from sensor gains.
    :param g_d: Digital gain, when the parameters were derived from sensor gains.
    """
    sigma_s: float
    sigma_r2: float
    g_a: float | None = None
    g_d: float | None = None

    def __post_init__(self):
        if self.sigma_s < 0 or self.sigma_r2 < 0:
            raise ValueError(f"Noise parameters must be non-negative, got sigma_s={self.sigma_s}, sigma_r2={self.sigma_r2}.")
        if (self.g_a is None) != (self.g_d is None):
            raise ValueError("Analog and digital gains must be given together.")
        if self.g_a is not None:
            gain = self.g_a * self.g_d
            if abs(self.sigma_s - gain) > 1e-9 or abs(self.sigma_r2 - gain ** 2) > 1e-9:
                raise ValueError(f"Gains g_a={self.g_a}, g_d={self.g_d} do not match sigma_s={self.sigma_s}, sigma_r2={self.sigma_r2}.")

    @classmethod
    def from_gains(cls, g_a: float, g_d: float) -> 'NoiseParams':
        return cls(sigma_s=g_a * g_d, sigma_r2=(g_a * g_d) ** 2, g_a=g_a, g_d=g_d)

    @classmethod
    def zero(cls) -> 'NoiseParams':
        return cls(0.0, 0.0)

    def variance(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self.sigma_s * x + self.sigma_r2, 0.0)

    @classmethod
    def fit(cls, curve: list) -> 'NoiseParams':
        """
        Least-squares line through the non-empty bins of a noise curve (see estimate_noise_curve).
        """
        points = [(b.intensity, b.variance) for b in curve if not b.empty]
        if len(points) < 2:
            raise ValueError(f"Need at least two non-empty bins to fit a noise curve, got {len(points)}.")
        x, y = np.array(points).T
        slope, intercept = np.polyfit(x, y, 1)
        return cls(sigma_s=max(float(slope), 0.0), sigma_r2=max(float(intercept), 0.0))

    def to_dict(self) -> dict:
        return {'sigma_s': self.sigma_s, 'sigma_r2': self.sigma_r2}
