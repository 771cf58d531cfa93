"""
Raw sensor noise: shot + read noise folded into one heteroscedastic Gaussian,
log-domain parameter sampling and exposure-ratio scaling.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from dualcam.Imaging.image_buffer import BayerImage, ImageBuffer, require_same_shape
from dualcam.Noise.noise_params import NoiseParams

logger = logging.getLogger(__name__)

SHOT_NOISE_RANGE = (1.25e-4, 2.0e-4)
READ_NOISE_SLOPE = 2.18
READ_NOISE_OFFSET = 1.2
READ_NOISE_SD = 0.26
MIN_BIN_SAMPLES = 100


def sample_read_noise(rng: np.random.Generator, sigma_s: float) -> float:
    """
    Draw sigma_r2 given sigma_s: log(sigma_r2) ~ N(2.18 log(sigma_s) + 1.2, 0.26), natural logs.
    """
    mean = READ_NOISE_SLOPE * np.log(sigma_s) + READ_NOISE_OFFSET
    return float(np.exp(rng.normal(mean, READ_NOISE_SD)))


def sample_noise_params(rng: np.random.Generator,
                        shot_range: tuple[float, float] = SHOT_NOISE_RANGE) -> NoiseParams:
    """
    Sample sigma_s log-uniformly over `shot_range`, then sigma_r2 from the conditional log-normal.
    """
    low, high = shot_range
    if not 0 < low <= high:
        raise ValueError(f"Invalid shot-noise range {shot_range}.")
    sigma_s = float(np.exp(rng.uniform(np.log(low), np.log(high))))
    sigma_s = min(max(sigma_s, low), high)
    return NoiseParams(sigma_s=sigma_s, sigma_r2=sample_read_noise(rng, sigma_s))


def scale_for_exposure(params: NoiseParams, ratio: float) -> NoiseParams:
    """
    Noise of a frame under-exposed by `ratio` and multiplied back up: digital gain scaled by `ratio`.
    """
    if ratio < 1:
        raise ValueError(f"Exposure ratio must be >= 1, got {ratio}.")
    if params.g_a is not None:
        return NoiseParams.from_gains(params.g_a, params.g_d * ratio)
    return NoiseParams(sigma_s=ratio * params.sigma_s, sigma_r2=ratio ** 2 * params.sigma_r2)


def add_noise(raw: BayerImage | ImageBuffer, params: NoiseParams,
              rng: np.random.Generator) -> BayerImage | ImageBuffer:
    """
    y = x + n with n ~ N(0, sigma_s * x + sigma_r2), independent per pixel.
    The result is not clamped and may dip slightly below zero.
    """
    if params.sigma_s < 0 or params.sigma_r2 < 0:
        raise ValueError("Noise variance parameters must be non-negative.")
    x = raw.data
    noise = rng.standard_normal(x.shape) * np.sqrt(params.variance(x))
    return raw.with_data(x + noise)


@dataclass(frozen=True)
class NoiseBin:
    intensity: float
    variance: float
    count: int
    empty: bool


def estimate_noise_curve(noisy: BayerImage | ImageBuffer, clean: BayerImage | ImageBuffer,
                         bins: int = 10) -> list[NoiseBin]:
    """
    Bucket pixels by clean intensity into equal-width bins over [0, 1] and measure the residual
    variance per bin.

    Returns:
        One NoiseBin per bin, with the mean clean intensity of its pixels. Bins with fewer than 100
        samples are flagged empty.
    """
    require_same_shape(noisy, clean, operation='estimate_noise_curve')
    if bins < 2:
        raise ValueError(f"Need at least 2 bins, got {bins}.")

    df = pd.DataFrame({
        'clean': clean.data.ravel(),
        'residual': (noisy.data - clean.data).ravel(),
    })
    edges = np.linspace(0.0, 1.0, bins + 1)
    df['bin'] = pd.cut(df['clean'].clip(0.0, 1.0), edges, labels=False, include_lowest=True).astype(int)
    stats = df.groupby('bin').agg(
        intensity=('clean', 'mean'),
        variance=('residual', 'var'),
        count=('residual', 'size'),
    ).reindex(range(bins))

    curve = []
    for index, row in stats.iterrows():
        count = 0 if pd.isna(row['count']) else int(row['count'])
        empty = count < MIN_BIN_SAMPLES
        intensity = 0.5 * (edges[index] + edges[index + 1]) if pd.isna(row['intensity']) else float(row['intensity'])
        curve.append(NoiseBin(
            intensity=intensity,
            variance=float('nan') if empty else float(row['variance']),
            count=count,
            empty=empty,
        ))
    logger.debug(f"[Noise] Estimated noise curve over {bins} bins, {sum(not b.empty for b in curve)} non-empty.")
    return curve
