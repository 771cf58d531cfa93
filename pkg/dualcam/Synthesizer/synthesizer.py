"""
Synthesis of (burst, long exposure, ground truth) triplets from 2N-1 consecutive sRGB frames.

All frames are unprocessed to linear camera RGB, then the pipeline branches:
  - long: invert WB on every frame, average in raw space, mosaic, add noise, run the ISP;
  - burst: keep every other frame, invert WB, under-expose by r, add colour distortion,
    mosaic, add noise, multiply back by r, run the ISP;
  - ground truth: the clean middle frame through WB inversion, mosaic and the ISP.
"""
import logging
from dataclasses import replace
from typing import Sequence, TypeVar

import numpy as np

from dualcam.Imaging.image_buffer import BayerImage, ColorSpace, ImageBuffer, require_same_shape
from dualcam.Imaging.timeline import CaptureTimeline
from dualcam.Isp.isp import apply_gains, mosaic, run_isp, scale_exposure, unprocess
from dualcam.Isp.isp_config import IspConfig
from dualcam.Noise.noise_model import add_noise, sample_noise_params
from dualcam.Noise.noise_params import NoiseParams
from dualcam.Noise.rng import make_rng
from dualcam.Synthesizer.synth_config import SynthConfig
from dualcam.Synthesizer.triplet import CaptureTriplet, SynthMetadata

logger = logging.getLogger(__name__)

Frame = TypeVar('Frame')
Raw = TypeVar('Raw', BayerImage, ImageBuffer)


def subsample_burst(frames: Sequence[Frame]) -> list[Frame]:
    """
    Keep frames 0, 2, ..., 2N-2 of a 2N-1 sequence to simulate read-out gaps.
    The middle kept frame is the middle frame of the sequence.
    """
    if len(frames) % 2 == 0:
        raise ValueError(f"Sequence length must be odd (2N-1), got {len(frames)} frames.")
    return list(frames[::2])


def form_long_exposure(raw_frames: Sequence[Raw]) -> Raw:
    """
    Per-pixel arithmetic mean over every frame of the sequence.
    """
    if not raw_frames:
        raise ValueError("Cannot form a long exposure from an empty frame list.")
    require_same_shape(*raw_frames, operation='form_long_exposure')
    mean = np.mean(np.stack([frame.data for frame in raw_frames]), axis=0)
    return raw_frames[0].with_data(mean)


def apply_color_distortion(raw_rgb: ImageBuffer, red_gain: float, blue_gain: float) -> ImageBuffer:
    """
    Purple tint of high-ISO short exposures: scale red and blue, clamp to [0, 1].
    """
    if red_gain < 1 or blue_gain < 1:
        raise ValueError(f"Distortion gains must be >= 1, got red={red_gain}, blue={blue_gain}.")
    data = raw_rgb.data.copy()
    data[:, :, 0] = np.clip(data[:, :, 0] * red_gain, 0.0, 1.0)
    data[:, :, 2] = np.clip(data[:, :, 2] * blue_gain, 0.0, 1.0)
    return raw_rgb.with_data(data)


def _draw_parameters(cfg: SynthConfig, rng: np.random.Generator) -> tuple[float, float, float, float, NoiseParams]:
    # Always draw in the same order so fixed values never shift the noise stream.
    wb_red = float(rng.uniform(*cfg.wb_red_range))
    wb_blue = float(rng.uniform(*cfg.wb_blue_range))
    distort_red = float(rng.uniform(*cfg.distortion_range))
    distort_blue = float(rng.uniform(*cfg.distortion_range))
    noise = sample_noise_params(rng, cfg.shot_noise_range)

    if cfg.wb_gains is not None:
        wb_red, wb_blue = cfg.wb_gains
    if cfg.distortion_gains is not None:
        distort_red, distort_blue = cfg.distortion_gains
    if cfg.noise is not None:
        noise = cfg.noise
    return wb_red, wb_blue, distort_red, distort_blue, noise


def _check_frames(frames: Sequence[ImageBuffer], cfg: SynthConfig) -> None:
    if len(frames) != cfg.sequence_length:
        raise ValueError(f"Expected {cfg.sequence_length} frames for a burst of {cfg.n}, got {len(frames)}.")
    require_same_shape(*frames, operation='synthesize_triplet')
    first = frames[0]
    if first.channels != 3:
        raise ValueError(f"Source frames must be RGB, got {first.channels} channel(s).")
    if first.height % 2 or first.width % 2:
        raise ValueError(f"Source frames must have even dimensions, got {first.width}x{first.height}.")
    for frame in frames:
        frame.require_space(ColorSpace.SRGB, 'synthesize_triplet')


def synthesize_triplet(frames: Sequence[ImageBuffer], cfg: SynthConfig,
                       rng: np.random.Generator | None = None,
                       source_frames: Sequence[str] = ()) -> CaptureTriplet:
    """
    Synthesize one (burst, long, gt) triplet from 2N-1 consecutive sRGB frames.

    :param frames: Ordered source frames, equal shapes, even dimensions.
    :param cfg: Synthesis settings; cfg.seed is recorded in the metadata.
    :param rng: Random stream; defaults to make_rng(cfg.seed).
    :param source_frames: Names of the source frames, recorded in the metadata.
    """
    _check_frames(frames, cfg)
    rng = make_rng(cfg.seed) if rng is None else rng

    wb_red, wb_blue, distort_red, distort_blue, noise = _draw_parameters(cfg, rng)
    isp: IspConfig = cfg.isp.with_gains(wb_red, wb_blue)
    threshold = isp.saturation_threshold

    linear = [unprocess(frame, isp) for frame in frames]
    white_inverted = [apply_gains(frame, wb_red, wb_blue, threshold, 'invert') for frame in linear]

    # Long branch: blur forms by averaging every frame in raw space.
    long_raw = mosaic(form_long_exposure(white_inverted))
    long_noisy = add_noise(long_raw, noise, rng)
    long = run_isp(long_noisy, isp)

    # Burst branch. Noise with the base parameters on the under-exposed raw, multiplied back by r,
    # has the variance of scale_for_exposure(noise, r) at full exposure.
    burst = []
    for frame in subsample_burst(white_inverted):
        dark = scale_exposure(frame, cfg.ratio, threshold, 'invert')
        dark = apply_color_distortion(dark, distort_red, distort_blue)
        raw = add_noise(mosaic(dark), noise, rng)
        # Re-expose so the noisy burst matches the long exposure in brightness.
        raw = raw.with_data(np.clip(raw.data * cfg.ratio, 0.0, 1.0))
        burst.append(run_isp(raw, isp))

    gt = run_isp(mosaic(white_inverted[cfg.n - 1]), isp)

    meta = SynthMetadata(
        n=cfg.n,
        ratio=cfg.ratio,
        wb_red_gain=wb_red,
        wb_blue_gain=wb_blue,
        distort_red=distort_red,
        distort_blue=distort_blue,
        noise=noise,
        gamma=isp.gamma,
        ccm=isp.ccm,
        seed=cfg.seed,
        source_frames=tuple(source_frames),
        timeline=CaptureTimeline.from_sequence(cfg.n, cfg.frame_rate),
    )
    logger.debug(f"[Synth] Triplet seed={cfg.seed}: wb=({wb_red:.3f}, {wb_blue:.3f}), "
                 f"distortion=({distort_red:.3f}, {distort_blue:.3f}), sigma_s={noise.sigma_s:.3e}, sigma_r2={noise.sigma_r2:.3e}")
    return CaptureTriplet(burst=burst, long=long, gt=gt, meta=meta)


def replay_config(meta: SynthMetadata, cfg: SynthConfig | None = None) -> SynthConfig:
    """
    Config that reproduces the triplet described by `meta`: every sampled value fixed, same seed.
    """
    cfg = SynthConfig() if cfg is None else cfg
    isp = replace(cfg.isp, gamma=meta.gamma, ccm=meta.ccm)
    return replace(
        cfg,
        n=meta.n,
        ratio=meta.ratio,
        isp=isp,
        noise=meta.noise,
        wb_gains=(meta.wb_red_gain, meta.wb_blue_gain),
        distortion_gains=(meta.distort_red, meta.distort_blue),
        seed=meta.seed,
    )
