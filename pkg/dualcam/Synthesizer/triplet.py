import json
import os
from dataclasses import dataclass, field

from dualcam.Imaging.image_buffer import ImageBuffer
from dualcam.Imaging.image_io import load_image, save_image
from dualcam.Imaging.timeline import CaptureTimeline
from dualcam.Noise.noise_params import NoiseParams

META_FILE = 'meta.json'
LONG_FILE = 'long.png'
GT_FILE = 'gt.png'


def burst_file(index: int) -> str:
    return f'burst_{index}.png'


@dataclass(frozen=True)
class SynthMetadata:
    """
    Every value sampled while synthesizing one triplet.
    """
    n: int
    ratio: float
    wb_red_gain: float
    wb_blue_gain: float
    distort_red: float
    distort_blue: float
    noise: NoiseParams
    gamma: float
    ccm: tuple[float, ...]
    seed: int
    source_frames: tuple[str, ...] = field(default_factory=tuple)
    timeline: CaptureTimeline | None = None

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'ratio': self.ratio,
            'wb_red_gain': self.wb_red_gain,
            'wb_blue_gain': self.wb_blue_gain,
            'distort_red': self.distort_red,
            'distort_blue': self.distort_blue,
            'sigma_s': self.noise.sigma_s,
            'sigma_r2': self.noise.sigma_r2,
            'gamma': self.gamma,
            'ccm': list(self.ccm),
            'seed': self.seed,
            'source_frames': list(self.source_frames),
        }

    @classmethod
    def from_dict(cls, data: dict, frame_rate: float = 240.0) -> 'SynthMetadata':
        missing = {'n', 'ratio', 'wb_red_gain', 'wb_blue_gain', 'distort_red', 'distort_blue',
                   'sigma_s', 'sigma_r2', 'gamma', 'ccm', 'seed', 'source_frames'} - set(data)
        if missing:
            raise ValueError(f"Metadata is missing keys: {sorted(missing)}")
        return cls(
            n=int(data['n']),
            ratio=float(data['ratio']),
            wb_red_gain=float(data['wb_red_gain']),
            wb_blue_gain=float(data['wb_blue_gain']),
            distort_red=float(data['distort_red']),
            distort_blue=float(data['distort_blue']),
            noise=NoiseParams(float(data['sigma_s']), float(data['sigma_r2'])),
            gamma=float(data['gamma']),
            ccm=tuple(float(v) for v in data['ccm']),
            seed=int(data['seed']),
            source_frames=tuple(data['source_frames']),
            timeline=CaptureTimeline.from_sequence(int(data['n']), frame_rate),
        )


@dataclass(frozen=True)
class CaptureTriplet:
    """
    Noisy short-exposure burst, blurry long exposure and sharp ground truth, all in sRGB.
    """
    burst: list[ImageBuffer]
    long: ImageBuffer
    gt: ImageBuffer
    meta: SynthMetadata

    @property
    def reference_index(self) -> int:
        return len(self.burst) // 2


def write_triplet(triplet: CaptureTriplet, output_dir: str, depth: int = 16) -> None:
    """
    Write long.png, gt.png, burst_0.png ... burst_{N-1}.png and meta.json into `output_dir`.
    """
    os.makedirs(output_dir, exist_ok=True)
    save_image(triplet.long, os.path.join(output_dir, LONG_FILE), depth)
    save_image(triplet.gt, os.path.join(output_dir, GT_FILE), depth)
    for i, frame in enumerate(triplet.burst):
        save_image(frame, os.path.join(output_dir, burst_file(i)), depth)
    with open(os.path.join(output_dir, META_FILE), 'w', encoding='utf-8') as file:
        json.dump(triplet.meta.to_dict(), file, indent=2)


def read_meta(triplet_dir: str) -> SynthMetadata:
    meta_path = os.path.join(triplet_dir, META_FILE)
    if not os.path.isfile(meta_path):
        raise FileNotFoundError(f"Metadata file not found: {meta_path}")
    with open(meta_path, 'r', encoding='utf-8') as file:
        return SynthMetadata.from_dict(json.load(file))


def read_triplet(triplet_dir: str) -> CaptureTriplet:
    meta = read_meta(triplet_dir)
    return CaptureTriplet(
        burst=[load_image(os.path.join(triplet_dir, burst_file(i))) for i in range(meta.n)],
        long=load_image(os.path.join(triplet_dir, LONG_FILE)),
        gt=load_image(os.path.join(triplet_dir, GT_FILE)),
        meta=meta,
    )
