from dataclasses import dataclass, field, fields

from dualcam.Isp.isp_config import IspConfig, check_keys
from dualcam.Noise.noise_model import SHOT_NOISE_RANGE
from dualcam.Noise.noise_params import NoiseParams


def _check_range(name: str, value: tuple[float, float], minimum: float | None = None) -> tuple[float, float]:
    low, high = (float(v) for v in value)
    if low > high:
        raise ValueError(f"{name} must satisfy low <= high, got {value}.")
    if minimum is not None and low < minimum:
        raise ValueError(f"{name} must not go below {minimum}, got {value}.")
    return low, high


@dataclass(frozen=True)
class SynthConfig:
    """
    Settings of the capture synthesizer.

    Gains, distortion and noise are sampled per triplet unless fixed here. Fixed values
    override the draws but the draws still happen, so a replayed triplet consumes the same
    random sequence as the original.

    :param n: Burst size; sequences hold 2n-1 frames.
    :param ratio: Exposure ratio between the long and short cameras.
    :param frame_rate: Capture rate of the source sequence, used for the timeline.
    :param seed: Seed of the triplet's random stream.
    """
    n: int = 5
    ratio: float = 10.0
    wb_red_range: tuple[float, float] = (1.9, 2.4)
    wb_blue_range: tuple[float, float] = (1.5, 1.9)
    distortion_range: tuple[float, float] = (1.0, 1.1)
    shot_noise_range: tuple[float, float] = SHOT_NOISE_RANGE
    frame_rate: float = 240.0
    isp: IspConfig = field(default_factory=IspConfig)
    noise: NoiseParams | None = None
    wb_gains: tuple[float, float] | None = None
    distortion_gains: tuple[float, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.n % 2 == 0:
            raise ValueError(f"Burst size must be odd and >= 1, got {self.n}.")
        if self.ratio < 1:
            raise ValueError(f"Exposure ratio must be >= 1, got {self.ratio}.")
        if self.frame_rate <= 0:
            raise ValueError(f"Frame rate must be positive, got {self.frame_rate}.")
        object.__setattr__(self, 'wb_red_range', _check_range('wb_red_range', self.wb_red_range, 1.0))
        object.__setattr__(self, 'wb_blue_range', _check_range('wb_blue_range', self.wb_blue_range, 1.0))
        object.__setattr__(self, 'distortion_range', _check_range('distortion_range', self.distortion_range, 1.0))
        object.__setattr__(self, 'shot_noise_range', _check_range('shot_noise_range', self.shot_noise_range, 0.0))
        for name in ('wb_gains', 'distortion_gains'):
            gains = getattr(self, name)
            if gains is not None:
                gains = tuple(float(g) for g in gains)
                if len(gains) != 2 or min(gains) < 1:
                    raise ValueError(f"{name} must be two gains >= 1, got {gains}.")
                object.__setattr__(self, name, gains)

    @property
    def sequence_length(self) -> int:
        return 2 * self.n - 1

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['isp'] = self.isp.to_dict()
        data['noise'] = None if self.noise is None else self.noise.to_dict()
        for name in ('wb_red_range', 'wb_blue_range', 'distortion_range', 'shot_noise_range',
                     'wb_gains', 'distortion_gains'):
            data[name] = None if data[name] is None else list(data[name])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'SynthConfig':
        check_keys(cls, data)
        data = dict(data)
        if isinstance(data.get('isp'), dict):
            data['isp'] = IspConfig.from_dict(data['isp'])
        if isinstance(data.get('noise'), dict):
            data['noise'] = NoiseParams(**data['noise'])
        return cls(**data)
