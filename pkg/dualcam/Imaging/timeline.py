from dataclasses import dataclass, field


@dataclass(frozen=True)
class CaptureTimeline:
    """
    Temporal layout of one dual-camera capture.

    :param t0: Start of the long exposure in seconds.
    :param dt_long: Long exposure time.
    :param dt_short: Exposure time of each burst frame.
    :param frame_starts: Start time of every burst frame, in order.
    """
    t0: float
    dt_long: float
    dt_short: float
    frame_starts: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, 'frame_starts', tuple(float(t) for t in self.frame_starts))
        n = len(self.frame_starts)
        if n < 1 or n % 2 == 0:
            raise ValueError(f"Burst size must be odd, got {n} frames.")
        if self.dt_long <= 0 or self.dt_short <= 0:
            raise ValueError("Exposure times must be positive.")

        # Small tolerance for accumulated float error in derived timelines.
        eps = 1e-12
        if self.frame_starts[0] < self.t0 - eps:
            raise ValueError(f"First burst frame starts at {self.frame_starts[0]} before the long exposure ({self.t0}).")
        if self.frame_starts[-1] + self.dt_short > self.t0 + self.dt_long + eps:
            raise ValueError("Last burst frame ends after the long exposure.")
        for prev, cur in zip(self.frame_starts, self.frame_starts[1:]):
            if cur - (prev + self.dt_short) < -eps:
                raise ValueError(f"Burst frames overlap: frame at {prev} runs past the next start {cur}.")

    @property
    def n(self) -> int:
        return len(self.frame_starts)

    @property
    def reference_index(self) -> int:
        """0-based index of the middle frame."""
        return self.n // 2

    @property
    def readout_gaps(self) -> list[float]:
        return [cur - (prev + self.dt_short) for prev, cur in zip(self.frame_starts, self.frame_starts[1:])]

    @classmethod
    def from_sequence(cls, n: int, frame_rate: float = 240.0) -> 'CaptureTimeline':
        """
        Timeline of a burst of `n` frames subsampled from 2n-1 consecutive frames.

        Each source frame lasts 1/frame_rate. The long exposure covers all of them, burst frame i
        starts at source frame 2i, so every read-out gap is one frame period.
        """
        if frame_rate <= 0:
            raise ValueError(f"Frame rate must be positive, got {frame_rate}.")
        period = 1.0 / frame_rate
        return cls(
            t0=0.0,
            dt_long=(2 * n - 1) * period,
            dt_short=period,
            frame_starts=tuple(2 * i * period for i in range(n)),
        )

    def to_dict(self) -> dict:
        return {
            't0': self.t0,
            'dt_long': self.dt_long,
            'dt_short': self.dt_short,
            'frame_starts': list(self.frame_starts),
        }
