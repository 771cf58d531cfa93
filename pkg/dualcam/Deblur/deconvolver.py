import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from dualcam.Deblur.blur_operator import TrajectoryBlur
from dualcam.Deblur.trajectory import TrajectoryField
from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer
from dualcam.Isp.isp import linear_to_srgb, srgb_to_linear
from dualcam.Isp.isp_config import IspConfig, check_keys

logger = logging.getLogger(__name__)

METHODS = ('landweber', 'richardson_lucy')
RL_FLOOR = 1e-6


@dataclass(frozen=True)
class DeconvOptions:
    """
    Non-blind deconvolution settings.

    :param max_iters: Iteration cap.
    :param tol: Stop once the data fit decreases by less than this fraction of its previous value.
    :param step: Landweber step; None picks 1.9 / ||A||^2 from a power-method estimate.
    :param nonneg: Clamp every iterate to [0, 1].
    :param method: 'landweber' or 'richardson_lucy'.
    :param power_iters: Power-method iterations for the automatic step.
    """
    max_iters: int = 200
    tol: float = 1e-5
    step: float | None = None
    nonneg: bool = True
    method: str = 'landweber'
    power_iters: int = 20

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}.")
        if self.tol < 0:
            raise ValueError(f"tol must be non-negative, got {self.tol}.")
        if self.step is not None and self.step <= 0:
            raise ValueError(f"Landweber step must be positive, got {self.step}.")
        if self.method not in METHODS:
            raise ValueError(f"Unknown deconvolution method '{self.method}'. Expected one of {METHODS}.")
        if self.power_iters < 1:
            raise ValueError(f"power_iters must be >= 1, got {self.power_iters}.")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'DeconvOptions':
        check_keys(cls, data)
        return cls(**data)


@dataclass
class DeconvResult:
    image: ImageBuffer
    trace: list[float] = field(default_factory=list)
    iterations: int = 0
    step: float | None = None


def _objective(blurred: np.ndarray, operator: TrajectoryBlur, x: np.ndarray) -> tuple[np.ndarray, float]:
    residual = blurred - operator.direct(x)
    return residual, float(np.vdot(residual, residual))


def _landweber(blurred: np.ndarray, operator: TrajectoryBlur, opts: DeconvOptions) -> tuple[np.ndarray, list[float], int, float]:
    x = blurred.copy()
    residual, objective = _objective(blurred, operator, x)
    trace = [objective]
    if objective == 0.0:
        return x, trace, 0, 0.0

    if opts.step is None:
        norm = operator.norm(opts.power_iters)
        step = 1.9 / max(norm ** 2, 1e-12)
    else:
        step = opts.step
    logger.debug(f"[Deblur] Landweber step {step:.4f}, initial data fit {objective:.6e}")

    iterations = 0
    while iterations < opts.max_iters:
        iterations += 1
        candidate = x + step * operator.adjoint(residual)
        if opts.nonneg:
            candidate = np.clip(candidate, 0.0, 1.0)
        candidate_residual, candidate_objective = _objective(blurred, operator, candidate)

        if candidate_objective > objective:
            step *= 0.5
            logger.warning(f"[Deblur] Data fit rose at iteration {iterations}, halving step to {step:.4f}.")
            continue

        decrease = objective - candidate_objective
        x, residual, objective = candidate, candidate_residual, candidate_objective
        trace.append(objective)
        logger.debug(f"[Deblur] Iteration {iterations}: data fit {objective:.6e}")
        if objective == 0.0 or decrease < opts.tol * trace[-2]:
            break
    return x, trace, iterations, step


def _richardson_lucy(blurred: np.ndarray, operator: TrajectoryBlur, opts: DeconvOptions) -> tuple[np.ndarray, list[float], int]:
    data = np.maximum(blurred, RL_FLOOR)
    x = data.copy()
    _, objective = _objective(data, operator, x)
    trace = [objective]
    if objective == 0.0:
        return blurred.copy(), trace, 0

    normalizer = np.maximum(operator.adjoint(np.ones_like(data)), RL_FLOOR)
    iterations = 0
    while iterations < opts.max_iters:
        iterations += 1
        ratio = data / np.maximum(operator.direct(x), RL_FLOOR)
        x = x * operator.adjoint(ratio) / normalizer
        if opts.nonneg:
            x = np.clip(x, 0.0, 1.0)
        _, current = _objective(data, operator, x)
        change = abs(trace[-1] - current)
        trace.append(current)
        logger.debug(f"[Deblur] Richardson-Lucy iteration {iterations}: data fit {current:.6e}")
        if current == 0.0 or change < opts.tol * trace[-2]:
            break
    return x, trace, iterations


def deconvolve_with_trace(long: ImageBuffer, traj: TrajectoryField, opts: DeconvOptions = DeconvOptions(),
                          isp: IspConfig = IspConfig()) -> DeconvResult:
    """
    Invert the trajectory blur of the long exposure and keep the data-fit trace.

    sRGB input is linearised with `isp` first and mapped back afterwards. Linear input is
    deconvolved as is.

    :param long: Blurry long exposure, values in [0, 1].
    :param traj: Trajectory field of the same size.
    :param opts: Iteration settings.
    :param isp: Gamma and tone curve used for the sRGB <-> linear conversions.
    :raises ValueError: On a shape mismatch or an unsupported colour space.
    """
    if (long.height, long.width) != traj.shape:
        raise ValueError(f"deconvolve: image {long.width}x{long.height} does not match trajectory {traj.width}x{traj.height}.")
    if long.space == ColorSpace.SRGB:
        linear = srgb_to_linear(long, isp)
    elif long.space == ColorSpace.LINEAR_RGB:
        linear = long
    else:
        raise ValueError(f"deconvolve expects an srgb or linear_rgb image, got {long.space.value}.")

    operator = TrajectoryBlur(traj)
    if opts.method == 'landweber':
        data, trace, iterations, step = _landweber(linear.data, operator, opts)
    else:
        data, trace, iterations = _richardson_lucy(linear.data, operator, opts)
        step = None

    if iterations == 0:
        logger.info("[Deblur] Zero residual, returning the long exposure unchanged.")
        return DeconvResult(long, trace, 0, step)

    logger.info(f"[Deblur] {opts.method} stopped after {iterations} iterations, data fit {trace[0]:.4e} -> {trace[-1]:.4e}")
    restored = linear.with_data(data)
    if long.space == ColorSpace.SRGB:
        restored = linear_to_srgb(restored, isp)
    return DeconvResult(restored, trace, iterations, step)


def deconvolve(long: ImageBuffer, traj: TrajectoryField, opts: DeconvOptions = DeconvOptions(),
               isp: IspConfig = IspConfig()) -> ImageBuffer:
    return deconvolve_with_trace(long, traj, opts, isp).image
