"""
Spatially varying trajectory blur and its exact adjoint.

The forward operator A averages K^2 bilinear samples of the sharp image along each pixel's
trajectory. Its transpose splats every observed value back to the same taps with the same
weights.
"""
import numpy as np

from dualcam.Deblur.trajectory import TrajectoryField
from dualcam.Flow.warp import bilinear_taps, gather, pixel_grid
from dualcam.Imaging.image_buffer import ImageBuffer


class TrajectoryBlur:
    """
    Linear operator A for one trajectory field, with precomputed taps.
    """

    def __init__(self, traj: TrajectoryField):
        self.traj = traj
        self.height, self.width = traj.shape
        self.taps = traj.taps
        self.is_identity = traj.is_static()

        xs, ys = pixel_grid(self.height, self.width)
        sample_x = xs[np.newaxis] + np.moveaxis(traj.offsets[:, :, :, 0], 2, 0)
        sample_y = ys[np.newaxis] + np.moveaxis(traj.offsets[:, :, :, 1], 2, 0)
        # 4 x K^2 x H x W
        self.indices, self.weights = bilinear_taps(sample_x, sample_y, self.width, self.height)

    def _check(self, data: np.ndarray) -> None:
        if data.shape[:2] != (self.height, self.width):
            raise ValueError(f"Image {data.shape[1]}x{data.shape[0]} does not match trajectory {self.width}x{self.height}.")

    def sample(self, data: np.ndarray) -> np.ndarray:
        """K^2 x H x W x C stack; plane k holds data sampled at p + offset_k(p)."""
        self._check(data)
        return gather(data, self.indices, self.weights)

    def direct(self, data: np.ndarray) -> np.ndarray:
        self._check(data)
        if self.is_identity:
            return data.copy()
        return self.sample(data).mean(axis=0)

    def adjoint(self, data: np.ndarray) -> np.ndarray:
        self._check(data)
        if self.is_identity:
            return data.copy()
        flat_indices = self.indices.ravel()
        out = np.empty_like(data, dtype=np.float64)
        for c in range(data.shape[2]):
            contributions = self.weights * data[np.newaxis, np.newaxis, :, :, c] / self.taps
            out[:, :, c] = np.bincount(flat_indices, weights=contributions.ravel(),
                                       minlength=self.height * self.width).reshape(self.height, self.width)
        return out

    def norm(self, iterations: int = 20, seed: int = 0) -> float:
        """
        Power-method estimate of the spectral norm ||A||_2.
        """
        rng = np.random.default_rng(seed)
        x = rng.random((self.height, self.width, 1))
        estimate = 0.0
        for _ in range(iterations):
            y = self.adjoint(self.direct(x))
            estimate = np.sqrt(np.vdot(x, y) / np.vdot(x, x))
            y_norm = np.linalg.norm(y)
            if y_norm == 0:
                return 0.0
            x = y / y_norm
        return float(estimate)


def blur_apply(sharp: ImageBuffer, traj: TrajectoryField) -> ImageBuffer:
    """out(p) = mean_k bilinear(sharp, p + offset_k(p)), edge-clamped."""
    return sharp.with_data(TrajectoryBlur(traj).direct(sharp.data))


def blur_adjoint(img: ImageBuffer, traj: TrajectoryField) -> ImageBuffer:
    """Transpose of blur_apply: each value splats img(p) / K^2 onto the bilinear taps of p + offset_k(p)."""
    return img.with_data(TrajectoryBlur(traj).adjoint(img.data))


def sample_deformable(img: ImageBuffer, traj: TrajectoryField) -> np.ndarray:
    """K^2 x H x W x C stack of deformable samples; its mean over axis 0 is blur_apply."""
    return TrajectoryBlur(traj).sample(img.data)
