import numpy as np
from skimage.metrics import mean_squared_error, structural_similarity

from dualcam.Imaging.image_buffer import ImageBuffer, require_same_shape

PSNR_CAP = 99.0
SSIM_SIGMA = 1.5
# Window side scikit-image derives from a Gaussian of sigma 1.5.
SSIM_WINDOW = 11


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """
    Peak signal-to-noise ratio in dB for peak 1.0, over all channels. Identical images score PSNR_CAP.
    """
    require_same_shape(a, b, operation='psnr')
    mse = mean_squared_error(a.data, b.data)
    if mse == 0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP))


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """
    SSIM of the Rec.601 luma planes: 11x11 Gaussian window with sigma 1.5, K1 = 0.01, K2 = 0.03,
    dynamic range 1, averaged over positions where the window fits.

    :raises ValueError: On a shape mismatch or an image smaller than the window.
    """
    require_same_shape(a, b, operation='ssim')
    if min(a.height, a.width) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.width}x{a.height}.")
    return float(structural_similarity(a.luma(), b.luma(), data_range=1.0, gaussian_weights=True,
                                       sigma=SSIM_SIGMA, use_sample_covariance=False, K1=0.01, K2=0.03))
