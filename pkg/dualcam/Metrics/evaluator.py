import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from glob import glob

import pandas as pd

from dualcam.Imaging.image_io import load_image
from dualcam.Metrics.metrics import psnr, ssim

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    """
    PSNR (dB) and SSIM of one image pair, or their means over a directory with the per-image table.
    """
    psnr: float
    ssim: float
    entries: pd.DataFrame | None = None

    def to_dict(self) -> dict:
        return {'psnr': self.psnr, 'ssim': self.ssim}


def evaluate_pair(pred_path: str, gt_path: str) -> EvalReport:
    pred = load_image(pred_path)
    gt = load_image(gt_path)
    return EvalReport(psnr(pred, gt), ssim(pred, gt))


def evaluate_dir(pred_dir: str, gt_dir: str, threads: int = 1) -> EvalReport:
    """
    Score every PNG of pred_dir against the file of the same name in gt_dir.

    Raises:
        FileNotFoundError: If a directory or a ground-truth counterpart is missing.
        ValueError: If pred_dir holds no PNG files.
    """
    for directory in (pred_dir, gt_dir):
        if not os.path.isdir(directory):
            raise FileNotFoundError(f"Directory not found: {directory}")
    names = sorted(os.path.basename(path) for path in glob(os.path.join(pred_dir, '*.png')))
    if not names:
        raise ValueError(f"No PNG images found in {pred_dir}.")
    missing = [os.path.join(gt_dir, name) for name in names if not os.path.isfile(os.path.join(gt_dir, name))]
    if missing:
        raise FileNotFoundError(f"Ground truth missing for: {missing}")

    def score(name: str) -> dict:
        report = evaluate_pair(os.path.join(pred_dir, name), os.path.join(gt_dir, name))
        return {'name': name, **report.to_dict()}

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(score, names))

    entries = pd.DataFrame(rows, columns=['name', 'psnr', 'ssim'])
    means = entries[['psnr', 'ssim']].mean()
    logger.info(f"[Eval] {len(entries)} images: mean PSNR {means['psnr']:.2f} dB, mean SSIM {means['ssim']:.4f}")
    return EvalReport(float(means['psnr']), float(means['ssim']), entries)
