import os

import numpy as np
import pytest

from dualcam.Imaging.image_buffer import ImageBuffer
from dualcam.Imaging.image_io import save_image
from dualcam.Metrics.evaluator import evaluate_dir, evaluate_pair
from dualcam.Metrics.metrics import PSNR_CAP, psnr, ssim


def flat(value: float, size: int = 32, channels: int = 3) -> ImageBuffer:
    return ImageBuffer(np.full((size, size, channels), value))


def test_psnr_values():
    assert psnr(flat(0.5), flat(0.5)) == PSNR_CAP
    assert psnr(flat(0.5), flat(0.6)) == pytest.approx(20.0)
    assert psnr(flat(0.5), flat(0.51)) == pytest.approx(40.0)
    assert psnr(flat(0.2), flat(0.7)) == psnr(flat(0.7), flat(0.2))
    assert psnr(flat(0.5), flat(0.5 + 1e-12)) == PSNR_CAP


def test_psnr_drops_with_noise(texture, rng):
    scores = [psnr(texture.with_data(texture.data + rng.normal(0.0, sigma, texture.shape)), texture)
              for sigma in (0.01, 0.03, 0.1)]
    assert scores[0] > scores[1] > scores[2]


def test_ssim_values(texture, rng):
    assert ssim(texture, texture) == pytest.approx(1.0)
    expected = (2 * 0.5 * 0.6 + 1e-4) / (0.25 + 0.36 + 1e-4)
    assert ssim(flat(0.5), flat(0.6)) == pytest.approx(expected, rel=1e-6)

    noisy = texture.with_data(texture.data + rng.normal(0.0, 0.05, texture.shape))
    assert ssim(texture, noisy) == pytest.approx(ssim(noisy, texture))
    assert ssim(texture, noisy) < 1.0


def test_metric_input_checks():
    with pytest.raises(ValueError):
        ssim(flat(0.5, size=8), flat(0.5, size=8))
    with pytest.raises(ValueError):
        psnr(flat(0.5, size=16), flat(0.5, size=32))


def test_evaluate_pair(tmp_path, texture):
    path = str(tmp_path / 'a.png')
    save_image(texture, path)
    report = evaluate_pair(path, path)
    assert report.to_dict() == {'psnr': PSNR_CAP, 'ssim': pytest.approx(1.0)}


def test_evaluate_dir(tmp_path, texture):
    pred_dir, gt_dir = tmp_path / 'pred', tmp_path / 'gt'
    pred_dir.mkdir()
    gt_dir.mkdir()
    save_image(flat(0.5), str(gt_dir / 'x.png'))
    save_image(flat(0.5), str(gt_dir / 'y.png'))
    save_image(flat(0.5), str(pred_dir / 'x.png'))
    save_image(flat(0.6), str(pred_dir / 'y.png'))

    report = evaluate_dir(str(pred_dir), str(gt_dir), threads=2)
    assert list(report.entries['name']) == ['x.png', 'y.png']
    assert report.psnr == pytest.approx(np.mean(report.entries['psnr']))
    assert report.entries['psnr'].iloc[0] == PSNR_CAP
    assert report.entries['psnr'].iloc[1] == pytest.approx(20.0, abs=0.01)


def test_evaluate_dir_errors(tmp_path, texture):
    empty = tmp_path / 'empty'
    empty.mkdir()
    with pytest.raises(ValueError):
        evaluate_dir(str(empty), str(empty))
    with pytest.raises(FileNotFoundError):
        evaluate_dir(str(tmp_path / 'nope'), str(empty))

    save_image(texture, os.path.join(str(tmp_path), 'only.png'))
    with pytest.raises(FileNotFoundError):
        evaluate_dir(str(tmp_path), str(empty))
