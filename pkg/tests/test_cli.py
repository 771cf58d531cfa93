import json
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
import yaml

from dualcam.Flow.flo_io import FLO_MAGIC, write_flow_dir
from dualcam.Fusion.restorer import Restorer
from dualcam.Imaging.image_buffer import ImageBuffer
from dualcam.Imaging.image_io import load_image, save_image
from dualcam.Imaging.tensor_io import read_tensor
from dualcam.Project.cli import DEBLURRED_FILE, DENOISED_FILE, WEIGHTS_FILE, main
from dualcam.Project.cli_config import CliConfig
from dualcam.Synthesizer.dataset_builder import triplet_dir_name
from dualcam.Synthesizer.triplet import GT_FILE, LONG_FILE, burst_file
from dualcam.Synthesizer.validator import list_burst_files

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'configs')


def write_frames(directory: str, frames) -> None:
    os.makedirs(directory, exist_ok=True)
    for i, frame in enumerate(frames):
        save_image(frame, os.path.join(directory, f'frame_{i:04d}.png'))


def last_summary(capsys) -> dict:
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


@pytest.fixture
def triplet_dir(tmp_path, moving_sequence):
    input_dir, output_dir = str(tmp_path / 'frames'), str(tmp_path / 'dataset')
    write_frames(input_dir, moving_sequence(9, 64, velocity=(0.5, 0.25)))
    assert main(['synth', '--input-dir', input_dir, '--output-dir', output_dir, '--threads', '1', '--seed', '5']) == 0
    return os.path.join(output_dir, triplet_dir_name(0))


def test_synth_writes_one_triplet(tmp_path, moving_sequence, capsys):
    input_dir, output_dir = str(tmp_path / 'frames'), str(tmp_path / 'dataset')
    write_frames(input_dir, moving_sequence(9, 32))
    assert main(['synth', '--input-dir', input_dir, '--output-dir', output_dir, '--threads', '2']) == 0
    summary = last_summary(capsys)
    assert summary['triplets'] == 1 and summary['frames'] == 9
    assert 'seconds' in summary
    triplet = os.path.join(output_dir, triplet_dir_name(0))
    assert len(list_burst_files(triplet)) == 5
    assert os.path.isfile(os.path.join(triplet, LONG_FILE))


def test_synth_rejects_incomplete_sequence(tmp_path, moving_sequence):
    input_dir, output_dir = str(tmp_path / 'frames'), str(tmp_path / 'dataset')
    write_frames(input_dir, moving_sequence(8, 32))
    assert main(['synth', '--input-dir', input_dir, '--output-dir', output_dir]) == 2
    assert not os.path.exists(output_dir)


def test_synth_failure_cleans_existing_output_dir(tmp_path, moving_sequence, monkeypatch):
    input_dir, output_dir = str(tmp_path / 'frames'), str(tmp_path / 'dataset')
    write_frames(input_dir, moving_sequence(18, 32))
    os.makedirs(output_dir)
    keep = os.path.join(output_dir, 'notes.txt')
    with open(keep, 'w', encoding='utf-8') as file:
        file.write('keep me')

    def failing_dump(*args, **kwargs):
        raise OSError("disk full")

    monkeypatch.setattr(yaml, 'safe_dump', failing_dump)
    assert main(['synth', '--input-dir', input_dir, '--output-dir', output_dir, '--threads', '1']) == 1
    assert sorted(os.listdir(output_dir)) == ['notes.txt']
    assert not os.path.exists(os.path.join(output_dir, triplet_dir_name(1)))


def test_flow_command(triplet_dir, tmp_path, capsys):
    out = str(tmp_path / 'flow.flo')
    args = ['flow', '--ref', os.path.join(triplet_dir, burst_file(2)),
            '--tgt', os.path.join(triplet_dir, burst_file(3)), '--out', out]
    assert main(args) == 0
    with open(out, 'rb') as file:
        assert np.frombuffer(file.read(4), dtype='<f4')[0] == FLO_MAGIC
    assert last_summary(capsys)['width'] == 64


def test_flow_failure_exits_with_one(tmp_path):
    small = str(tmp_path / 'small.png')
    save_image(ImageBuffer(np.full((16, 16, 3), 0.5)), small)
    out = str(tmp_path / 'flow.flo')
    assert main(['flow', '--ref', small, '--tgt', small, '--out', out]) == 1
    assert not os.path.exists(out)


def test_deblur_command(triplet_dir, tmp_path, capsys):
    out = str(tmp_path / 'deblurred.png')
    trajectory = str(tmp_path / 'trajectory.dckt')
    args = ['deblur', '--long', os.path.join(triplet_dir, LONG_FILE), '--burst-dir', triplet_dir,
            '--out', out, '--iters', '50', '--threads', '2', '--trajectory-out', trajectory]
    assert main(args) == 0
    summary = last_summary(capsys)
    assert summary['non_increasing'] is True
    assert 1 <= summary['iterations'] <= 50
    assert load_image(out).shape == (64, 64, 3)
    assert read_tensor(trajectory).shape == (64, 64, 9, 2)


def test_denoise_command(triplet_dir, tmp_path, capsys):
    out = str(tmp_path / 'denoised.png')
    weights = str(tmp_path / 'weights.dckt')
    assert main(['denoise', '--burst-dir', triplet_dir, '--out', out, '--weights-out', weights]) == 0
    assert last_summary(capsys)['frames'] == 5
    tensor = read_tensor(weights)
    assert tensor.shape == (5, 64, 64)
    np.testing.assert_allclose(tensor.sum(axis=0), 1.0, atol=1e-5)


def test_restore_with_intermediates(triplet_dir, tmp_path, capsys):
    out_dir = tmp_path / 'restored'
    out = str(out_dir / 'out.png')
    args = ['restore', '--long', os.path.join(triplet_dir, LONG_FILE), '--burst-dir', triplet_dir,
            '--out', out, '--iters', '20', '--dump-intermediates']
    assert main(args) == 0
    assert last_summary(capsys)['flows'] == 'estimated'
    for name in ('out.png', DEBLURRED_FILE, DENOISED_FILE, WEIGHTS_FILE):
        assert (out_dir / name).is_file()


def test_restore_with_flow_files_matches_estimation(triplet_dir, tmp_path, capsys):
    burst = [load_image(path) for path in list_burst_files(triplet_dir)]
    with ThreadPoolExecutor(max_workers=1) as pool:
        flows = Restorer().estimate_flows(burst, pool)
    flow_dir = str(tmp_path / 'flows')
    write_flow_dir(flows, flow_dir)

    base = ['restore', '--long', os.path.join(triplet_dir, LONG_FILE), '--burst-dir', triplet_dir, '--iters', '20']
    estimated, replayed = str(tmp_path / 'a.png'), str(tmp_path / 'b.png')
    assert main(base + ['--out', estimated, '--threads', '3']) == 0
    assert main(base + ['--out', replayed, '--flow-dir', flow_dir, '--threads', '1']) == 0
    assert last_summary(capsys)['flows'] == 'file'
    with open(estimated, 'rb') as a, open(replayed, 'rb') as b:
        assert a.read() == b.read()


def test_restore_names_missing_burst_file(triplet_dir, tmp_path, caplog):
    os.remove(os.path.join(triplet_dir, burst_file(1)))
    out = str(tmp_path / 'out.png')
    args = ['restore', '--long', os.path.join(triplet_dir, LONG_FILE), '--burst-dir', triplet_dir, '--out', out]
    assert main(args) == 2
    assert burst_file(1) in caplog.text
    assert not os.path.exists(out)


def test_eval_prints_bare_report(triplet_dir, capsys):
    gt = os.path.join(triplet_dir, GT_FILE)
    assert main(['eval', '--pred', gt, '--gt', gt]) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == '{"psnr":99.0,"ssim":1.0}'


def test_eval_directories(triplet_dir, tmp_path, capsys):
    pred_dir, gt_dir = tmp_path / 'pred', tmp_path / 'gt'
    pred_dir.mkdir()
    gt_dir.mkdir()
    gt = load_image(os.path.join(triplet_dir, GT_FILE))
    long = load_image(os.path.join(triplet_dir, LONG_FILE))
    save_image(gt, str(gt_dir / 'a.png'))
    save_image(long, str(pred_dir / 'a.png'))

    report = str(tmp_path / 'report.json')
    assert main(['eval', '--pred', str(pred_dir), '--gt', str(gt_dir), '--out', report]) == 0
    summary = last_summary(capsys)
    assert set(summary) == {'psnr', 'ssim'}
    with open(report, encoding='utf-8') as file:
        details = json.load(file)
    assert details['images'][0]['name'] == 'a.png'
    assert details['psnr'] == pytest.approx(summary['psnr'])


def test_usage_errors(tmp_path, triplet_dir):
    gt = os.path.join(triplet_dir, GT_FILE)
    assert main(['eval', '--pred', str(tmp_path / 'nope.png'), '--gt', gt]) == 2
    assert main(['restore', '--long', gt]) == 2
    assert main(['unknown']) == 2

    bad_config = tmp_path / 'bad.yaml'
    bad_config.write_text(yaml.safe_dump({'flow': {'radius': 3}}), encoding='utf-8')
    assert main(['eval', '--pred', gt, '--gt', gt, '--config', str(bad_config)]) == 2
    assert main(['eval', '--pred', gt, '--gt', gt, '--config', str(tmp_path / 'missing.yaml')]) == 2


def test_default_config_file_matches_defaults():
    assert CliConfig.from_file(os.path.join(CONFIG_DIR, 'default.yaml')) == CliConfig()
    assert CliConfig.from_file(None) == CliConfig()


def test_cli_config_round_trip(tmp_path):
    config = CliConfig().with_overrides('deconv', max_iters=30, method=None).with_overrides('isp', gamma=2.4)
    assert config.deconv.max_iters == 30
    assert config.synth.isp.gamma == 2.4
    path = str(tmp_path / 'config.yaml')
    config.to_yaml(path)
    assert CliConfig.from_file(path) == config


def test_cli_config_rejects_misplaced_sections():
    with pytest.raises(ValueError):
        CliConfig.from_dict({'network': {}})
    with pytest.raises(ValueError):
        CliConfig.from_dict({'synth': {'isp': {'gamma': 2.0}}})
    with pytest.raises(ValueError):
        CliConfig.from_dict({'merge': [1, 2]})
