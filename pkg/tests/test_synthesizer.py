import json
import os

import numpy as np
import pytest
import yaml

from dualcam.Flow.flow_field import FlowField
from dualcam.Flow.warp import backwarp
from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer
from dualcam.Imaging.image_io import save_image
from dualcam.Imaging.timeline import CaptureTimeline
from dualcam.Isp.isp import mosaic
from dualcam.Metrics.metrics import psnr
from dualcam.Noise.noise_params import NoiseParams
from dualcam.Noise.rng import derive_seed
from dualcam.Synthesizer.dataset_builder import INDEX_FILE, DatasetBuilder, triplet_dir_name
from dualcam.Synthesizer.synth_config import SynthConfig
from dualcam.Synthesizer.synthesizer import (apply_color_distortion, form_long_exposure, replay_config,
                                             subsample_burst, synthesize_triplet)
from dualcam.Synthesizer.triplet import META_FILE, SynthMetadata, burst_file, read_triplet, write_triplet
from dualcam.Synthesizer.validator import find_missing_burst, validate_triplet_dir

META_KEYS = {'n', 'ratio', 'wb_red_gain', 'wb_blue_gain', 'distort_red', 'distort_blue',
             'sigma_s', 'sigma_r2', 'gamma', 'ccm', 'seed', 'source_frames'}


def test_subsample_keeps_every_other_frame():
    assert subsample_burst(list(range(9))) == [0, 2, 4, 6, 8]
    assert subsample_burst(['only']) == ['only']
    with pytest.raises(ValueError):
        subsample_burst(list(range(8)))


def test_long_exposure_is_the_mean():
    frames = [ImageBuffer(np.full((2, 2, 3), v), ColorSpace.LINEAR_RGB) for v in (0.1, 0.2, 0.6)]
    np.testing.assert_allclose(form_long_exposure(frames).data, 0.3)
    with pytest.raises(ValueError):
        form_long_exposure([])


def test_long_exposure_is_linear_in_the_frames(rng):
    frames = [ImageBuffer(rng.uniform(0.0, 0.5, (8, 8, 3)), ColorSpace.LINEAR_RGB) for _ in range(9)]
    scaled = [frame.with_data(1.7 * frame.data) for frame in frames]
    long = form_long_exposure(frames)
    np.testing.assert_allclose(form_long_exposure(scaled).data, 1.7 * long.data, atol=1e-6)
    np.testing.assert_allclose(mosaic(form_long_exposure(scaled)).data, 1.7 * mosaic(long).data, atol=1e-6)


def test_colour_distortion_clamps():
    img = ImageBuffer(np.full((2, 2, 3), 0.95), ColorSpace.LINEAR_RGB)
    out = apply_color_distortion(img, 1.1, 1.05)
    np.testing.assert_allclose(out.data[:, :, 0], 1.0)
    np.testing.assert_allclose(out.data[:, :, 1], 0.95)
    np.testing.assert_allclose(out.data[:, :, 2], 0.9975)
    with pytest.raises(ValueError):
        apply_color_distortion(img, 0.9, 1.0)


def test_degenerate_capture_matches_ground_truth(texture):
    cfg = SynthConfig(n=1, ratio=1.0, noise=NoiseParams.zero(), wb_gains=(1.0, 1.0), distortion_gains=(1.0, 1.0))
    triplet = synthesize_triplet([texture], cfg)
    assert len(triplet.burst) == 1
    assert psnr(triplet.long, triplet.gt) >= 40.0
    assert psnr(triplet.burst[0], triplet.gt) >= 40.0


def test_triplet_structure_and_metadata(moving_sequence):
    frames = moving_sequence(9, 32)
    triplet = synthesize_triplet(frames, SynthConfig(seed=5), source_frames=[f'{i}.png' for i in range(9)])
    assert len(triplet.burst) == 5
    assert triplet.reference_index == 2
    assert all(frame.space == ColorSpace.SRGB for frame in triplet.burst + [triplet.long, triplet.gt])

    meta = triplet.meta.to_dict()
    assert set(meta) == META_KEYS
    assert 1.9 <= meta['wb_red_gain'] <= 2.4
    assert 1.5 <= meta['wb_blue_gain'] <= 1.9
    assert 1.0 <= meta['distort_red'] <= 1.1
    assert 1.25e-4 <= meta['sigma_s'] <= 2e-4
    assert meta['source_frames'][0] == '0.png'
    assert triplet.meta.timeline.n == 5


def test_metadata_rebuilds_the_timeline(moving_sequence):
    meta = synthesize_triplet(moving_sequence(9, 32), SynthConfig(seed=5)).meta
    assert 'timeline' not in meta.to_dict()
    assert SynthMetadata.from_dict(meta.to_dict()).timeline == CaptureTimeline.from_sequence(5, 240.0)
    assert SynthMetadata.from_dict(meta.to_dict()).timeline == meta.timeline


def test_wrong_frame_count_rejected(moving_sequence):
    with pytest.raises(ValueError, match='Expected 9 frames'):
        synthesize_triplet(moving_sequence(8, 32), SynthConfig())


def test_same_seed_is_bit_identical(moving_sequence):
    frames = moving_sequence(9, 32)
    a = synthesize_triplet(frames, SynthConfig(seed=3))
    b = synthesize_triplet(frames, SynthConfig(seed=3))
    c = synthesize_triplet(frames, SynthConfig(seed=4))
    np.testing.assert_array_equal(a.long.data, b.long.data)
    for x, y in zip(a.burst, b.burst):
        np.testing.assert_array_equal(x.data, y.data)
    assert not np.array_equal(a.long.data, c.long.data)


def test_metadata_replay_reproduces_triplet(moving_sequence):
    frames = moving_sequence(9, 32)
    original = synthesize_triplet(frames, SynthConfig(seed=17))
    meta = SynthMetadata.from_dict(json.loads(json.dumps(original.meta.to_dict())))
    replayed = synthesize_triplet(frames, replay_config(meta))
    np.testing.assert_array_equal(replayed.long.data, original.long.data)
    np.testing.assert_array_equal(replayed.gt.data, original.gt.data)
    for x, y in zip(replayed.burst, original.burst):
        np.testing.assert_array_equal(x.data, y.data)


def test_static_scene_brightness_is_preserved(texture):
    frames = [texture] * 9
    cfg = SynthConfig(seed=1, distortion_gains=(1.0, 1.0))
    triplet = synthesize_triplet(frames, cfg)
    gt_mean = triplet.gt.data.mean()
    assert triplet.long.data.mean() == pytest.approx(gt_mean, abs=0.01)
    for frame in triplet.burst:
        assert frame.data.mean() == pytest.approx(gt_mean, abs=0.02)


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_moving_scene_brightness_is_preserved(moving_sequence, seed):
    triplet = synthesize_triplet(moving_sequence(9, 64), SynthConfig(seed=seed))
    burst_mean = np.mean([frame.data.mean() for frame in triplet.burst])
    assert abs(burst_mean / triplet.long.data.mean() - 1.0) <= 0.05


def test_synth_config_validation_and_dict():
    with pytest.raises(ValueError):
        SynthConfig(n=4)
    with pytest.raises(ValueError):
        SynthConfig(ratio=0.5)
    with pytest.raises(ValueError):
        SynthConfig(wb_red_range=(2.4, 1.9))
    with pytest.raises(ValueError):
        SynthConfig(wb_gains=(0.5, 1.0))
    cfg = SynthConfig(n=3, noise=NoiseParams(1e-4, 1e-6), wb_gains=(2.0, 1.6))
    assert SynthConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match='Unknown'):
        SynthConfig.from_dict({'burst_size': 5})


def test_write_read_and_validate_triplet(tmp_path, moving_sequence):
    triplet = synthesize_triplet(moving_sequence(9, 32), SynthConfig(seed=2))
    directory = str(tmp_path / 'triplet')
    write_triplet(triplet, directory)
    assert validate_triplet_dir(directory)

    loaded = read_triplet(directory)
    assert len(loaded.burst) == 5
    assert loaded.meta.to_dict() == triplet.meta.to_dict()
    np.testing.assert_allclose(loaded.gt.data, triplet.gt.data, atol=0.5 / 65535 + 1e-12)

    os.remove(os.path.join(directory, burst_file(3)))
    assert not validate_triplet_dir(directory)
    assert find_missing_burst(directory, 5) == [os.path.join(directory, burst_file(3))]


def test_validator_flags_missing_metadata(tmp_path):
    assert not validate_triplet_dir(str(tmp_path))


def write_frames(directory, frames):
    os.makedirs(directory, exist_ok=True)
    for i, frame in enumerate(frames):
        save_image(frame, os.path.join(directory, f'frame_{i:04d}.png'))


def test_dataset_builder(tmp_path, moving_sequence):
    input_dir, output_dir = str(tmp_path / 'frames'), str(tmp_path / 'out')
    write_frames(input_dir, moving_sequence(18, 32))
    entries = DatasetBuilder(input_dir, output_dir, SynthConfig(seed=42), threads=2).run()

    assert [e['triplet'] for e in entries] == [triplet_dir_name(0), triplet_dir_name(1)]
    assert entries[1]['seed'] == derive_seed(42, 1)
    assert entries[1]['source_frames'][0] == 'frame_0009.png'
    with open(os.path.join(output_dir, INDEX_FILE), encoding='utf-8') as file:
        index = yaml.safe_load(file)
    assert index['n'] == 5 and len(index['triplets']) == 2
    with open(os.path.join(output_dir, triplet_dir_name(1), META_FILE), encoding='utf-8') as file:
        assert json.load(file)['seed'] == derive_seed(42, 1)


def test_dataset_builder_is_independent_of_thread_count(tmp_path, moving_sequence):
    input_dir = str(tmp_path / 'frames')
    write_frames(input_dir, moving_sequence(18, 32))
    for threads in (1, 3):
        DatasetBuilder(input_dir, str(tmp_path / f'out{threads}'), SynthConfig(seed=8), threads).run()
    for index in range(2):
        for name in ('long.png', 'gt.png', burst_file(0), burst_file(4)):
            with open(tmp_path / 'out1' / triplet_dir_name(index) / name, 'rb') as a, \
                    open(tmp_path / 'out3' / triplet_dir_name(index) / name, 'rb') as b:
                assert a.read() == b.read()


def test_dataset_builder_rejects_bad_frame_counts(tmp_path, moving_sequence):
    input_dir = str(tmp_path / 'frames')
    write_frames(input_dir, moving_sequence(8, 32))
    builder = DatasetBuilder(input_dir, str(tmp_path / 'out'), SynthConfig())
    with pytest.raises(ValueError, match='2N-1'):
        builder.plan()
    with pytest.raises(FileNotFoundError):
        DatasetBuilder(str(tmp_path / 'missing'), str(tmp_path / 'out'), SynthConfig()).plan()
    assert not os.path.exists(tmp_path / 'out')


def test_moving_texture_flow_convention(moving_sequence):
    frames = moving_sequence(5, 48, velocity=(1.0, 0.0))
    middle = frames[2]
    for k, frame in enumerate(frames):
        dx = float(k - 2)
        aligned = backwarp(frame, FlowField.constant(48, 48, dx, 0.0))
        np.testing.assert_allclose(aligned.data[:, 4:-4], middle.data[:, 4:-4], atol=1e-12)
