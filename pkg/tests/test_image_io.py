import numpy as np
import pytest

from dualcam.Imaging.image_buffer import ColorSpace, ImageBuffer
from dualcam.Imaging.image_io import load_image, quantize, save_image
from dualcam.Imaging.tensor_io import MAGIC, read_tensor, write_tensor


def test_png_16bit_keeps_values_to_half_a_level(tmp_path, texture):
    path = str(tmp_path / 'frame.png')
    save_image(texture, path)
    loaded = load_image(path)
    assert loaded.shape == texture.shape
    assert loaded.space == ColorSpace.SRGB
    np.testing.assert_allclose(loaded.data, texture.data, atol=0.5 / 65535 + 1e-12)


def test_png_8bit_and_channel_order(tmp_path):
    data = np.zeros((4, 4, 3))
    data[:, :, 0] = 1.0
    path = str(tmp_path / 'red.png')
    save_image(ImageBuffer(data), path, depth=8)
    loaded = load_image(path)
    np.testing.assert_array_equal(loaded.data[:, :, 0], 1.0)
    np.testing.assert_array_equal(loaded.data[:, :, 1:], 0.0)


def test_png_grayscale(tmp_path):
    path = str(tmp_path / 'gray.png')
    save_image(ImageBuffer(np.full((4, 4), 0.5)), path)
    assert load_image(path).channels == 1


def test_save_clamps_out_of_range(tmp_path):
    path = str(tmp_path / 'clamp.png')
    save_image(ImageBuffer(np.array([[-0.5, 1.5]])), path)
    np.testing.assert_array_equal(load_image(path).data[0, :, 0], [0.0, 1.0])


def test_quantize_rounds_to_nearest_level():
    levels = quantize(np.array([0.6 / 255, 1.4 / 255, 1.0]), 8)
    np.testing.assert_array_equal(levels, [1, 1, 255])
    with pytest.raises(ValueError):
        quantize(np.zeros(2), 12)


def test_missing_image_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(str(tmp_path / 'none.png'))


def test_unreadable_image_raises(tmp_path):
    path = tmp_path / 'broken.png'
    path.write_bytes(b'not a png')
    with pytest.raises(ValueError):
        load_image(str(path))


def test_tensor_sidecar(tmp_path):
    path = str(tmp_path / 'weights.dckt')
    tensor = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    write_tensor(tensor, path)
    with open(path, 'rb') as file:
        assert file.read(4) == MAGIC
    np.testing.assert_array_equal(read_tensor(path), tensor)


def test_tensor_sidecar_rejects_bad_files(tmp_path):
    bad_magic = tmp_path / 'bad.dckt'
    bad_magic.write_bytes(b'XXXX' + b'\x00' * 8)
    with pytest.raises(ValueError, match='magic'):
        read_tensor(str(bad_magic))

    path = str(tmp_path / 'short.dckt')
    write_tensor(np.ones((4, 4)), path)
    with open(path, 'rb') as file:
        payload = file.read()
    with open(path, 'wb') as file:
        file.write(payload[:-4])
    with pytest.raises(ValueError):
        read_tensor(path)

    with pytest.raises(FileNotFoundError):
        read_tensor(str(tmp_path / 'missing.dckt'))
