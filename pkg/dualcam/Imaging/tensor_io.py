import os

import numpy as np

MAGIC = b'DCKT'


def write_tensor(array: np.ndarray, path: str) -> None:
    """
    Write a float tensor sidecar: magic "DCKT", u32 rank, u32 dims[rank], float32 payload,
    all little-endian and row-major.
    """
    array = np.ascontiguousarray(array, dtype='<f4')
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as file:
        file.write(MAGIC)
        file.write(np.array([array.ndim], dtype='<u4').tobytes())
        file.write(np.array(array.shape, dtype='<u4').tobytes())
        file.write(array.tobytes())


def read_tensor(path: str) -> np.ndarray:
    """
    Read a "DCKT" sidecar back into a float32 array.

    :raises ValueError: On a bad magic or a truncated file.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Tensor file not found: {path}")
    with open(path, 'rb') as file:
        payload = file.read()

    if payload[:4] != MAGIC:
        raise ValueError(f"Bad magic in tensor file {path}: {payload[:4]!r}")
    if len(payload) < 8:
        raise ValueError(f"Truncated tensor header in {path}")
    rank = int(np.frombuffer(payload, dtype='<u4', count=1, offset=4)[0])
    header_end = 8 + 4 * rank
    if len(payload) < header_end:
        raise ValueError(f"Truncated tensor header in {path}")
    dims = tuple(int(d) for d in np.frombuffer(payload, dtype='<u4', count=rank, offset=8))

    count = int(np.prod(dims)) if dims else 1
    if len(payload) != header_end + 4 * count:
        raise ValueError(f"Tensor file {path} holds {len(payload) - header_end} payload bytes, expected {4 * count}.")
    return np.frombuffer(payload, dtype='<f4', count=count, offset=header_end).reshape(dims).copy()
