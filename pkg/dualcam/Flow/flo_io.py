import os

import numpy as np

from dualcam.Flow.flow_field import FlowField

FLO_MAGIC = np.float32(202021.25)


def write_flo(flow: FlowField, path: str) -> None:
    """
    Write a Middlebury .flo file: float32 magic, int32 width, int32 height, interleaved float32 (u, v).
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'wb') as file:
        file.write(np.array([FLO_MAGIC], dtype='<f4').tobytes())
        file.write(np.array([flow.width, flow.height], dtype='<i4').tobytes())
        file.write(np.ascontiguousarray(flow.uv, dtype='<f4').tobytes())


def read_flo(path: str) -> FlowField:
    """
    Read a Middlebury .flo file.

    :raises FileNotFoundError: If the file does not exist.
    :raises ValueError: On a wrong magic number or truncated payload.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"Flow file not found: {path}")
    with open(path, 'rb') as file:
        payload = file.read()

    if len(payload) < 12:
        raise ValueError(f"Truncated .flo header in {path}")
    magic = np.frombuffer(payload, dtype='<f4', count=1)[0]
    if magic != FLO_MAGIC:
        raise ValueError(f"Magic number incorrect in {path}: {magic}. Invalid .flo file")
    width, height = (int(v) for v in np.frombuffer(payload, dtype='<i4', count=2, offset=4))
    if width < 1 or height < 1:
        raise ValueError(f"Invalid .flo dimensions {width}x{height} in {path}")

    count = 2 * width * height
    if len(payload) < 12 + 4 * count:
        raise ValueError(f"Truncated .flo payload in {path}: expected {count} floats.")
    data = np.frombuffer(payload, dtype='<f4', count=count, offset=12)
    return FlowField(data.reshape(height, width, 2))


def flow_path(flow_dir: str, index: int) -> str:
    return os.path.join(flow_dir, f'flow_{index}.flo')


def read_flow_dir(flow_dir: str, n: int) -> list[FlowField]:
    """
    Read flow_0.flo ... flow_{n-1}.flo, one flow from the reference to each burst frame.
    """
    return [read_flo(flow_path(flow_dir, i)) for i in range(n)]


def write_flow_dir(flows: list[FlowField], flow_dir: str) -> None:
    for i, flow in enumerate(flows):
        write_flo(flow, flow_path(flow_dir, i))
