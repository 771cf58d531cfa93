import numpy as np


def _seed_sequence(seed: int, stream: int | None) -> np.random.SeedSequence:
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError(f"Seed must be an unsigned 64-bit integer, got {seed}.")
    spawn_key = () if stream is None else (int(stream),)
    return np.random.SeedSequence(int(seed), spawn_key=spawn_key)


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """
    Philox (counter-based) generator for `seed`, optionally split into an independent stream.

    Streams are keyed by (seed, stream) through SeedSequence spawn keys, so worker i always draws
    the same numbers regardless of how many workers run.
    """
    return np.random.Generator(np.random.Philox(_seed_sequence(seed, stream)))


def derive_seed(seed: int, stream: int) -> int:
    """
    64-bit seed of stream `stream`, recorded in metadata so a single stream can be replayed with make_rng.
    """
    return int(_seed_sequence(seed, stream).generate_state(1, dtype=np.uint64)[0])
