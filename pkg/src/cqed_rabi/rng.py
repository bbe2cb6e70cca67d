"""Reproducible per-trajectory random streams.

Each trajectory owns a Philox-4x64 counter-based generator whose 128-bit key is
``(trajectory_index << 64) | master_seed``. Distinct ``(seed, index)`` pairs
therefore never share a key, every stream starts at counter 0, and the
sequence is fixed by the Philox algorithm and numpy's ziggurat normal sampler
on every platform.
"""

import numpy as np

_U64 = 1 << 64


def stream_key(master_seed: int, trajectory_index: int) -> int:
    if not 0 <= master_seed < _U64:
        raise ValueError(f"master_seed must fit in 64 unsigned bits, got {master_seed}")
    if not 0 <= trajectory_index < _U64:
        raise ValueError(f"trajectory_index must fit in 64 unsigned bits, got {trajectory_index}")
    return (trajectory_index << 64) | master_seed


def derive_stream(master_seed: int, trajectory_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=stream_key(master_seed, trajectory_index)))


def derive_seed(base_seed: int, *path: int) -> int:
    """Child 64-bit seed for a sub-experiment (e.g. one point of a sweep)."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
