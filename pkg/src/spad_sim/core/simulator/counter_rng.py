"""
Counter-based random streams.

Every draw is addressed by (seed, index, stream): a Philox-4x64 generator is
keyed with the 128-bit pair (seed, index) and its counter starts at
(0, 0, 0, stream). Within a generator, the i-th double returned by
`random()` belongs to pixel i in row-major order. Nothing depends on the
order in which frames are produced, so any thread schedule gives the same
bits. This mapping is frozen for stream format SBS1.
"""

import numpy as np

from spad_sim.errors import DomainError

SPAD_FRAMES = 0
CONVENTIONAL_SHOT = 1
CONVENTIONAL_READ = 2
SCENE_TEXTURE = 3
BINOMIAL_COUNTS = 4

U64 = 2**64


def keyed_generator(seed: int, index: int, stream: int) -> np.random.Generator:
    if not 0 <= seed < U64:
        raise DomainError(f"seed must fit in u64, got {seed}")
    if not 0 <= index < U64:
        raise DomainError(f"index must fit in u64, got {index}")
    key = np.array([seed, index], dtype=np.uint64)
    counter = np.array([0, 0, 0, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a sub-experiment (e.g. one sweep cell), stable across runs."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(path)).generate_state(1, np.uint64)[0])
