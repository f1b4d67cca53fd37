"""Named random streams derived from one master seed.

Each purpose gets its own ``SeedSequence`` branch keyed by a fixed integer,
so adding or reordering sub-experiments never shifts another stream.
"""

import numpy as np

PURPOSES = {
    "scenario": 1,
    "exploration": 2,
    "init": 3,
    "optimizer": 4,
    "replay": 5,
    "heldout": 6,
}


def seed_sequence(master_seed: int, purpose: str, index: int = 0) -> np.random.SeedSequence:
    try:
        key = PURPOSES[purpose]
    except KeyError:
        raise ValueError(f"unknown stream purpose {purpose!r}; known: {sorted(PURPOSES)}") from None
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(key, int(index)))


def stream(master_seed: int, purpose: str, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, purpose, index)))
