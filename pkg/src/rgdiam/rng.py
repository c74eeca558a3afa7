"""Seeding conventions.

Every random stream is a numpy ``Generator`` backed by PCG64 and keyed by a
``SeedSequence`` built from the master seed plus any number of integer keys
(cell index, trial index, purpose tag).  Streams derived this way do not
depend on the order in which trials are scheduled.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Return the PCG64 generator for ``(seed, *keys)``."""
    entropy = [int(seed) & MASK64, *(int(k) & MASK64 for k in keys)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer seed for ``(seed, *keys)``, for APIs that take ints."""
    entropy = [int(seed) & MASK64, *(int(k) & MASK64 for k in keys)]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def as_generator(seed: int | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed)
