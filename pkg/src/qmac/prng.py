"""Seeded PCG64 streams keyed by integer paths such as (restart,) or (trial, book, row)."""

import numpy as np

from .errors import ConfigError


def make_rng(seed: int, *key: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2**64:
        raise ConfigError(f"config error: seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
