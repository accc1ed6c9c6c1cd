"""Seed derivation and per-filter noise streams.

All randomness flows from one master seed.  Sub-streams are addressed by
integer key paths, e.g. ``derive(seed, PMMH, chain)``, so the draws a
component sees never depend on scheduling or worker count.
"""
from __future__ import annotations

import numpy as np

# top-level stream tags
FILTER = 0
PMMH = 1
THETA = 2
REPLICATE = 3


def derive(seed, *keys: int) -> np.random.SeedSequence:
    """Return the SeedSequence at ``keys`` below ``seed``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(keys))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))


def generator(seed, *keys: int) -> np.random.Generator:
    return np.random.default_rng(derive(seed, *keys))


class NoiseSource:
    """Three independent streams feeding one filter instance.

    State normals, resampling uniforms and parameter-kernel normals come
    from separate generators.  Keeping them apart means a Liu-West filter
    with a frozen parameter kernel consumes exactly the state and
    resampling draws a plain SISR filter would, and lets callers draw a
    whole run of noise in one block without changing the stream.
    """

    def __init__(self, seed=0, *keys: int):
        if isinstance(seed, NoiseSource):
            raise TypeError("already a NoiseSource")
        ss = derive(seed, *keys)
        s_state, s_unif, s_param = ss.spawn(3)
        self._state = np.random.default_rng(s_state)
        self._unif = np.random.default_rng(s_unif)
        self._param = np.random.default_rng(s_param)

    def normal(self, shape) -> np.ndarray:
        return self._state.standard_normal(shape)

    def uniform(self, shape) -> np.ndarray:
        return self._unif.random(shape)

    def param_normal(self, shape) -> np.ndarray:
        return self._param.standard_normal(shape)


def as_noise(rng) -> NoiseSource:
    """Coerce an int / SeedSequence / NoiseSource into a NoiseSource."""
    if isinstance(rng, NoiseSource):
        return rng
    return NoiseSource(rng)
