"""Counter-based per-shot random streams.

A shot's randomness is a pure function of ``(base_seed, shot, stream)``:
the Philox key packs the base seed and shot index, and the stream id sits
in the top counter word.  Shots can therefore be generated in any order
and on any number of workers with identical results.
"""

from __future__ import annotations

import numpy as np

NOISE_STREAM = 0
MEASURE_STREAM = 1

_MASK64 = (1 << 64) - 1


def shot_key(base_seed: int, shot: int) -> int:
    if base_seed < 0 or shot < 0:
        raise ValueError("seed and shot index must be non-negative")
    return (base_seed & _MASK64) | ((shot & _MASK64) << 64)


def shot_generator(base_seed: int, shot: int, stream: int) -> np.random.Generator:
    bitgen = np.random.Philox(key=shot_key(base_seed, shot), counter=[0, 0, 0, stream])
    return np.random.Generator(bitgen)


def noise_uniforms(base_seed: int, shot: int, num_sites: int) -> np.ndarray:
    """The ``(num_sites, 2)`` uniform table that drives every fault of a shot."""
    return shot_generator(base_seed, shot, NOISE_STREAM).random((num_sites, 2))
