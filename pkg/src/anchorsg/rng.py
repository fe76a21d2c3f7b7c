"""Named random sub-streams derived from one master seed.

Every stochastic component draws from substream(seed, name) so a single
--seed flag reproduces an entire run while components stay decoupled.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, name: str) -> np.random.Generator:
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, key]))
