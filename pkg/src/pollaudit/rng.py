"""Counter-based keyed random streams.

Every consumer derives its own stream from (master seed, component ids),
so trials are order-independent, partitions of work never share state,
and identical inputs reproduce identical results regardless of how the
work is batched.
"""

from __future__ import annotations

import hashlib

import numpy as np

_STREAM_TRIAL = 1
_STREAM_POSITIONS = 2
_STREAM_SAMPLE_INDEX = 3


def derive_seed(master: int, *components: int) -> int:
    """Stable 64-bit sub-seed from a master seed and integer components."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(master).to_bytes(16, "little", signed=True))
    for c in components:
        h.update(int(c).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def _philox(master: int, *components: int) -> np.random.Generator:
    key = np.array(
        [np.uint64(master & 0xFFFFFFFFFFFFFFFF), np.uint64(derive_seed(master, *components))],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))


def trial_stream(seed: int, trial: int, round_index: int) -> np.random.Generator:
    """Tally draws for one (trial, round)."""
    return _philox(seed, _STREAM_TRIAL, trial, round_index)


def position_stream(seed: int, trial: int, round_index: int) -> np.random.Generator:
    """Ballot-position draws for one (trial, round); independent of the
    tally stream so precinct accounting never perturbs tallies."""
    return _philox(seed, _STREAM_POSITIONS, trial, round_index)


def sample_position(seed: int, index: int, total: int) -> int:
    """The index-th ballot position in [1, total] for a live audit draw.

    Keyed per index: generating any subset of indices, in any order,
    yields the same positions.
    """
    gen = _philox(seed, _STREAM_SAMPLE_INDEX, index)
    return int(gen.integers(1, total + 1))
