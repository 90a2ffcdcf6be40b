"""Reproducible random streams.

Each stream is a Philox-4x64 counter generator (numpy) keyed by a
``SeedSequence(seed, spawn_key=(stream_id,))``.  Trial ``i`` of an
experiment always reads stream ``i``, so results do not depend on how trials
are distributed over workers.
"""

import numpy as np

__all__ = ["RngStream", "as_generator"]


class RngStream:
    """Random source identified by ``(seed, stream_id)``."""

    def __init__(self, seed=0, stream_id=0):
        if not (0 <= seed < 2**64 and 0 <= stream_id < 2**64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.Philox(ss))

    def substream(self, stream_id):
        return RngStream(self.seed, stream_id)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def as_generator(rng):
    """Accept an :class:`RngStream`, a numpy ``Generator`` or an int seed."""
    if isinstance(rng, RngStream):
        return rng.gen
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng)).gen
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")
