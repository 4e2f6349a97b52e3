"""Counter-addressed random streams.

A stream is identified by ``(master_seed, stream_id)``. Both feed a numpy
``SeedSequence`` (the id as spawn key), so distinct ids give statistically
independent PCG64 streams and the same pair always replays the same draws,
in whatever order or thread the streams are consumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value}")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, offset: int) -> RngStream:
        """Stream ``stream_id + offset``; used to give each batch position its own stream."""
        return RngStream(self.master_seed, (self.stream_id + offset) % _U64)
