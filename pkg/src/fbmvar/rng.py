"""Counter-based random streams keyed by (master_seed, stream_index).

Each Monte Carlo replication owns one stream, so results never depend on
how replications are spread over workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Lanes separate independent uses of one replication's stream.
PATH_LANE = 0
LIMIT_LANE = 1
AUX_LANE = 2

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: int

    def __post_init__(self):
        if not 0 <= self.master_seed < _U64:
            raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self, lane: int = PATH_LANE) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index, lane))
        return np.random.Generator(np.random.Philox(seq))

    def normals(self, size: int, lane: int = PATH_LANE) -> np.ndarray:
        return self.generator(lane).standard_normal(size)


def stacked_normals(master_seed: int, indices, size: int, lane: int = PATH_LANE) -> np.ndarray:
    """One row of ``size`` standard normals per stream index."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((len(indices), size))
    for row, idx in enumerate(indices):
        out[row] = RngStream(master_seed, int(idx)).normals(size, lane)
    return out
