"""Counter-based random streams.

Every random number is a pure function of (seed, stream, domain, block, node)
through Philox4x64-10, so paths can be generated in any order, on any number of
threads, and re-generated bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1

# Domains separate the random numbers of different samplers sharing a stream.
DOMAIN_BROWNIAN = 1
DOMAIN_RHO = 2
DOMAIN_EXTEND = 3
DOMAIN_BESSEL = 4
DOMAIN_OCCUPATION = 5

# Estimators that need several independent families of paths (one per
# quadrature node, one per side of a comparison, ...) offset the stream index
# by multiples of this block.
STREAM_BLOCK = 1 << 32


@dataclass(frozen=True)
class RngSpec:
    """Root seed plus the index of the first stream a sampler may use."""

    seed: int
    stream: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            object.__setattr__(self, "seed", self.seed & MASK64)
        if self.stream < 0:
            raise ValueError("stream must be nonnegative")

    def offset(self, k: int) -> "RngSpec":
        return RngSpec(self.seed, self.stream + k)

    def family(self, j: int) -> "RngSpec":
        """The j-th independent block of streams."""
        return RngSpec(self.seed, self.stream + j * STREAM_BLOCK)

    def streams(self, start: int, count: int) -> np.ndarray:
        return np.arange(self.stream + start, self.stream + start + count, dtype=np.uint64)
