from typing import Dict, Iterator, NamedTuple

import numpy as np

from mbsvm.core.errors import DomainError

GENERATOR_NAME = "PCG64"


class MiniBatch(NamedTuple):
    """A b-subset of example indices in canonical (ascending) order."""
    indices: np.ndarray
    b: int


def make_rng(seed: int, *stream_key: int) -> np.random.Generator:
    """
    A PCG64 generator for the stream identified by ``(seed, *stream_key)``.

    Distinct stream keys give statistically independent streams, so parallel
    runs derive their generators from the master seed plus a run index.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream_key])))


def _partial_shuffle(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """First k positions of a Fisher-Yates shuffle of range(n), in O(k) memory."""
    picks = rng.integers(np.arange(k), n)
    swaps: Dict[int, int] = {}
    out = np.empty(k, dtype=np.int64)
    for pos, j in enumerate(picks.tolist()):
        out[pos] = swaps.get(j, j)
        swaps[j] = swaps.get(pos, pos)
    return out


def draw(n: int, b: int, rng: np.random.Generator) -> MiniBatch:
    """Draws A in Rand(b): every b-subset of {0, ..., n-1} is equally likely."""
    if b < 1:
        raise DomainError(f"batch size must be at least 1, got {b}")
    if b > n:
        raise DomainError(f"batch size {b} exceeds the {n} available examples")
    if b == n:
        return MiniBatch(np.arange(n, dtype=np.int64), b)
    if 2 * b <= n:
        chosen = _partial_shuffle(n, b, rng)
    else:
        mask = np.ones(n, dtype=bool)
        mask[_partial_shuffle(n, n - b, rng)] = False
        chosen = np.flatnonzero(mask)
    chosen.sort()
    return MiniBatch(chosen, b)


class BatchSampler:
    """Single-owner iterator over mini-batches of a fixed size."""

    def __init__(self, n: int, b: int, seed: int, *stream_key: int):
        if not 1 <= b <= n:
            raise DomainError(f"batch size {b} outside [1, {n}]")
        self.n = n
        self.b = b
        self.rng = make_rng(seed, *stream_key)

    def draw(self) -> MiniBatch:
        return draw(self.n, self.b, self.rng)

    def __iter__(self) -> Iterator[MiniBatch]:
        while True:
            yield self.draw()
