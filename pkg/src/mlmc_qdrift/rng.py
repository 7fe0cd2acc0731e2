"""Counter-based random streams and the deterministic parallel-map contract.

Every randomized routine takes an :class:`RngStream` identifying a Philox
stream by ``(seed, stream_id)``.  Substreams are derived per sample with a
splitmix-style hash of integer tags, so a run is bitwise reproducible for a
given seed regardless of how samples are distributed over worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numpy as np

_MASK64 = (1 << 64) - 1

# substream namespaces
PURPOSE_MAIN = 1
PURPOSE_PILOT = 2
PURPOSE_EXPERIMENT = 3


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair that fully determines a random sample path."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream.

        Calling this twice replays the same numbers; derive a substream when
        a sample needs additional independent draws.
        """
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, *tags: int) -> "RngStream":
        """Derive a statistically independent stream keyed by integer tags."""
        sid = self.stream_id
        for tag in tags:
            sid = _mix64(sid ^ _mix64(tag + 0x9E3779B97F4A7C15))
        return RngStream(self.seed, sid)


T = TypeVar("T")


def resolve_threads(threads: int | None) -> int:
    """Map a --threads value (0 or None = auto) to a worker count."""
    if threads is None:
        threads = 0
    if threads == 0:
        env = os.environ.get("MLMC_QDRIFT_THREADS")
        if env:
            threads = int(env)
        else:
            threads = os.cpu_count() or 1
    return max(1, threads)


def indexed_map(fn: Callable[[int], T], count: int, threads: int = 1) -> list[T]:
    """Evaluate ``[fn(0), ..., fn(count-1)]``, optionally on a thread pool.

    ``fn`` must be a pure function of its index (each sample derives its own
    RngStream), so the returned list is identical for any thread count and
    downstream reductions stay deterministic.
    """
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))
