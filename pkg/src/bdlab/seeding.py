"""Per-replica seed derivation and replica fan-out.

Replica ``i`` of a run with master seed ``m`` uses the generator
``numpy.random.default_rng(derive_seed(m, i))`` where ``derive_seed`` is
the SplitMix64 finaliser applied to ``m + (i + 1) * 0x9E3779B97F4A7C15``
(mod 2**64).  Results never depend on how replicas are scheduled.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

MIXER = "splitmix64"
_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

T = TypeVar("T")


def splitmix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    return splitmix64(master + (index + 1) * _GOLDEN)


def replica_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, index))


def map_replicas(fn: Callable[[int], T], indices: Sequence[int], workers: int = 1) -> list[T]:
    """Evaluate ``fn`` on every replica index, results in index order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    if workers <= 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices, chunksize=max(1, len(indices) // (4 * workers))))
