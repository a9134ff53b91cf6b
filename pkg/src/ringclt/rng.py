"""Counter-based random streams.

Every random quantity in the lab is drawn from a Philox stream whose key is
``(seed, tag << 40 | index)``: ``tag`` names the purpose (process
innovations, Gaussian coupling, blur draws, ...) and ``index`` is the
replicate, grid point or conditioning draw. Inside a stream, draws are
consumed in (time, coordinate) order. Output therefore never depends on how
work is split across threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

MASK64 = (1 << 64) - 1
INDEX_BITS = 40

TAG_PROCESS = 1
TAG_COUPLING = 2
TAG_BLUR = 3
TAG_KAPPA_COND = 4
TAG_KAPPA_SAMPLE = 5
TAG_CANDIDATES = 6
TAG_ANNULUS = 7

T = TypeVar("T")
R = TypeVar("R")


def stream(seed: int, tag: int, index: int) -> np.random.Generator:
    if not 0 <= index < (1 << INDEX_BITS):
        raise ValueError(f"stream index {index} out of range")
    key = np.array([int(seed) & MASK64, ((tag << INDEX_BITS) | index) & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(seed: int, *path: int) -> int:
    """A child 64-bit seed for a sub-experiment (e.g. one sweep cell)."""
    ss = np.random.SeedSequence([int(seed) & MASK64, *[int(x) for x in path]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def chunk_ranges(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally on a thread pool; result order is input order."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def tree_sum(parts: Iterable[np.ndarray]) -> np.ndarray:
    """Pairwise reduction in a fixed order, so the rounding pattern depends only on len(parts)."""
    level = list(parts)
    if not level:
        raise ValueError("nothing to sum")
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]
