"""Integer index intervals on ``[1, n]``, optionally wrapping around the ring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import BadIndexSet


@dataclass(frozen=True, order=True)
class IntervalSet:
    """1-based index set.

    ``wrap=False`` is the contiguous range ``[lo, hi]``. ``wrap=True`` is the
    wrap-around set ``[hi, n] U [1, lo]`` with ``lo < hi``.
    """

    lo: int
    hi: int
    wrap: bool = False

    @classmethod
    def contiguous(cls, i: int, j: int) -> "IntervalSet":
        return cls(i, j, False)

    @classmethod
    def around(cls, i: int, j: int) -> "IntervalSet":
        """The ring interval ``[j, n] U [1, i]``."""
        return cls(i, j, True)

    @classmethod
    def full(cls, n: int) -> "IntervalSet":
        return cls(1, n, False)

    def validate(self, n: int) -> None:
        if n < 1:
            raise BadIndexSet(f"series length must be positive, got {n}")
        if self.wrap:
            ok = 1 <= self.lo < self.hi <= n
        else:
            ok = 1 <= self.lo <= self.hi <= n
        if not ok:
            raise BadIndexSet(f"{self} is not a valid index set for n={n}")

    def size(self, n: int) -> int:
        self.validate(n)
        if self.wrap:
            return (n - self.hi + 1) + self.lo
        return self.hi - self.lo + 1

    def indices(self, n: int) -> NDArray:
        """Sorted 1-based members."""
        self.validate(n)
        if self.wrap:
            return np.concatenate([np.arange(1, self.lo + 1), np.arange(self.hi, n + 1)])
        return np.arange(self.lo, self.hi + 1)

    def indices0(self, n: int) -> NDArray:
        return self.indices(n) - 1

    def contains(self, other: "IntervalSet", n: int) -> bool:
        return set(other.indices(n).tolist()) <= set(self.indices(n).tolist())

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "wrap": self.wrap}

    def __str__(self) -> str:
        if self.wrap:
            return f"[{self.hi},n]U[1,{self.lo}]"
        return f"[{self.lo},{self.hi}]"
