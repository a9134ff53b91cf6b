"""Replicated series batches and their on-disk formats.

Binary layout (all little-endian)::

    offset  size  field
    0       4     magic b"RCLT"
    4       4     version (uint32, currently 1)
    8       8     n        (uint64)
    16      8     p        (uint64)
    24      8     N        (uint64)
    32      8     seed     (uint64)
    40      8     spec_digest (uint64)
    48      8     reserved (uint64, zero)
    56      ...   N*n*p float64 values, replicate-major then time then coordinate

The CSV export has header ``replicate,time,coord,value`` with 0-based
indices and values printed to 17 significant digits.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import BadBatchFile, ShapeMismatch

MAGIC = b"RCLT"
VERSION = 1
_HEADER = struct.Struct("<4sIQQQQQQ")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``N`` independent replicates of an ``n x p`` series, shape ``(N, n, p)``."""

    data: NDArray
    seed: int = 0
    spec_digest: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ShapeMismatch(f"batch data must have shape (N, n, p) with positive sizes, got {arr.shape}")
        if not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def p(self) -> int:
        return self.data.shape[2]

    def totals(self) -> NDArray:
        """Per-replicate sum over time, shape ``(N, p)``."""
        return self.data.sum(axis=1)

    def partial_sums(self, idx0: NDArray) -> NDArray:
        return self.data[:, idx0, :].sum(axis=1)

    def same_values(self, other: "SampleBatch") -> bool:
        return self.data.shape == other.data.shape and self.data.tobytes() == other.data.tobytes()

    # -- serialization -------------------------------------------------

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(
            MAGIC, VERSION, self.n, self.p, self.N, self.seed & (2**64 - 1), self.spec_digest & (2**64 - 1), 0
        )
        return head + self.data.astype("<f8", copy=False).tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SampleBatch":
        if len(raw) < _HEADER.size:
            raise BadBatchFile("file shorter than header")
        magic, version, n, p, N, seed, digest, _ = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise BadBatchFile(f"bad magic {magic!r}")
        if version != VERSION:
            raise BadBatchFile(f"unsupported version {version}")
        expected = _HEADER.size + 8 * n * p * N
        if len(raw) != expected:
            raise BadBatchFile(f"expected {expected} bytes, found {len(raw)}")
        data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(N, n, p).astype(np.float64)
        return cls(data=data, seed=seed, spec_digest=digest)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "SampleBatch":
        return cls.from_bytes(Path(path).read_bytes())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["replicate", "time", "coord", "value"])
            for r in range(self.N):
                for t in range(self.n):
                    for k in range(self.p):
                        w.writerow([r, t, k, format(float(self.data[r, t, k]), ".17g")])

    @classmethod
    def read_csv(cls, path: str | Path, seed: int = 0, spec_digest: int = 0) -> "SampleBatch":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if rows.size == 0:
            raise BadBatchFile("empty batch CSV")
        idx = rows[:, :3].astype(np.int64)
        shape = tuple(int(x) + 1 for x in idx.max(axis=0))
        if shape[0] * shape[1] * shape[2] != len(rows):
            raise BadBatchFile("CSV does not cover a full (N, n, p) grid")
        data = np.empty(shape)
        data[idx[:, 0], idx[:, 1], idx[:, 2]] = rows[:, 3]
        return cls(data=data, seed=seed, spec_digest=spec_digest)


def batch_from_sums(sums: NDArray, seed: int = 0) -> SampleBatch:
    """Wrap ``(N, p)`` draws as a length-1 series batch."""
    s = np.asarray(sums, dtype=float)
    if s.ndim == 1:
        s = s[:, None]
    return SampleBatch(data=s[:, None, :], seed=seed)
