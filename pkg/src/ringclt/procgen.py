"""m-dependent and m-ring-dependent data-generating processes.

Linear processes are moving averages ``X_i = sum_k A_k eps_{i-k}`` with
i.i.d. unit-variance innovations that are independent across coordinates.
The ring variant indexes innovations modulo ``n``, which makes the sequence
exactly m-ring dependent. Two non-linear-in-time constructions are also
provided: the pairwise duplication ``X_{2j-1} = X_{2j}`` and its
generalization where one shock is repeated over ``m + 1`` consecutive times.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rng
from .batch import SampleBatch
from .covmodel import CovarianceModel
from .errors import BadCoefficients, BadInnovation, BadLength, OddLengthUnsupported

KINDS = ("MA", "RingMA", "Duplication", "HeavyTailMA", "BlockShock")
CHUNK = 256
HEAVY_TAIL_DF = 3.5


@dataclass(frozen=True)
class Innovation:
    """Unit-variance innovation law.

    ``gaussian``: standard normal. ``student_t``: Student t with ``df > 3``
    rescaled to unit variance. ``gamma``: ``(G - shape) / sqrt(shape)`` with
    ``G ~ Gamma(shape)``, a centered skewed law (skewness ``2/sqrt(shape)``).
    """

    law: str = "gaussian"
    df: float = HEAVY_TAIL_DF
    shape: float = 1.0

    def __post_init__(self) -> None:
        if self.law not in ("gaussian", "student_t", "gamma"):
            raise BadInnovation(f"unknown innovation law {self.law!r}")
        if self.law == "student_t" and not self.df > 3:
            raise BadInnovation("Student t innovations need df > 3 (finite third moment)")
        if self.law == "gamma" and not self.shape > 0:
            raise BadInnovation("gamma shape must be positive")

    def draw(self, gen: np.random.Generator, size: tuple[int, ...]) -> NDArray:
        if self.law == "gaussian":
            return gen.standard_normal(size)
        if self.law == "student_t":
            return gen.standard_t(self.df, size) * math.sqrt((self.df - 2.0) / self.df)
        return (gen.standard_gamma(self.shape, size) - self.shape) / math.sqrt(self.shape)

    def as_dict(self) -> dict:
        out: dict = {"law": self.law}
        if self.law == "student_t":
            out["df"] = self.df
        if self.law == "gamma":
            out["shape"] = self.shape
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Innovation":
        return cls(law=d.get("law", "gaussian"), df=float(d.get("df", HEAVY_TAIL_DF)), shape=float(d.get("shape", 1.0)))


GAUSSIAN = Innovation("gaussian")


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    m: int
    p: int
    coeffs: tuple  # (m+1) p x p matrices as nested tuples
    innovation: Innovation = GAUSSIAN
    standardized: bool = True

    @property
    def ring(self) -> bool:
        return self.kind == "RingMA"

    @property
    def linear(self) -> bool:
        return self.kind in ("MA", "RingMA", "HeavyTailMA")

    @property
    def group(self) -> int:
        """Shock repetition length for Duplication / BlockShock, else 0."""
        if self.kind == "Duplication":
            return 2
        if self.kind == "BlockShock":
            return self.m + 1
        return 0

    def coeff_array(self) -> NDArray:
        return np.array(self.coeffs, dtype=float).reshape(self.m + 1, self.p, self.p)

    def gaussianized(self) -> "ProcessSpec":
        kind = "MA" if self.kind == "HeavyTailMA" else self.kind
        return replace(self, kind=kind, innovation=GAUSSIAN)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "m": self.m,
            "p": self.p,
            "coeffs": [[list(r) for r in a] for a in self.coeffs],
            "innovation": self.innovation.as_dict(),
            "standardized": self.standardized,
        }

    def digest(self) -> int:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":")).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")

    def min_length(self) -> int:
        return self.m + 1

    def check_length(self, n: int) -> None:
        if n < self.m + 1:
            raise BadLength(f"n = {n} must be at least m + 1 = {self.m + 1}")
        if self.kind == "Duplication" and n % 2:
            raise OddLengthUnsupported(f"duplication process needs an even n, got {n}")


def _as_tuple(a: NDArray) -> tuple:
    return tuple(tuple(tuple(float(x) for x in row) for row in mat) for mat in a)


def equal_coeffs(m: int, p: int) -> NDArray:
    return np.stack([np.eye(p)] * (m + 1))


def decay_coeffs(m: int, p: int, rate: float = 0.5) -> NDArray:
    return np.stack([rate**k * np.eye(p) for k in range(m + 1)])


def build_ma(
    m: int,
    p: int,
    coeffs: ArrayLike | None = None,
    innovation: Innovation = GAUSSIAN,
    ring: bool = False,
    standardize: bool = True,
) -> ProcessSpec:
    if m < 0 or p < 1:
        raise BadCoefficients(f"need m >= 0 and p >= 1, got m={m}, p={p}")
    a = equal_coeffs(m, p) if coeffs is None else np.asarray(coeffs, dtype=float)
    if a.shape != (m + 1, p, p):
        raise BadCoefficients(f"coefficients must have shape {(m + 1, p, p)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise BadCoefficients("coefficients must be finite")
    if standardize:
        var = np.einsum("kab,kab->a", a, a)
        if np.any(var <= 0):
            raise BadCoefficients("a coordinate has zero variance and cannot be standardized")
        a = a / np.sqrt(var)[None, :, None]
    if ring:
        kind = "RingMA"
    elif innovation.law == "student_t":
        kind = "HeavyTailMA"
    else:
        kind = "MA"
    return ProcessSpec(kind, m, p, _as_tuple(a), innovation, standardize)


def build_heavy_tail_ma(m: int, p: int, coeffs: ArrayLike | None = None, df: float = HEAVY_TAIL_DF) -> ProcessSpec:
    return build_ma(m, p, coeffs, Innovation("student_t", df=df))


def build_duplication(p: int) -> ProcessSpec:
    """``X_{2j-1} = X_{2j}`` standard Gaussian, independent across pairs."""
    return ProcessSpec("Duplication", 1, p, _as_tuple(equal_coeffs(1, p) / math.sqrt(2)), GAUSSIAN, True)


def build_block_shock(m: int, p: int, innovation: Innovation = GAUSSIAN) -> ProcessSpec:
    """One unit-variance shock repeated over ``m + 1`` consecutive times (last group may be short)."""
    if m < 0 or p < 1:
        raise BadCoefficients(f"need m >= 0 and p >= 1, got m={m}, p={p}")
    return ProcessSpec("BlockShock", m, p, _as_tuple(equal_coeffs(m, p) / math.sqrt(m + 1)), innovation, True)


def process_from_dict(d: dict) -> ProcessSpec:
    kind = d.get("kind", "MA")
    m, p = int(d.get("m", 1)), int(d.get("p", 1))
    innov = Innovation.from_dict(d.get("innovation", {}))
    if kind == "Duplication":
        return build_duplication(p)
    if kind == "BlockShock":
        return build_block_shock(m, p, innov)
    if kind not in KINDS:
        raise BadCoefficients(f"unknown process kind {kind!r}")
    coeffs = d.get("coeffs", "equal")
    if isinstance(coeffs, str):
        presets = {"equal": equal_coeffs, "decay": decay_coeffs}
        if coeffs not in presets:
            raise BadCoefficients(f"unknown coefficient preset {coeffs!r}")
        coeffs = presets[coeffs](m, p)
    if kind == "HeavyTailMA" and "innovation" not in d:
        innov = Innovation("student_t")
    return build_ma(m, p, coeffs, innov, ring=kind == "RingMA", standardize=bool(d.get("standardized", True)))


# -- sampling ---------------------------------------------------------------


def innovation_count(spec: ProcessSpec, n: int) -> int:
    if spec.kind == "RingMA":
        return n
    if spec.group:
        return -(-n // spec.group)
    return n + spec.m


def apply_filter(spec: ProcessSpec, eps: NDArray, n: int) -> NDArray:
    """Map innovations of shape ``(B, T, p)`` to series of shape ``(B, n, p)``."""
    if spec.group:
        return np.repeat(eps, spec.group, axis=1)[:, :n, :]
    a = spec.coeff_array()
    m = spec.m
    out = np.zeros((eps.shape[0], n, spec.p))
    for k in range(m + 1):
        if spec.ring:
            lagged = np.roll(eps, k, axis=1)
        else:
            lagged = eps[:, m - k : m - k + n, :]
        out += lagged @ a[k].T
    return out


def _chunk_series(spec: ProcessSpec, n: int, seed: int, lo: int, hi: int, tag: int) -> NDArray:
    t = innovation_count(spec, n)
    eps = np.empty((hi - lo, t, spec.p))
    for r in range(lo, hi):
        eps[r - lo] = spec.innovation.draw(rng.stream(seed, tag, r), (t, spec.p))
    return apply_filter(spec, eps, n)


def map_series_chunks(
    spec: ProcessSpec,
    n: int,
    N: int,
    seed: int,
    fn: Callable[[int, NDArray], object],
    threads: int = 1,
    tag: int = rng.TAG_PROCESS,
    chunk: int = CHUNK,
) -> list:
    """Generate replicates in fixed chunks and apply ``fn(lo, X_chunk)``; results in chunk order.

    Peak memory is bounded by ``threads`` chunks at a time.
    """
    spec.check_length(n)
    if N < 1:
        raise BadLength("N must be positive")
    ranges = rng.chunk_ranges(N, chunk)

    def work(span: tuple[int, int]) -> object:
        lo, hi = span
        return fn(lo, _chunk_series(spec, n, seed, lo, hi, tag))

    out: list = []
    step = max(1, threads)
    for g in range(0, len(ranges), step):
        out.extend(rng.ordered_map(work, ranges[g : g + step], threads))
    return out


def sample_series(spec: ProcessSpec, n: int, N: int, seed: int, threads: int = 1) -> SampleBatch:
    """``N`` replicates; replicate ``r`` uses the Philox stream keyed by ``(seed, r)``."""
    parts = map_series_chunks(spec, n, N, seed, lambda lo, x: x, threads=threads)
    return SampleBatch(
        data=np.concatenate(parts, axis=0),
        seed=seed,
        spec_digest=spec.digest(),
        meta={"spec": spec.as_dict()},
    )


def implied_covariance(spec: ProcessSpec, n: int) -> CovarianceModel:
    """Exact covariance of ``(X_1', ..., X_n')'``."""
    spec.check_length(n)
    if spec.group:
        blocks = np.zeros((spec.m + 1, spec.p, spec.p))
        blocks[0] = np.eye(spec.p)
        if spec.kind == "Duplication":
            blocks[1] = 0.0
        return CovarianceModel(n, spec.p, spec.m, False, blocks, group=spec.group, generator=spec.gaussianized())
    a = spec.coeff_array()
    m = spec.m
    blocks = np.stack([sum(a[k] @ a[k + d].T for k in range(m + 1 - d)) for d in range(m + 1)])
    return CovarianceModel(n, spec.p, m, spec.ring, blocks, generator=spec.gaussianized())


def block_reduce(batch: SampleBatch, m: int) -> SampleBatch:
    """Sum consecutive blocks of ``m`` times; the last block absorbs the remainder."""
    if m < 1 or batch.n < m:
        raise BadLength(f"need 1 <= m <= n, got m={m}, n={batch.n}")
    if m == 1:
        return batch
    n_blocks = batch.n // m
    starts = np.arange(n_blocks) * m
    data = np.add.reduceat(batch.data, starts, axis=1)
    meta = dict(batch.meta, blocked_by=m)
    return SampleBatch(data=data, seed=batch.seed, spec_digest=batch.spec_digest, meta=meta)


def block_sizes(n: int, m: int) -> list[int]:
    n_blocks = n // m
    return [m] * (n_blocks - 1) + [n - (n_blocks - 1) * m]

