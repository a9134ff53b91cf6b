"""Monte Carlo estimates of the marginal and sup-norm moment functionals.

For each time index ``i``::

    L_{q,i}  = max_k E|X_i^(k)|^q + max_k E|Y_i^(k)|^q
    nu_{q,i} = E||X_i||_inf^q   + E||Y_i||_inf^q
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from .batch import SampleBatch
from .errors import BadQ, ShapeMismatch
from .intervals import IntervalSet
from .rng import chunk_ranges, tree_sum

TAIL_FRACTION = 1e-3
TAIL_SHARE = 0.5


class HeavyTailWarning(UserWarning):
    """A handful of draws dominate a moment estimate; it is unlikely to have converged."""


@dataclass
class MomentPartial:
    """Sufficient statistics of one chunk of replicates, for a set of exponents."""

    count: int
    coord: dict = field(default_factory=dict)  # q -> (sum |x|^q, sum |x|^2q), each (n, p)
    sup: dict = field(default_factory=dict)  # q -> (sum ||x||^q, sum ||x||^2q), each (n,)

    def __add__(self, other: "MomentPartial") -> "MomentPartial":
        return MomentPartial(
            self.count + other.count,
            {q: (a[0] + other.coord[q][0], a[1] + other.coord[q][1]) for q, a in self.coord.items()},
            {q: (a[0] + other.sup[q][0], a[1] + other.sup[q][1]) for q, a in self.sup.items()},
        )


def moment_partial(x: NDArray, qs: Iterable[float]) -> MomentPartial:
    """Statistics of a chunk ``x`` of shape ``(B, n, p)``."""
    ax = np.abs(x)
    amax = ax.max(axis=2)
    part = MomentPartial(x.shape[0])
    for q in qs:
        v = ax**q
        s = amax**q
        part.coord[q] = (v.sum(axis=0), (v * v).sum(axis=0))
        part.sup[q] = (s.sum(axis=0), (s * s).sum(axis=0))
    return part


def combine(parts: Sequence[MomentPartial]) -> MomentPartial:
    return tree_sum(parts)


def _mean_se(s1: NDArray, s2: NDArray, count: int) -> tuple[NDArray, NDArray]:
    mean = s1 / count
    if count < 2:
        return mean, np.zeros_like(mean)
    var = np.maximum(s2 / count - mean**2, 0.0) * count / (count - 1)
    return mean, np.sqrt(var / count)


@dataclass(frozen=True)
class MomentSummary:
    q: float
    per_index_L: NDArray
    per_index_nu: NDArray
    se_L: NDArray
    se_nu: NDArray
    N: int
    heavy_tail: bool = False

    @property
    def n(self) -> int:
        return len(self.per_index_L)

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "N": self.N,
            "heavy_tail": self.heavy_tail,
            "per_index_L": self.per_index_L.tolist(),
            "per_index_nu": self.per_index_nu.tolist(),
            "se_L": self.se_L.tolist(),
            "se_nu": self.se_nu.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def summarize(px: MomentPartial, py: MomentPartial, q: float, heavy_tail: bool = False) -> MomentSummary:
    mx, sx = _mean_se(*px.coord[q], px.count)
    my, sy = _mean_se(*py.coord[q], py.count)
    rows = np.arange(mx.shape[0])
    kx, ky = mx.argmax(axis=1), my.argmax(axis=1)
    L = mx[rows, kx] + my[rows, ky]
    se_L = np.hypot(sx[rows, kx], sy[rows, ky])
    nx, snx = _mean_se(*px.sup[q], px.count)
    ny, sny = _mean_se(*py.sup[q], py.count)
    return MomentSummary(q, L, nx + ny, se_L, np.hypot(snx, sny), min(px.count, py.count), heavy_tail)


def _batch_partial(batch: SampleBatch, qs: Sequence[float], chunk: int = 256) -> MomentPartial:
    return combine([moment_partial(batch.data[lo:hi], qs) for lo, hi in chunk_ranges(batch.N, chunk)])


def tail_share(values: NDArray, fraction: float = TAIL_FRACTION) -> float:
    """Share of ``sum(values)`` carried by the largest ``ceil(fraction * size)`` entries."""
    v = np.ravel(values)
    total = v.sum()
    if total <= 0:
        return 0.0
    k = max(1, math.ceil(fraction * v.size))
    return float(np.partition(v, v.size - k)[v.size - k :].sum() / total)


def estimate_moments(batchX: SampleBatch, batchY: SampleBatch, q: float) -> MomentSummary:
    if (batchX.n, batchX.p) != (batchY.n, batchY.p):
        raise ShapeMismatch(f"batches have shapes {(batchX.n, batchX.p)} and {(batchY.n, batchY.p)}")
    if q < 1:
        raise BadQ(f"q must be >= 1, got {q}")
    q = float(q)
    px, py = _batch_partial(batchX, [q]), _batch_partial(batchY, [q])
    heavy = any(tail_share(np.abs(b.data) ** q) > TAIL_SHARE for b in (batchX, batchY))
    if heavy:
        warnings.warn(
            f"q={q:g} moment estimate is dominated by its top {TAIL_FRACTION:.1%} draws",
            HeavyTailWarning,
            stacklevel=2,
        )
    return summarize(px, py, q, heavy)


def averaged(summary: MomentSummary, interval: IntervalSet) -> tuple[float, float]:
    """``(Lbar_{q,I}, nubar_{q,I})``."""
    idx = interval.indices0(summary.n)
    return float(summary.per_index_L[idx].mean()), float(summary.per_index_nu[idx].mean())


def averaged_se(summary: MomentSummary, interval: IntervalSet) -> tuple[float, float]:
    """Conservative standard errors of the interval averages (mean of per-index SEs)."""
    idx = interval.indices0(summary.n)
    return float(summary.se_L[idx].mean()), float(summary.se_nu[idx].mean())


def jensen_check(
    nu2: MomentSummary, nuq: MomentSummary, k: float = 4.0, two_law: bool = False
) -> tuple[float, float, bool]:
    """``nubar_2 <= c * nubar_q^(2/q) + k * SE`` with delta-method error propagation.

    Each ``nu`` adds an X term and a Y term, and ``a^s + b^s <= 2^(1-s) (a + b)^s``
    for ``s = 2/q < 1``; so the inequality that always holds has
    ``c = 2^(1 - 2/q)``. ``two_law=False`` checks the plain ``c = 1`` form.
    """
    full = IntervalSet.full(nu2.n)
    lhs = averaged(nu2, full)[1]
    base = averaged(nuq, full)[1]
    s = 2.0 / nuq.q
    c = 2.0 ** (1.0 - s) if two_law else 1.0
    rhs = c * base**s
    se_rhs = c * s * base ** (s - 1.0) * averaged_se(nuq, full)[1]
    tol = k * (averaged_se(nu2, full)[1] + se_rhs)
    return lhs, rhs, lhs <= rhs + tol
