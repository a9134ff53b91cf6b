"""Block covariance model of a stacked series ``(X_1', ..., X_n')'``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np
from numpy.typing import NDArray

from .errors import ShapeMismatch, TooLarge
from .linalg import as_symmetric, psd_tol

if TYPE_CHECKING:
    from .procgen import ProcessSpec

DENSE_CAP = 4096


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Banded (or circulant-banded) block covariance.

    ``blocks[d]`` is ``Cov(X_i, X_{i+d})`` for lags ``d = 0..m``; the block at
    lag ``-d`` is its transpose. When ``ring`` is set, lags are taken modulo
    ``n``. ``dense`` overrides the banded description for irregular models.
    ``generator`` optionally records a linear Gaussian process spec with
    exactly this covariance, which gives a cheap exact sampler for long series.
    """

    n: int
    p: int
    m: int
    ring: bool
    blocks: NDArray
    dense: Optional[NDArray] = None
    group: int = 0
    generator: Optional["ProcessSpec"] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        b = np.asarray(self.blocks, dtype=float)
        if b.shape != (self.m + 1, self.p, self.p):
            raise ShapeMismatch(f"blocks must have shape {(self.m + 1, self.p, self.p)}, got {b.shape}")
        b = b.copy()
        b[0] = as_symmetric(b[0])
        b.flags.writeable = False
        object.__setattr__(self, "blocks", b)
        if self.dense is not None:
            d = as_symmetric(self.dense)
            if d.shape[0] != self.n * self.p:
                raise ShapeMismatch("dense override has the wrong dimension")
            d.flags.writeable = False
            object.__setattr__(self, "dense", d)

    @property
    def dim(self) -> int:
        return self.n * self.p

    def lag_block(self, e: int) -> NDArray:
        """``Cov(X_i, X_{i+e})`` for a signed lag ``|e| <= m`` (zero beyond)."""
        if abs(e) > self.m:
            return np.zeros((self.p, self.p))
        return self.blocks[e] if e >= 0 else self.blocks[-e].T

    def block(self, i: int, j: int) -> NDArray:
        """``Cov(X_i, X_j)`` for 1-based indices."""
        if self.dense is not None:
            p = self.p
            return self.dense[(i - 1) * p : i * p, (j - 1) * p : j * p].copy()
        if self.group:
            same = (i - 1) // self.group == (j - 1) // self.group
            return self.blocks[0].copy() if same else np.zeros((self.p, self.p))
        if not self.ring:
            return self.lag_block(j - i).copy()
        out = np.zeros((self.p, self.p))
        for e in range(-self.m, self.m + 1):
            if (j - i - e) % self.n == 0:
                out += self.lag_block(e)
        return out

    def var_sum(self, idx1: NDArray) -> NDArray:
        """``Var[sum_{i in idx1} X_i]`` for 1-based indices."""
        idx = np.asarray(idx1)
        if self.dense is not None:
            rows = ((idx - 1)[:, None] * self.p + np.arange(self.p)).ravel()
            sub = self.dense[np.ix_(rows, rows)]
            return sub.reshape(len(idx), self.p, len(idx), self.p).sum(axis=(0, 2))
        if self.group:
            counts = np.bincount((idx - 1) // self.group)
            return float(np.sum(counts.astype(float) ** 2)) * self.blocks[0]
        out = np.zeros((self.p, self.p))
        for i in idx:
            for j in idx:
                if self.ring or abs(int(j) - int(i)) <= self.m:
                    out += self.block(int(i), int(j))
        return 0.5 * (out + out.T)


def expand_dense(cov: CovarianceModel, cap: int = DENSE_CAP) -> NDArray:
    """Full ``n*p x n*p`` symmetric matrix."""
    if cov.dim > cap:
        raise TooLarge(f"n*p = {cov.dim} exceeds the dense cap {cap}")
    if cov.dense is not None:
        return cov.dense.copy()
    n, p = cov.n, cov.p
    out = np.zeros((n * p, n * p))
    for i in range(1, n + 1):
        if cov.ring:
            cols = range(1, n + 1)
        else:
            cols = range(max(1, i - cov.m), min(n, i + cov.m) + 1)
        for j in cols:
            blk = cov.block(i, j)
            if np.any(blk):
                out[(i - 1) * p : i * p, (j - 1) * p : j * p] = blk
    return 0.5 * (out + out.T)


def is_psd(cov: CovarianceModel) -> bool:
    d = expand_dense(cov)
    return bool(np.linalg.eigvalsh(d)[0] >= -psd_tol(d))
