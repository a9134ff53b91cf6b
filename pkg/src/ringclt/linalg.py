"""Small dense symmetric linear algebra.

Thin, contract-checked wrappers over LAPACK (via numpy/scipy) for the
covariance matrices the lab handles: Cholesky with a PSD eigen-fallback,
extreme eigenvalues, SPD inversion and Schur-complement conditioning of a
block sum on the remaining blocks.

Tolerances are relative to ``trace/dim`` so every routine is scale free.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla

from .errors import BadIndexSet, NotPositiveDefinite, NotPositiveSemiDefinite, NotSymmetric
from .intervals import IntervalSet

PSD_RTOL = 1e-10
SYM_RTOL = 1e-12


def _scale(m: NDArray) -> float:
    return abs(float(np.trace(m))) / m.shape[0]


def as_symmetric(m: ArrayLike) -> NDArray:
    """Validate a square, numerically symmetric matrix and return an exactly symmetric copy."""
    a = np.array(m, dtype=float, ndmin=2)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T))
    if asym > SYM_RTOL * max(1.0, float(np.max(np.abs(a)))):
        raise NotSymmetric(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (a + a.T)


def psd_tol(m: NDArray) -> float:
    return PSD_RTOL * _scale(m)


@dataclass(frozen=True)
class CholFactor:
    """Square factor with ``lower @ lower.T`` equal to the factored matrix.

    For positive-definite input ``lower`` is the triangular Cholesky factor;
    for rank-deficient PSD input it is ``V diag(sqrt(lambda+))`` from the
    eigendecomposition (square, not triangular).
    """

    lower: NDArray
    rank: int

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def triangular(self) -> bool:
        return bool(np.allclose(self.lower, np.tril(self.lower), rtol=0.0, atol=0.0))


def cholesky(m: ArrayLike) -> CholFactor:
    a = as_symmetric(m)
    dim = a.shape[0]
    tol = psd_tol(a)
    try:
        lower = np.linalg.cholesky(a)
        # a tiny positive pivot means the matrix is singular up to rounding
        if np.min(np.diag(lower)) ** 2 > tol:
            return CholFactor(lower=lower, rank=dim)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise NotPositiveSemiDefinite(f"minimum eigenvalue {w[0]:.6g} below -{tol:.3g}")
    w = np.where(w > tol, w, 0.0)
    return CholFactor(lower=v * np.sqrt(w), rank=int(np.count_nonzero(w)))


def min_eigenvalue(m: ArrayLike) -> float:
    return float(np.linalg.eigvalsh(as_symmetric(m))[0])


def invert(m: ArrayLike) -> NDArray:
    a = as_symmetric(m)
    try:
        c, low = sla.cho_factor(a, lower=True)
    except sla.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.min(np.abs(np.diag(c))) ** 2 <= psd_tol(a):
        raise NotPositiveDefinite("matrix is singular to working precision")
    inv = sla.cho_solve((c, low), np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def pinv_psd(m: NDArray) -> NDArray:
    """Pseudo-inverse of a symmetric PSD matrix, dropping eigenvalues <= 1e-10 * trace/dim."""
    w, v = np.linalg.eigh(m)
    keep = w > psd_tol(m)
    inv = (v[:, keep] / w[keep]) @ v[:, keep].T
    return 0.5 * (inv + inv.T)


def _block_index(rows: NDArray, p: int) -> NDArray:
    return (rows[:, None] * p + np.arange(p)[None, :]).ravel()


def schur_conditional(
    joint: ArrayLike, n: int, p: int, interval: IntervalSet, *, checked: bool = True
) -> tuple[NDArray, NDArray, NDArray]:
    """Conditional law of ``S = sum_{i in I} Y_i`` given ``{Y_i : i not in I}``.

    Returns ``(cond_cov, gain, complement)`` where ``E[S | rest] = gain @ vec(rest)``
    and ``complement`` lists the 0-based time indices of the conditioning blocks.
    """
    a = as_symmetric(joint) if checked else np.asarray(joint, dtype=float)
    if a.shape[0] != n * p:
        raise BadIndexSet(f"joint has dim {a.shape[0]}, expected n*p = {n * p}")
    inside = interval.indices0(n)
    mask = np.zeros(n, dtype=bool)
    mask[inside] = True
    comp = np.flatnonzero(~mask)

    # summing operator over the I blocks applied on the left
    ii = _block_index(inside, p)
    rows_i = a[ii, :].reshape(len(inside), p, n * p).sum(axis=0)
    var_s = rows_i[:, ii].reshape(p, len(inside), p).sum(axis=1)
    var_s = 0.5 * (var_s + var_s.T)
    if comp.size == 0:
        return var_s, np.zeros((p, 0)), comp

    cc = _block_index(comp, p)
    cross = rows_i[:, cc]
    sigma_cc = a[np.ix_(cc, cc)]
    gain = cross @ pinv_psd(sigma_cc)
    cond = var_s - gain @ cross.T
    return 0.5 * (cond + cond.T), gain, comp


def schur_conditional_cov(joint: ArrayLike, n: int, p: int, interval: IntervalSet) -> NDArray:
    """p x p covariance of the block sum over ``interval`` conditional on every other block."""
    return schur_conditional(joint, n, p, interval)[0]
