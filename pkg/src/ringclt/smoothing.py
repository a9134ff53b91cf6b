"""Smoothed rectangle indicators and Gaussian anti-concentration.

``f_smooth`` is the piecewise-linear ramp in the largest coordinate gap
``max_i (x_i - r_i)``; ``rho_mixed`` blurs it with Gaussian noise of scale
``delta``. ``indicator_smooth`` blurs the indicator of the annulus
``A_{r,d} = {x <= r + d1} minus {x <= r - d1}`` instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rng
from .batch import SampleBatch
from .errors import DimMismatch, NonpositiveVariance, ShapeMismatch

DEFAULT_DRAWS = 256


@dataclass(frozen=True)
class SmoothingParams:
    r: tuple
    phi: float
    delta: float = 0.0
    mc_draws: int = DEFAULT_DRAWS

    def __post_init__(self) -> None:
        if not self.phi > 0:
            raise ValueError("phi must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.mc_draws < 1:
            raise ValueError("mc_draws must be at least 1")
        object.__setattr__(self, "r", tuple(float(v) for v in np.ravel(self.r)))

    def corner(self) -> NDArray:
        return np.array(self.r)


def max_gap(x: ArrayLike, r: ArrayLike) -> NDArray:
    xa = np.asarray(x, dtype=float)
    ra = np.asarray(r, dtype=float)
    if xa.shape[-1:] != ra.shape[-1:]:
        raise DimMismatch(f"point has dim {xa.shape[-1:]} but corner has dim {ra.shape[-1:]}")
    return np.max(xa - ra, axis=-1)


def ramp(gap: ArrayLike, phi: float) -> NDArray:
    g = np.asarray(gap, dtype=float)
    return np.where(g < 0, 1.0, np.where(g < 1.0 / phi, 1.0 - phi * g, 0.0))


def f_smooth(x: ArrayLike, r: ArrayLike, phi: float):
    """Ramp surrogate of ``1{x <= r}``; vectorized over leading axes of ``x``."""
    if not phi > 0:
        raise ValueError("phi must be positive")
    out = ramp(max_gap(x, r), phi)
    return float(out) if out.ndim == 0 else out


def in_annulus(x: ArrayLike, r: ArrayLike, delta: float) -> NDArray:
    g = max_gap(x, r)
    return (g > -delta) & (g <= delta)


def blur_draws(seed: int, index: int, k: int, p: int) -> NDArray:
    return rng.stream(seed, rng.TAG_BLUR, index).standard_normal((k, p))


def _mean_se(v: NDArray) -> tuple[float, float]:
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def rho_mixed(x: ArrayLike, params: SmoothingParams, seed: int, index: int = 0) -> tuple[float, float]:
    """``E f_{r,phi}(x + delta Z)`` by Monte Carlo: ``(estimate, standard error)``."""
    xa = np.asarray(x, dtype=float)
    r = params.corner()
    if params.delta == 0:
        return float(f_smooth(xa, r, params.phi)), 0.0
    z = blur_draws(seed, index, params.mc_draws, r.size)
    return _mean_se(ramp(max_gap(xa[None, :] + params.delta * z, r), params.phi))


def indicator_smooth(
    x: ArrayLike, r: ArrayLike, delta_band: float, eps: float, K: int, seed: int, index: int = 0
) -> tuple[float, float]:
    """``P[x + eps Z in A_{r, delta_band}]`` by Monte Carlo: ``(estimate, standard error)``."""
    if delta_band < 0 or eps < 0:
        raise ValueError("delta_band and eps must be nonnegative")
    xa = np.asarray(x, dtype=float)
    ra = np.asarray(r, dtype=float)
    if eps == 0:
        return float(in_annulus(xa, ra, delta_band)), 0.0
    z = blur_draws(seed, index, K, ra.size)
    hits = in_annulus(xa[None, :] + eps * z, ra, delta_band).astype(float)
    return _mean_se(hits)


def indicator_sandwich(
    x: ArrayLike, r: ArrayLike, delta_band: float, eps: float, h: float = 100.0
) -> tuple[float, float]:
    """Deterministic bounds on :func:`indicator_smooth` from tail-splitting the blur at level ``h``.

    With ``eps_o = 10 eps sqrt(log(p h))`` the blurred indicator lies between
    ``1{x in A_{r, d - eps_o}} - h^-4`` and ``1{x in A_{r, d + eps_o}} + h^-4``.
    """
    xa = np.asarray(x, dtype=float)
    ra = np.asarray(r, dtype=float)
    eps_o = 10.0 * eps * math.sqrt(math.log(ra.size * h))
    tail = h**-4.0
    lower = float(in_annulus(xa, ra, delta_band - eps_o)) - tail
    upper = float(in_annulus(xa, ra, delta_band + eps_o)) + tail
    return lower, upper


def nazarov_bound(delta: float, p: int, min_var: float, C: float = 1.0) -> float:
    """``C delta sqrt(log(e p) / min_var)``, the Gaussian annulus-mass bound."""
    if not min_var > 0:
        raise NonpositiveVariance(f"minimum variance must be positive, got {min_var}")
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return C * delta * math.sqrt((1.0 + math.log(p)) / min_var)


def mean_rho(sums: NDArray, params: SmoothingParams, z: NDArray, chunk: int = 4096) -> float:
    """Average of ``f(s + delta z_k)`` over rows ``s`` of ``sums`` and blur draws ``z``."""
    r = params.corner()
    total = 0.0
    for lo in range(0, sums.shape[0], chunk):
        s = sums[lo : lo + chunk]
        gaps = np.max(s[:, None, :] + params.delta * z[None, :, :] - r, axis=-1)
        total += float(ramp(gaps, params.phi).sum())
    return total / (sums.shape[0] * z.shape[0])


def smoothing_gap(
    batchX: SampleBatch,
    batchY: SampleBatch,
    r_grid: Sequence[ArrayLike],
    params: SmoothingParams,
    seed: int = 0,
    normalize: bool = True,
) -> float:
    """``max_r |mean rho_r(X-sum) - mean rho_r(Y-sum)|`` with blur draws shared by both batches.

    ``params.r`` is ignored; the corners come from ``r_grid``. Draws for grid
    point ``g`` are keyed by ``(seed, g)``.
    """
    if batchX.p != batchY.p or batchX.n != batchY.n:
        raise ShapeMismatch("batches must share n and p")
    if len(r_grid) == 0:
        raise ValueError("r_grid is empty")
    scale = 1.0 / math.sqrt(batchX.n) if normalize else 1.0
    sx, sy = batchX.totals() * scale, batchY.totals() * scale
    best = 0.0
    for g, r in enumerate(r_grid):
        pr = SmoothingParams(tuple(np.ravel(r)), params.phi, params.delta, params.mc_draws)
        if pr.corner().size != batchX.p:
            raise DimMismatch("grid corner dimension differs from batch dimension")
        z = blur_draws(seed, g, params.mc_draws, batchX.p) if params.delta > 0 else np.zeros((1, batchX.p))
        best = max(best, abs(mean_rho(sx, pr, z) - mean_rho(sy, pr, z)))
    return best
