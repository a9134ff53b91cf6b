"""Rectangle-class distances between two batches, and annulus anti-concentration.

``mu_hat`` compares the empirical laws of the per-replicate total sums over
rectangles: one-sided corners ``{x <= r}`` (default) or two-sided boxes.
``mu_exact`` is a brute-force oracle for a finite-atom law against a diagonal
Gaussian. ``kappa_hat`` estimates ``sup_r P[S_I in A_{r,delta}]`` for the
partial sum ``S_I``, optionally conditional on the rest of a Gaussian series.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import rng
from .batch import SampleBatch
from .covmodel import CovarianceModel, expand_dense
from .errors import (
    BadNesting,
    DimMismatch,
    DimTooLarge,
    MissingCovariance,
    ShapeMismatch,
    TwoSidedDimTooLarge,
)
from .intervals import IntervalSet
from .linalg import cholesky, schur_conditional

RECT_CLASSES = ("one_sided", "two_sided")
MAX_CANDIDATES = 2048
QUANTILE_CORNERS = 64
GRID_CAP = 1 << 21
TWO_SIDED_GRID = 32
TWO_SIDED_MAX_P = 8
TWO_SIDED_BUDGET = 1024
KAPPA_CANDIDATES = 512
KAPPA_COND_DRAWS = 64
KAPPA_COND_SAMPLES = 8192
DKW_ALPHA = 0.01


@dataclass(frozen=True)
class DistanceEstimate:
    value: float
    se: float
    n_samples: int
    n_candidates: int
    rect_class: str

    CSV_HEADER = ("value", "se", "n_samples", "n_candidates", "class")

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "se": self.se,
            "n_samples": self.n_samples,
            "n_candidates": self.n_candidates,
            "class": self.rect_class,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    def csv_row(self) -> list[str]:
        return [
            format(self.value, ".17g"),
            format(self.se, ".17g"),
            str(self.n_samples),
            str(self.n_candidates),
            self.rect_class,
        ]


@dataclass(frozen=True)
class DiscreteLaw:
    """Finitely many atoms ``points[j]`` with probabilities ``probs[j]``."""

    points: NDArray
    probs: NDArray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        pr = np.asarray(self.probs, dtype=float).ravel()
        if pts.shape[0] != pr.size or pr.size == 0:
            raise ShapeMismatch("need one probability per atom")
        if np.any(pr < 0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)

    @classmethod
    def from_atoms(cls, atoms: Sequence[tuple[ArrayLike, float]]) -> "DiscreteLaw":
        return cls(np.array([np.ravel(a) for a, _ in atoms], dtype=float), np.array([w for _, w in atoms]))

    @property
    def p(self) -> int:
        return self.points.shape[1]

    def sample(self, N: int, seed: int) -> NDArray:
        """``(N, p)`` i.i.d. draws."""
        u = rng.stream(seed, rng.TAG_PROCESS, 0).random(N)
        idx = np.minimum(np.searchsorted(np.cumsum(self.probs), u, side="right"), self.probs.size - 1)
        return self.points[idx]


def dkw_se(nx: int, ny: int, alpha: float = DKW_ALPHA) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * min(nx, ny)))


def normal_cdf(z: float) -> float:
    if z == math.inf:
        return 1.0
    if z == -math.inf:
        return 0.0
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


# -- one-sided ----------------------------------------------------------------


def _sup_ecdf_gap_1d(x: NDArray, y: NDArray) -> float:
    """Exact ``sup_r |F_x(r) - F_y(r)|`` for univariate samples."""
    v = np.concatenate([x, y])
    w = np.concatenate([np.full(x.size, 1.0 / x.size), np.full(y.size, -1.0 / y.size)])
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order]
    # ECDF gap right after each distinct value; integer counts keep it exact
    cx = np.cumsum(w > 0)
    cy = np.cumsum(w < 0)
    last = np.append(v[1:] != v[:-1], True)
    gap = np.abs(cx[last] / x.size - cy[last] / y.size)
    return float(gap.max())


def dominance_counts(points: NDArray, corners: NDArray, chunk: int = 65536, cchunk: int = 64) -> NDArray:
    """``counts[c] = #{i : points[i] <= corners[c]}`` coordinatewise."""
    counts = np.zeros(corners.shape[0], dtype=np.int64)
    p = points.shape[1]
    for clo in range(0, corners.shape[0], cchunk):
        cs = corners[clo : clo + cchunk]
        for lo in range(0, points.shape[0], chunk):
            pts = points[lo : lo + chunk]
            ok = pts[:, None, 0] <= cs[None, :, 0]
            for k in range(1, p):
                ok &= pts[:, None, k] <= cs[None, :, k]
            counts[clo : clo + cchunk] += ok.sum(axis=0)
    return counts


def _even_subset(a: NDArray, k: int) -> NDArray:
    if a.shape[0] <= k:
        return a
    return a[(np.arange(k) * a.shape[0]) // k]


def one_sided_candidates(sx: NDArray, sy: NDArray, max_candidates: int = MAX_CANDIDATES) -> NDArray:
    """Pooled sample points, evenly subsampled per batch beyond the budget."""
    half = max(1, max_candidates // 2)
    return np.concatenate([_even_subset(sx, half), _even_subset(sy, half)])


def coordinate_grids(pooled: NDArray, levels: int = QUANTILE_CORNERS) -> list[NDArray]:
    """Per coordinate: pooled quantiles plus, for each, the next smaller pooled value (its left limit)."""
    q = (np.arange(levels) + 1.0) / (levels + 1.0)
    out = []
    for k in range(pooled.shape[1]):
        col = np.sort(pooled[:, k])
        vals = np.unique(np.quantile(col, q, method="lower"))
        pos = np.searchsorted(col, vals, side="left")
        below = col[pos[pos > 0] - 1]
        out.append(np.unique(np.concatenate([vals, below])))
    return out


def grid_dominance(points: NDArray, grids: Sequence[NDArray]) -> NDArray:
    """``#{i : points[i] <= (g_1[j_1], ..., g_p[j_p])}`` for every grid corner, by cumulative histogram."""
    codes = [np.searchsorted(g, points[:, k], side="left") for k, g in enumerate(grids)]
    shape = tuple(g.size + 1 for g in grids)
    hist = np.bincount(np.ravel_multi_index(codes, shape), minlength=int(np.prod(shape))).reshape(shape)
    for ax in range(len(grids)):
        hist = np.cumsum(hist, axis=ax)
    return hist[tuple(slice(0, g.size) for g in grids)]


def _diagonal_grid_counts(points: NDArray, grids: Sequence[NDArray]) -> NDArray:
    levels = min(g.size for g in grids)
    corners = np.stack([g[np.linspace(0, g.size - 1, levels).round().astype(int)] for g in grids], axis=1)
    return dominance_counts(points, corners)


def _one_sided(sx: NDArray, sy: NDArray, max_candidates: int) -> tuple[float, int]:
    if sx.shape[1] == 1:
        return _sup_ecdf_gap_1d(sx[:, 0], sy[:, 0]), sx.shape[0] + sy.shape[0]
    cand = one_sided_candidates(sx, sy, max_candidates)
    gap = np.abs(dominance_counts(sx, cand) / sx.shape[0] - dominance_counts(sy, cand) / sy.shape[0])
    best = float(gap.max())
    grids = coordinate_grids(np.concatenate([sx, sy]))
    n_grid = int(np.prod([g.size for g in grids], dtype=float)) if len(grids) <= 3 else GRID_CAP + 1
    if n_grid <= GRID_CAP:
        gx, gy = grid_dominance(sx, grids), grid_dominance(sy, grids)
    else:
        gx, gy = _diagonal_grid_counts(sx, grids), _diagonal_grid_counts(sy, grids)
        n_grid = gx.size
    best = max(best, float(np.abs(gx / sx.shape[0] - gy / sy.shape[0]).max()))
    return best, cand.shape[0] + n_grid


# -- two-sided ----------------------------------------------------------------


def _bin_codes(sx: NDArray, sy: NDArray) -> tuple[NDArray, NDArray, int]:
    """Per-coordinate bin index in ``0..G`` against pooled quantile grids of ``G`` points."""
    pooled = np.concatenate([sx, sy])
    levels = np.arange(TWO_SIDED_GRID + 1) / TWO_SIDED_GRID
    grid = np.quantile(pooled, levels, axis=0, method="lower")
    bx = np.empty(sx.shape, dtype=np.int64)
    by = np.empty(sy.shape, dtype=np.int64)
    for k in range(sx.shape[1]):
        bx[:, k] = np.searchsorted(grid[:, k], sx[:, k], side="left")
        by[:, k] = np.searchsorted(grid[:, k], sy[:, k], side="left")
    return bx, by, grid.shape[0] + 1


def _box_masses_exhaustive(codes: NDArray, nbins: int) -> NDArray:
    """Masses of every product of contiguous bin ranges (p <= 2), flattened."""
    p = codes.shape[1]
    hist = np.zeros((nbins,) * p)
    np.add.at(hist, tuple(codes.T), 1.0)
    cum = hist
    for ax in range(p):
        cum = np.cumsum(cum, axis=ax)
        cum = np.concatenate([np.zeros_like(cum.take([0], axis=ax)), cum], axis=ax)
    lo, hi = np.triu_indices(nbins)  # bins lo..hi inclusive
    hi = hi + 1
    if p == 1:
        return (cum[hi] - cum[lo]) / codes.shape[0]
    a1, b1 = lo[:, None], hi[:, None]
    a2, b2 = lo[None, :], hi[None, :]
    mass = cum[b1, b2] - cum[a1, b2] - cum[b1, a2] + cum[a1, a2]
    return mass.ravel() / codes.shape[0]


def _sampled_boxes(p: int, nbins: int, budget: int) -> tuple[NDArray, NDArray]:
    g = rng.stream(0, rng.TAG_CANDIDATES, p)
    a = g.integers(0, nbins, size=(budget, p))
    b = g.integers(0, nbins, size=(budget, p))
    return np.minimum(a, b), np.maximum(a, b)


def _box_masses_sampled(codes: NDArray, lo: NDArray, hi: NDArray, chunk: int = 32768) -> NDArray:
    counts = np.zeros(lo.shape[0], dtype=np.int64)
    for s in range(0, codes.shape[0], chunk):
        c = codes[s : s + chunk, None, :]
        counts += np.all((c >= lo[None]) & (c <= hi[None]), axis=2).sum(axis=0)
    return counts / codes.shape[0]


def _two_sided(sx: NDArray, sy: NDArray) -> tuple[float, int]:
    p = sx.shape[1]
    if p > TWO_SIDED_MAX_P:
        raise TwoSidedDimTooLarge(f"two-sided class supports p <= {TWO_SIDED_MAX_P}, got {p}")
    bx, by, nbins = _bin_codes(sx, sy)
    if p <= 2:
        gap = np.abs(_box_masses_exhaustive(bx, nbins) - _box_masses_exhaustive(by, nbins))
    else:
        lo, hi = _sampled_boxes(p, nbins, TWO_SIDED_BUDGET)
        gap = np.abs(_box_masses_sampled(bx, lo, hi) - _box_masses_sampled(by, lo, hi))
    return float(gap.max()), gap.size


def mu_from_sums(
    sx: NDArray, sy: NDArray, rect_class: str = "one_sided", max_candidates: int = MAX_CANDIDATES
) -> DistanceEstimate:
    """:func:`mu_hat` on precomputed ``(N, p)`` sum vectors."""
    sx, sy = np.asarray(sx, dtype=float), np.asarray(sy, dtype=float)
    if sx.ndim != 2 or sy.ndim != 2 or sx.shape[1] != sy.shape[1]:
        raise ShapeMismatch(f"sum arrays must be (N, p) with equal p, got {sx.shape} and {sy.shape}")
    if rect_class == "one_sided":
        value, nc = _one_sided(sx, sy, max_candidates)
    elif rect_class == "two_sided":
        value, nc = _two_sided(sx, sy)
    else:
        raise ValueError(f"unknown rectangle class {rect_class!r}")
    n_samples = min(sx.shape[0], sy.shape[0])
    return DistanceEstimate(min(max(value, 0.0), 1.0), dkw_se(sx.shape[0], sy.shape[0]), n_samples, nc, rect_class)


def mu_hat(
    batchX: SampleBatch,
    batchY: SampleBatch,
    rect_class: str = "one_sided",
    normalize: bool = True,
    max_candidates: int = MAX_CANDIDATES,
) -> DistanceEstimate:
    """Sup over rectangles of the gap between the empirical laws of the two batches' total sums.

    ``normalize`` is accepted for interface symmetry: rescaling both sums by
    ``1/sqrt(n)`` is a common monotone map, so the comparisons run on the raw
    sums and the value is identical either way.
    """
    if batchX.p != batchY.p:
        raise ShapeMismatch(f"batches have p={batchX.p} and p={batchY.p}")
    return mu_from_sums(batchX.totals(), batchY.totals(), rect_class, max_candidates)


# -- exact oracle -------------------------------------------------------------


def mu_exact(lawX: DiscreteLaw, mean: ArrayLike, sd: ArrayLike) -> float:
    """Exact one-sided distance between ``lawX`` and ``N(mean, diag(sd^2))`` for ``p <= 2``.

    The gap only changes at atom coordinates, so it suffices to check every
    combination of per-coordinate candidates ``x_k <= a``, ``x_k < a`` (the
    left limit) and ``x_k <= +inf``.
    """
    p = lawX.p
    if p > 2:
        raise DimTooLarge(f"exact oracle supports p <= 2, got {p}")
    mu = np.ravel(np.asarray(mean, dtype=float))
    s = np.ravel(np.asarray(sd, dtype=float))
    if mu.size != p or s.size != p:
        raise DimMismatch("Gaussian parameters do not match the law's dimension")
    if np.any(s <= 0):
        raise ValueError("standard deviations must be positive")
    per_coord = []
    for k in range(p):
        vals = np.unique(lawX.points[:, k])
        cands = [(float(a), strict) for a in vals for strict in (False, True)] + [(math.inf, False)]
        per_coord.append(cands)
    best = 0.0
    grids = np.meshgrid(*[np.arange(len(c)) for c in per_coord], indexing="ij")
    for combo in zip(*[g.ravel() for g in grids]):
        inside = np.ones(lawX.probs.size, dtype=bool)
        gauss = 1.0
        for k, j in enumerate(combo):
            a, strict = per_coord[k][j]
            col = lawX.points[:, k]
            inside &= (col < a) if strict else (col <= a)
            gauss *= normal_cdf((a - mu[k]) / s[k])
        best = max(best, abs(float(lawX.probs[inside].sum()) - gauss))
    return best


# -- anti-concentration -------------------------------------------------------


def annulus_mass(points: NDArray, r: NDArray, delta: float) -> float:
    g = np.max(points - r, axis=1)
    return float(np.mean((g > -delta) & (g <= delta)))


def _diagonal_window_sup(mx: NDArray, delta: float) -> int:
    """Largest number of values of ``mx`` in a window ``(t - 2 delta, t]``."""
    if delta <= 0:
        return 0
    srt = np.sort(mx)
    left = np.searchsorted(srt, srt - 2.0 * delta, side="right")
    return int((np.arange(1, srt.size + 1) - left).max())


def _sample_corner_counts(points: NDArray, cand: NDArray, delta: float, cchunk: int = 128) -> NDArray:
    """For corners ``r = c - delta 1``: ``#{i : -2 delta < max(points_i - c) <= 0}``."""
    counts = np.zeros(cand.shape[0], dtype=np.int64)
    if delta <= 0:
        return counts
    for lo in range(0, cand.shape[0], cchunk):
        cs = cand[lo : lo + cchunk]
        g = np.subtract.outer(points[:, 0], cs[:, 0])
        for k in range(1, points.shape[1]):
            np.maximum(g, np.subtract.outer(points[:, k], cs[:, k]), out=g)
        counts[lo : lo + cchunk] = np.count_nonzero((g > -2.0 * delta) & (g <= 0.0), axis=0)
    return counts


def sup_annulus(points: NDArray, delta: float, n_candidates: int = KAPPA_CANDIDATES) -> tuple[float, int]:
    """Empirical ``sup_r`` of the annulus mass over the diagonal (exact) and sample-anchored corners.

    Returns ``(mass, number of candidate corners)``; a lower bound on the sup over all of ``R^p``.
    """
    N = points.shape[0]
    best = _diagonal_window_sup(points.max(axis=1), delta)
    cand = _even_subset(points, n_candidates)
    if points.shape[1] > 1 and delta > 0:
        best = max(best, int(_sample_corner_counts(points, cand, delta).max()))
    return best / N, N + cand.shape[0]


def _binomial_se(v: float, N: int) -> float:
    return math.sqrt(max(v * (1.0 - v), 0.0) / N)


def kappa_hat(
    batch: SampleBatch,
    interval: IntervalSet,
    delta: float,
    conditional: bool = False,
    cov: Optional[CovarianceModel] = None,
    seed: int = 0,
    normalize: bool = False,
    n_draws: int = KAPPA_COND_DRAWS,
    n_samples: Optional[int] = None,
) -> DistanceEstimate:
    """Estimate ``kappa_I(delta) = sup_r P[S_I in A_{r,delta}]``.

    Unconditionally the sup is taken over the empirical law of ``S_I`` in
    ``batch``. With ``conditional=True`` the conditional Gaussian law of
    ``S_I`` given the other blocks is taken from ``cov``; for each of
    ``n_draws`` conditioning values (read from the batch) a fresh conditional
    sample is drawn around the conditional mean, its empirical sup computed,
    and the sups averaged. Candidates are finite, so the value is biased low.
    ``normalize`` divides ``S_I`` by ``sqrt(|I|)``.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    idx0 = interval.indices0(batch.n)
    scale = 1.0 / math.sqrt(idx0.size) if normalize else 1.0
    if not conditional:
        s = batch.partial_sums(idx0) * scale
        v, nc = sup_annulus(s, delta)
        return DistanceEstimate(v, _binomial_se(v, batch.N), batch.N, nc, "annulus")
    if cov is None:
        raise MissingCovariance("conditional kappa needs a Gaussian covariance model")
    if (cov.n, cov.p) != (batch.n, batch.p):
        raise ShapeMismatch(f"covariance is for (n, p)={(cov.n, cov.p)}, batch has {(batch.n, batch.p)}")
    cond, gain, comp = schur_conditional(expand_dense(cov), cov.n, cov.p, interval)
    factor = cholesky(cond).lower if np.any(cond) else np.zeros_like(cond)
    M = n_samples if n_samples is not None else min(batch.N, KAPPA_COND_SAMPLES)
    picks = (np.arange(n_draws) * batch.N) // n_draws
    sups = np.empty(n_draws)
    nc = 0
    for j, r in enumerate(picks):
        center = gain @ batch.data[r, comp, :].ravel() if comp.size else np.zeros(batch.p)
        z = rng.stream(seed, rng.TAG_KAPPA_SAMPLE, j).standard_normal((M, batch.p))
        pts = (center + z @ factor.T) * scale
        sups[j], nc = sup_annulus(pts, delta)
    v = float(sups.mean())
    var_between = float(sups.var(ddof=1)) if n_draws > 1 else 0.0
    se = math.sqrt(var_between / n_draws + max(v * (1.0 - v), 0.0) / (n_draws * M))
    return DistanceEstimate(v, se, n_draws * M, nc, "annulus")


@dataclass(frozen=True)
class MonotonicityCheck:
    lhs: DistanceEstimate
    rhs: DistanceEstimate
    passed: bool

    def as_tuple(self) -> tuple[float, float, bool]:
        return self.lhs.value, self.rhs.value, self.passed


def kappa_monotonicity_suite(
    batch: SampleBatch,
    pairs: Sequence[tuple[tuple[IntervalSet, float], tuple[IntervalSet, float]]],
    conditional: bool = False,
    cov: Optional[CovarianceModel] = None,
    seed: int = 0,
    k: float = 4.0,
    **kw,
) -> list[MonotonicityCheck]:
    """Check ``kappa_I(delta) <= kappa_I'(delta') + k (SE + SE')`` for each ``((I, delta), (I', delta'))``."""
    out = []
    for (big, d), (small, d2) in pairs:
        if not big.contains(small, batch.n) or d2 < d:
            raise BadNesting(f"need {small} inside {big} and {d2} >= {d}")
        lhs = kappa_hat(batch, big, d, conditional, cov, seed, **kw)
        rhs = kappa_hat(batch, small, d2, conditional, cov, seed, **kw)
        out.append(MonotonicityCheck(lhs, rhs, lhs.value <= rhs.value + k * (lhs.se + rhs.se)))
    return out
