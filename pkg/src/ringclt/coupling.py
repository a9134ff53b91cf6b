"""Gaussian comparison sequences with covariance matching a target process."""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.typing import NDArray

from . import rng
from .batch import SampleBatch
from .covmodel import DENSE_CAP, CovarianceModel, expand_dense
from .errors import BadLength, TooLarge
from .linalg import CholFactor, cholesky
from .procgen import CHUNK, map_series_chunks

__all__ = ["CovarianceModel", "expand_dense", "gaussian_coupling", "map_coupling_chunks", "coupling_factor"]


def coupling_factor(cov: CovarianceModel) -> CholFactor:
    """Square factor of the dense joint covariance (Cholesky, or eigen-factor when singular)."""
    return cholesky(expand_dense(cov))


def _resolve(cov: CovarianceModel, method: str) -> str:
    if method not in ("auto", "dense", "generator"):
        raise ValueError(f"unknown coupling method {method!r}")
    if method == "auto":
        return "generator" if cov.generator is not None else "dense"
    if method == "generator" and cov.generator is None:
        raise ValueError("covariance model carries no Gaussian generator")
    return method


def map_coupling_chunks(
    cov: CovarianceModel,
    N: int,
    seed: int,
    fn: Callable[[int, NDArray], object],
    method: str = "dense",
    threads: int = 1,
    chunk: int = CHUNK,
) -> list:
    """Stream Gaussian replicates through ``fn(lo, Y_chunk)``; see :func:`gaussian_coupling`."""
    if N < 1:
        raise BadLength("N must be positive")
    route = _resolve(cov, method)
    if route == "generator":
        return map_series_chunks(cov.generator, cov.n, N, seed, fn, threads=threads, tag=rng.TAG_COUPLING, chunk=chunk)
    if cov.dim > DENSE_CAP:
        raise TooLarge(f"n*p = {cov.dim} exceeds the dense cap {DENSE_CAP}; use method='auto'")
    factor = coupling_factor(cov).lower
    dim = cov.dim

    def work(span: tuple[int, int]) -> object:
        lo, hi = span
        z = np.empty((hi - lo, dim))
        for r in range(lo, hi):
            z[r - lo] = rng.stream(seed, rng.TAG_COUPLING, r).standard_normal(dim)
        return fn(lo, (z @ factor.T).reshape(hi - lo, cov.n, cov.p))

    ranges = rng.chunk_ranges(N, chunk)
    out: list = []
    step = max(1, threads)
    for g in range(0, len(ranges), step):
        out.extend(rng.ordered_map(work, ranges[g : g + step], threads))
    return out


def gaussian_coupling(
    cov: CovarianceModel, N: int, seed: int, method: str = "dense", threads: int = 1
) -> SampleBatch:
    """``N`` centered Gaussian series whose stacked covariance equals ``cov``.

    ``method='dense'`` multiplies i.i.d. standard normals by a square factor of
    the dense joint covariance (eigen-factor when it is singular). ``'generator'``
    runs the model's linear generator with Gaussian innovations, which has the
    same covariance and scales to long series. ``'auto'`` picks the generator
    when one is attached. Replicate ``r`` is keyed by ``(seed, r)`` either way.
    """
    parts = map_coupling_chunks(cov, N, seed, lambda lo, y: y, method=method, threads=threads)
    return SampleBatch(data=np.concatenate(parts, axis=0), seed=seed, meta={"coupling": _resolve(cov, method)})
