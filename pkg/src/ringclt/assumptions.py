"""Non-degeneracy assumptions over interval index sets.

For every interval ``I`` (contiguous, plus wrap-around ones for ring models):

* MIN-VAR: ``min_k Var[Y_I^(k)] >= s2_min * |I| * min(m+1, |I|)``
* MIN-EV:  ``lambda_min(Var[Y_I | Y_{I^c}]) >= s2_low * d * min(m+1, d)``
  with ``d = max(|I| - 2m, 0)``
* VAR-EV:  ``s_min <= s_low * sqrt(log(4 e p) / 2)``

The validator reports the largest constants for which MIN-VAR and MIN-EV
hold, together with the intervals attaining them.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covmodel import CovarianceModel, expand_dense
from .intervals import IntervalSet
from .linalg import schur_conditional

__all__ = [
    "AssumptionReport",
    "enumerate_intervals",
    "sigma_min_sq_of",
    "minvar_ratio",
    "minev_ratio",
    "fit_sigma_min",
    "fit_sigma_lower",
    "check_var_ev",
    "validate",
]


def enumerate_intervals(n: int, ring: bool = False) -> list[IntervalSet]:
    """All contiguous intervals, plus proper wrap-around sets when ``ring``; ordered by size then ``lo``."""
    out = [IntervalSet(i, j) for i in range(1, n + 1) for j in range(i, n + 1)]
    if ring:
        # j == i + 1 would be the full set again
        out += [IntervalSet(i, j, True) for i in range(1, n + 1) for j in range(i + 2, n + 1)]
    return sorted(out, key=lambda s: (s.size(n), s.lo, s.wrap, s.hi))


def sigma_min_sq_of(cov: CovarianceModel, interval: IntervalSet) -> float:
    return float(np.min(np.diag(cov.var_sum(interval.indices(cov.n)))))


def _minvar_den(size: int, m: int) -> int:
    return size * min(m + 1, size)


def _minev_den(size: int, m: int) -> int:
    d = max(size - 2 * m, 0)
    return d * min(m + 1, d)


def minvar_ratio(cov: CovarianceModel, interval: IntervalSet, m: int) -> float:
    return sigma_min_sq_of(cov, interval) / _minvar_den(interval.size(cov.n), m)


def conditional_min_eig(cov: CovarianceModel, interval: IntervalSet, joint: Optional[np.ndarray] = None) -> float:
    joint = expand_dense(cov) if joint is None else joint
    cond = schur_conditional(joint, cov.n, cov.p, interval, checked=False)[0]
    return float(np.linalg.eigvalsh(cond)[0])


def minev_ratio(
    cov: CovarianceModel, interval: IntervalSet, m: int, joint: Optional[np.ndarray] = None
) -> Optional[float]:
    """MIN-EV ratio, or ``None`` when the denominator vanishes."""
    den = _minev_den(interval.size(cov.n), m)
    if den == 0:
        return None
    return conditional_min_eig(cov, interval, joint) / den


def fit_sigma_min(cov: CovarianceModel, m: Optional[int] = None) -> tuple[float, IntervalSet]:
    m = cov.m if m is None else m
    best, arg = math.inf, None
    for iv in enumerate_intervals(cov.n, cov.ring):
        r = minvar_ratio(cov, iv, m)
        if r < best:
            best, arg = r, iv
    return max(best, 0.0), arg


def fit_sigma_lower(
    cov: CovarianceModel, m: Optional[int] = None
) -> tuple[float, Optional[IntervalSet], int]:
    """``(sigma_lower_sq, worst interval or None, number of zero-denominator intervals skipped)``."""
    m = cov.m if m is None else m
    joint = expand_dense(cov)
    best, arg, skipped = math.inf, None, 0
    for iv in enumerate_intervals(cov.n, cov.ring):
        r = minev_ratio(cov, iv, m, joint)
        if r is None:
            skipped += 1
            continue
        if r < best:
            best, arg = r, iv
    if arg is None:
        return 0.0, None, skipped
    return max(best, 0.0), arg, skipped


def check_var_ev(sigma_min: float, sigma_lower: float, p: int) -> bool:
    return sigma_min <= sigma_lower * math.sqrt(math.log(4.0 * math.e * p) / 2.0)


@dataclass(frozen=True)
class AssumptionReport:
    sigma_min_sq: float
    sigma_lower_sq: float
    worst_minvar: IntervalSet
    worst_minev: Optional[IntervalSet]
    var_ev_holds: bool
    n: int
    p: int
    m: int
    skipped_intervals: int

    def as_dict(self) -> dict:
        return {
            "sigma_min_sq": self.sigma_min_sq,
            "sigma_lower_sq": self.sigma_lower_sq,
            "worst_minvar": self.worst_minvar.as_dict(),
            "worst_minev": None if self.worst_minev is None else self.worst_minev.as_dict(),
            "var_ev_holds": self.var_ev_holds,
            "n": self.n,
            "p": self.p,
            "m": self.m,
            "skipped_intervals": self.skipped_intervals,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2)


def validate(cov: CovarianceModel, m: Optional[int] = None) -> AssumptionReport:
    m = cov.m if m is None else m
    s_min, worst_var = fit_sigma_min(cov, m)
    s_low, worst_ev, skipped = fit_sigma_lower(cov, m)
    return AssumptionReport(
        sigma_min_sq=s_min,
        sigma_lower_sq=s_low,
        worst_minvar=worst_var,
        worst_minev=worst_ev,
        var_ev_holds=check_var_ev(math.sqrt(s_min), math.sqrt(s_low), cov.p),
        n=cov.n,
        p=cov.p,
        m=m,
        skipped_intervals=skipped,
    )
