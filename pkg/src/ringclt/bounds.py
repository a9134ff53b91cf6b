"""Right-hand sides of the high-dimensional Berry-Esseen bounds.

All logarithms are natural. With ``L = log(e p)`` the shared prefactor is
``C log(e n) / s_min * sqrt(log(p n) / n)`` and the brackets are::

    q3: (L3 / s_low^2) L^2   + (nu_q / s_low^2)^(1/(q-2)) L^max(1, 2/(q-2))
    q4: (L3 / s_low^2) L^1.5 + sqrt(L4) / s_low L + (nu_q / s_low^2)^(1/(q-2)) L

The blocked variants replace ``n`` by ``n_eff = n / m``. Without the
VAR-EV relation, ``s_min`` in the prefactor becomes ``min(s_min, s_low sqrt(L))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

from .errors import BadM, BadObservation, BadQ, EmptyObservations

FORMULAS = ("thm31_q3", "thm32_q4", "cor_q3", "cor_q4", "shergin")


@dataclass(frozen=True)
class BoundInputs:
    n: float
    p: int
    m: int
    q: float
    sigma_min: float
    sigma_lower: float
    Lbar3: float = 0.0
    Lbar4: float = 0.0
    nubar_q: float = 0.0
    C: float = 1.0
    no_var_ev: bool = False

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be at least 1")
        if not (self.sigma_min > 0 and self.sigma_lower > 0):
            raise ValueError("sigma_min and sigma_lower must be positive")
        if min(self.Lbar3, self.Lbar4, self.nubar_q) < 0:
            raise ValueError("moment inputs must be nonnegative")
        if self.C < 0:
            raise ValueError("C must be nonnegative")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class BoundEvaluation:
    rhs: float
    formula_id: str
    inputs: BoundInputs

    CSV_HEADER = ("formula_id", "n", "p", "m", "q", "rhs", "C")

    def as_dict(self) -> dict:
        return {"rhs": self.rhs, "formula_id": self.formula_id, "inputs": self.inputs.as_dict()}

    def to_json(self) -> str:
        return json.dumps(self.as_dict())

    def csv_row(self) -> list[str]:
        b = self.inputs
        return [self.formula_id, format(b.n, "g"), str(b.p), str(b.m), format(b.q, "g"), format(self.rhs, ".17g"), format(b.C, ".17g")]


def _log_ep(p: int) -> float:
    return 1.0 + math.log(p)


def _sigma_eff(b: BoundInputs) -> float:
    if b.no_var_ev:
        return min(b.sigma_min, b.sigma_lower * math.sqrt(_log_ep(b.p)))
    return b.sigma_min


def _prefactor(b: BoundInputs, n: float) -> float:
    return b.C * (1.0 + math.log(n)) / _sigma_eff(b) * math.sqrt(math.log(b.p * n) / n)


def _bracket_q3(b: BoundInputs) -> float:
    L = _log_ep(b.p)
    s2 = b.sigma_lower**2
    e = 1.0 / (b.q - 2.0)
    return (b.Lbar3 / s2) * L**2 + (b.nubar_q / s2) ** e * L ** max(1.0, 2.0 * e)


def _bracket_q4(b: BoundInputs) -> float:
    L = _log_ep(b.p)
    s2 = b.sigma_lower**2
    e = 1.0 / (b.q - 2.0)
    return (b.Lbar3 / s2) * L**1.5 + math.sqrt(b.Lbar4) / b.sigma_lower * L + (b.nubar_q / s2) ** e * L


def _need_q(b: BoundInputs, q_min: float) -> None:
    if not b.q >= q_min:
        raise BadQ(f"formula needs q >= {q_min:g}, got {b.q:g}")


def thm_rhs_q3(b: BoundInputs) -> float:
    """1-dependent bound for ``q >= 3`` (``b.m`` is ignored)."""
    _need_q(b, 3.0)
    return _prefactor(b, b.n) * _bracket_q3(b)


def thm_rhs_q4(b: BoundInputs) -> float:
    """1-dependent bound for ``q >= 4`` (``b.m`` is ignored)."""
    _need_q(b, 4.0)
    return _prefactor(b, b.n) * _bracket_q4(b)


def n_eff(n: float, m: int) -> float:
    if m < 1:
        raise BadM(f"m must be at least 1, got {m}")
    return n / m


def cor_rhs(b: BoundInputs, variant: str = "q3") -> float:
    """m-dependent bound: the 1-dependent formula at ``n_eff = n / m``."""
    ne = n_eff(b.n, b.m)
    if variant == "q3":
        _need_q(b, 3.0)
        return _prefactor(b, ne) * _bracket_q3(b)
    if variant == "q4":
        _need_q(b, 4.0)
        return _prefactor(b, ne) * _bracket_q4(b)
    raise ValueError(f"unknown variant {variant!r}")


def shergin_rhs(n: float, m: int, q: float, Lbar_q: float, sigma_lower: float, C: float = 1.0) -> float:
    """``C / (s_min sqrt(n_eff)) (Lbar_q / s_low^2)^(1/(q-2))`` with ``s_min^2 = min(m+1, n) s_low^2``."""
    if not q > 2:
        raise BadQ(f"q must exceed 2, got {q:g}")
    if m < 0:
        raise BadM(f"m must be nonnegative, got {m}")
    if not sigma_lower > 0:
        raise ValueError("sigma_lower must be positive")
    ne = n / max(m, 1)
    s_min = math.sqrt(min(m + 1, n)) * sigma_lower
    return C / (s_min * math.sqrt(ne)) * (Lbar_q / sigma_lower**2) ** (1.0 / (q - 2.0))


def evaluate(b: BoundInputs, formula_id: str, Lbar_q: float | None = None) -> BoundEvaluation:
    """Dispatch on ``formula_id``; ``shergin`` uses ``Lbar_q`` (defaults to ``Lbar3`` when ``q = 3``)."""
    if formula_id == "thm31_q3":
        rhs = thm_rhs_q3(b)
    elif formula_id == "thm32_q4":
        rhs = thm_rhs_q4(b)
    elif formula_id == "cor_q3":
        rhs = cor_rhs(b, "q3")
    elif formula_id == "cor_q4":
        rhs = cor_rhs(b, "q4")
    elif formula_id == "shergin":
        if Lbar_q is None:
            if b.q != 3:
                raise ValueError("shergin needs Lbar_q unless q = 3")
            Lbar_q = b.Lbar3
        rhs = shergin_rhs(b.n, b.m, b.q, Lbar_q, b.sigma_lower, b.C)
    else:
        raise ValueError(f"unknown formula {formula_id!r}; choose from {FORMULAS}")
    return BoundEvaluation(rhs, formula_id, b)


def with_constant(b: BoundInputs, C: float) -> BoundInputs:
    return replace(b, C=C)


def fit_constant(observations: Iterable[Sequence[float]]) -> float:
    """Smallest ``C`` with ``mu_hat <= C * rhs_at_C1`` for every ``(mu_hat, rhs_at_C1)`` pair."""
    obs = [(float(mu), float(rhs)) for mu, rhs in observations]
    if not obs:
        raise EmptyObservations("no observations to fit")
    for mu, rhs in obs:
        if not (math.isfinite(rhs) and rhs > 0) or not (math.isfinite(mu) and mu >= 0):
            raise BadObservation(f"need mu_hat >= 0 and rhs > 0, got ({mu}, {rhs})")
    c = max(mu / rhs for mu, rhs in obs)
    # the quotient may round down; step up until the product bound holds in floating point
    while any(mu > c * rhs for mu, rhs in obs):
        c = math.nextafter(c, math.inf)
    return c
