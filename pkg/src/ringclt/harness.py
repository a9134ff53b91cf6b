"""Parameter sweeps: simulate, fit assumption constants, estimate distances, evaluate bounds."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import rng
from .assumptions import fit_sigma_lower, fit_sigma_min
from .bounds import BoundInputs, cor_rhs, shergin_rhs, thm_rhs_q3, thm_rhs_q4
from .coupling import map_coupling_chunks
from .distance import mu_from_sums, sup_annulus
from .errors import ConfigError, DegenerateDesign, LabError
from .intervals import IntervalSet
from .moments import averaged, combine, moment_partial, summarize
from .procgen import implied_covariance, map_series_chunks, process_from_dict

CSV_FIELDS = (
    "n",
    "m",
    "p",
    "q",
    "mu_hat",
    "mu_se",
    "kappa_hat",
    "rhs_thm31",
    "rhs_thm32",
    "rhs_cor",
    "rhs_shergin",
    "sigma_min_sq",
    "sigma_lower_sq",
    "wall_time_ms",
)
FORMULA_NAMES = ("thm31", "thm32", "cor", "shergin")
MIN_REPLICATES = 1000
FIT_LENGTH = 24


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: the process template is instantiated per grid cell at that cell's ``(m, p)``.

    ``scale_n_by_m`` reads each ``n`` as a multiple of ``m`` (constant ``n_eff``).
    Moments are estimated on the first ``moment_N`` replicates. With
    ``timing=False`` the wall time column is written as 0 so reruns are byte-identical.
    """

    process: dict
    n: tuple
    m: tuple
    p: tuple
    q: tuple
    N: int
    seed: int = 0
    rect_class: str = "one_sided"
    bound_formulas: tuple = FORMULA_NAMES
    output_path: Optional[str] = None
    kappa_delta: Optional[float] = None
    scale_n_by_m: bool = False
    timing: bool = True
    C: float = 1.0
    no_var_ev: bool = False
    moment_N: int = 20000
    max_candidates: int = 2048

    def __post_init__(self) -> None:
        for name in ("n", "m", "p", "q", "bound_formulas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if not (self.n and self.m and self.p and self.q):
            raise ConfigError("every grid axis needs at least one value")
        if self.N < MIN_REPLICATES:
            raise ConfigError(f"N must be at least {MIN_REPLICATES}, got {self.N}")
        if self.rect_class not in ("one_sided", "two_sided"):
            raise ConfigError(f"unknown rect_class {self.rect_class!r}")
        bad = set(self.bound_formulas) - set(FORMULA_NAMES)
        if bad:
            raise ConfigError(f"unknown bound formulas {sorted(bad)}; choose from {FORMULA_NAMES}")
        if min(self.m) < 0 or min(self.p) < 1:
            raise ConfigError("need m >= 0 and p >= 1")
        for n, m in itertools.product(self.n, self.m):
            if self.length(n, m) < 4 * m:
                raise ConfigError(f"cell n={self.length(n, m)}, m={m} violates n >= 4m")
        if self.moment_N < 2:
            raise ConfigError("moment_N must be at least 2")

    def length(self, n: int, m: int) -> int:
        return n * max(m, 1) if self.scale_n_by_m else n

    def cells(self) -> list[tuple[int, int, int, float]]:
        """Grid in ``(n, m, p, q)`` lexicographic order; ``n`` already scaled."""
        return [(self.length(n, m), m, p, q) for n, m, p, q in itertools.product(self.n, self.m, self.p, self.q)]

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        grid = d.pop("grid", {})
        for axis in ("n", "m", "p", "q"):
            if axis in grid:
                d[axis] = grid[axis]
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        missing = {"process", "n", "m", "p", "q", "N"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys {sorted(missing)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> "SweepConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(raw)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepRow:
    n: int
    m: int
    p: int
    q: float
    mu_hat: Optional[float] = None
    mu_se: Optional[float] = None
    kappa_hat: Optional[float] = None
    rhs_thm31: Optional[float] = None
    rhs_thm32: Optional[float] = None
    rhs_cor: Optional[float] = None
    rhs_shergin: Optional[float] = None
    sigma_min_sq: Optional[float] = None
    sigma_lower_sq: Optional[float] = None
    wall_time_ms: Optional[float] = None
    error: Optional[str] = None
    extras: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.error is not None

    @property
    def n_eff(self) -> float:
        return self.n / max(self.m, 1)

    def rhs(self, formula: str) -> Optional[float]:
        return getattr(self, f"rhs_{formula}")

    def as_dict(self) -> dict:
        return asdict(self)


def _cell_rng_seed(seed: int, cell: int) -> int:
    return rng.derive_seed(seed, cell)


def _fit_length(n: int, m: int) -> int:
    return min(n, max(FIT_LENGTH, 4 * (m + 1)))


def _bounds(row: SweepRow, cfg: SweepConfig, Lbar3: float, Lbar4: float, Lbar_q: float, nubar_q: float) -> None:
    n, m, p, q = row.n, row.m, row.p, row.q
    b = BoundInputs(
        n=n,
        p=p,
        m=max(m, 1),
        q=q,
        sigma_min=math.sqrt(row.sigma_min_sq),
        sigma_lower=math.sqrt(row.sigma_lower_sq),
        Lbar3=Lbar3,
        Lbar4=Lbar4,
        nubar_q=nubar_q,
        C=cfg.C,
        no_var_ev=cfg.no_var_ev,
    )
    wanted = set(cfg.bound_formulas)
    if "thm31" in wanted and m <= 1 and q >= 3:
        row.rhs_thm31 = thm_rhs_q3(b)
    if "thm32" in wanted and m <= 1 and q >= 4:
        row.rhs_thm32 = thm_rhs_q4(b)
    if "cor" in wanted and q >= 3:
        row.rhs_cor = cor_rhs(b, "q4" if q >= 4 else "q3")
    if "shergin" in wanted and q > 2:
        row.rhs_shergin = shergin_rhs(n, m, q, Lbar_q, b.sigma_lower, cfg.C)


def run_cell(cfg: SweepConfig, n: int, m: int, p: int, q: float, seed: int, threads: int = 1) -> SweepRow:
    row = SweepRow(n=n, m=m, p=p, q=q)
    start = time.perf_counter()
    try:
        spec = process_from_dict(dict(cfg.process, m=m, p=p))
        spec.check_length(n)
        cov = implied_covariance(spec, n)
        fit_cov = implied_covariance(spec, _fit_length(n, spec.m))
        row.sigma_min_sq = fit_sigma_min(fit_cov, spec.m)[0]
        row.sigma_lower_sq = fit_sigma_lower(fit_cov, spec.m)[0]

        qs = sorted({2.0, 3.0, 4.0, float(q)})
        moment_N = min(cfg.N, cfg.moment_N)

        def collect(lo: int, x: np.ndarray) -> tuple:
            take = max(0, min(x.shape[0], moment_N - lo))
            part = moment_partial(x[:take], qs) if take else None
            return x.sum(axis=1), part

        xs = map_series_chunks(spec, n, cfg.N, seed, collect, threads=threads)
        ys = map_coupling_chunks(cov, cfg.N, seed, collect, method="auto", threads=threads)
        sx = np.concatenate([s for s, _ in xs])
        sy = np.concatenate([s for s, _ in ys])
        px = combine([pt for _, pt in xs if pt is not None])
        py = combine([pt for _, pt in ys if pt is not None])

        est = mu_from_sums(sx, sy, cfg.rect_class, cfg.max_candidates)
        row.mu_hat, row.mu_se = est.value, est.se
        if cfg.kappa_delta is not None:
            row.kappa_hat = sup_annulus(sx / math.sqrt(n), cfg.kappa_delta)[0]

        full = IntervalSet.full(n)
        Lbar3 = averaged(summarize(px, py, 3.0), full)[0]
        Lbar4 = averaged(summarize(px, py, 4.0), full)[0]
        Lbar_q, nubar_q = averaged(summarize(px, py, float(q)), full)
        nubar_2 = averaged(summarize(px, py, 2.0), full)[1]
        row.extras = {"Lbar3": Lbar3, "Lbar4": Lbar4, "Lbar_q": Lbar_q, "nubar_q": nubar_q, "nubar_2": nubar_2}
        if row.sigma_min_sq > 0 and row.sigma_lower_sq > 0:
            _bounds(row, cfg, Lbar3, Lbar4, Lbar_q, nubar_q)
        else:
            row.extras["bounds_skipped"] = "fitted sigma is zero"
    except LabError as exc:
        row = SweepRow(n=n, m=m, p=p, q=q, error=f"{type(exc).__name__}: {exc}")
    row.wall_time_ms = (time.perf_counter() - start) * 1000.0 if cfg.timing else 0.0
    return row


def run_sweep(cfg: SweepConfig, threads: int = 1) -> list[SweepRow]:
    """Rows in grid order. Cell ``k`` draws from streams seeded by ``derive_seed(cfg.seed, k)``."""
    return [
        run_cell(cfg, n, m, p, q, _cell_rng_seed(cfg.seed, k), threads)
        for k, (n, m, p, q) in enumerate(cfg.cells())
    ]


def _axis_values(rows: Sequence[SweepRow], axis: str) -> np.ndarray:
    if axis == "n":
        return np.array([r.n for r in rows], dtype=float)
    if axis == "m":
        return np.array([r.m for r in rows], dtype=float)
    if axis == "n_eff":
        return np.array([r.n_eff for r in rows], dtype=float)
    raise ValueError(f"unknown axis {axis!r}; choose n, m or n_eff")


def fit_rate_slope(rows: Sequence[SweepRow], axis: str = "n") -> tuple[float, float]:
    """OLS slope of ``log(mu_hat)`` on ``log(axis)`` and its standard error."""
    good = [r for r in rows if not r.failed]
    x = _axis_values(good, axis)
    if len(good) < 3:
        raise DegenerateDesign(f"need at least 3 successful rows, got {len(good)}")
    if len({(r.p, r.q) for r in good}) > 1:
        raise DegenerateDesign("rows differ in p or q")
    if axis == "n" and len({r.m for r in good}) > 1:
        raise DegenerateDesign("rows differ in m")
    if np.any(x <= 0) or len(np.unique(x)) < 2:
        raise DegenerateDesign(f"axis {axis} needs at least two distinct positive values")
    mu = np.array([r.mu_hat for r in good], dtype=float)
    if np.any(~(mu > 0)):
        raise DegenerateDesign("every mu_hat must be positive")
    lx, ly = np.log(x), np.log(mu)
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    slope = float(dx @ (ly - ly.mean())) / sxx
    resid = ly - ly.mean() - slope * dx
    dof = len(good) - 2
    se = math.sqrt(float(resid @ resid) / dof / sxx) if dof > 0 else math.nan
    return slope, se


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return format(v, ".17g")


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow]) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=2) + "\n"


def emit(rows: Sequence[SweepRow], fmt: str = "csv", path: str | Path | None = None) -> None:
    """Write rows as CSV (fixed header) or a JSON array; ``path`` of ``None`` or ``-`` means stdout."""
    if fmt == "csv":
        text = rows_to_csv(rows)
    elif fmt == "json":
        text = rows_to_json(rows)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _parse(v: str, cast):
    return None if v == "" else cast(v)


def read_rows(path: str | Path) -> list[SweepRow]:
    """Parse a CSV written by :func:`emit`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ConfigError(f"{path}: unexpected CSV header")
        out = []
        for rec in reader:
            kw = {k: _parse(rec[k], float) for k in CSV_FIELDS}
            for k in ("n", "m", "p"):
                kw[k] = int(kw[k])
            out.append(SweepRow(**kw, error=None if kw["mu_hat"] is not None else "failed"))
    return out
