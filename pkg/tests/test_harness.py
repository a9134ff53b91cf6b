from __future__ import annotations

import json
import math

import numpy as np
import pytest

from ringclt.errors import ConfigError, DegenerateDesign
from ringclt.harness import (
    CSV_FIELDS,
    SweepConfig,
    SweepRow,
    emit,
    fit_rate_slope,
    read_rows,
    rows_to_csv,
    run_sweep,
)

# independent OLS of log(n^-1/2 log n) on log n over n = 64, 128, ..., 4096
LOG_SERIES_SLOPE = -0.3347828039983304


def small_cfg(**kw) -> SweepConfig:
    base = dict(process={"kind": "MA"}, n=(64,), m=(1,), p=(2,), q=(3.0,), N=10_000, timing=False)
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def smoke_rows():
    return run_sweep(small_cfg(kappa_delta=0.1))


def test_smoke_row(smoke_rows):
    (r,) = smoke_rows
    assert not r.failed
    assert (r.n, r.m, r.p, r.q) == (64, 1, 2, 3.0)
    assert 0 <= r.mu_hat <= 1 and r.mu_se > 0
    # equal-law Gaussian coupling: only sampling noise remains
    assert r.mu_hat < 5 * r.mu_se + 0.02
    assert r.sigma_min_sq == pytest.approx(0.75, abs=1e-9)
    assert r.rhs_thm31 > 0 and r.rhs_cor == r.rhs_thm31
    assert r.rhs_thm32 is None  # q < 4
    assert r.rhs_shergin > 0
    assert 0 < r.kappa_hat < 1
    assert r.wall_time_ms == 0
    assert r.extras["Lbar3"] > 0


def test_determinism_across_threads(smoke_rows):
    again = run_sweep(small_cfg(kappa_delta=0.1), threads=4)
    assert rows_to_csv(again) == rows_to_csv(smoke_rows)


def test_seed_changes_output(smoke_rows):
    other = run_sweep(small_cfg(kappa_delta=0.1, seed=1))
    assert rows_to_csv(other) != rows_to_csv(smoke_rows)


def test_failed_cell_is_recorded():
    cfg = small_cfg(process={"kind": "Duplication"}, n=(63, 64), m=(1,), p=(1,), N=2000)
    bad, good = run_sweep(cfg)
    assert bad.failed and bad.error.startswith("OddLengthUnsupported")
    assert bad.mu_hat is None and not good.failed
    lines = rows_to_csv([bad]).splitlines()
    assert lines[1].startswith("63,1,1,3,,,")


def test_grid_order_and_scaling():
    cfg = small_cfg(n=(8, 16), m=(1, 2), p=(1,), q=(3.0, 4.0), scale_n_by_m=True)
    assert cfg.cells() == [
        (8, 1, 1, 3.0), (8, 1, 1, 4.0), (16, 2, 1, 3.0), (16, 2, 1, 4.0),
        (16, 1, 1, 3.0), (16, 1, 1, 4.0), (32, 2, 1, 3.0), (32, 2, 1, 4.0),
    ]


@pytest.mark.parametrize(
    "kw",
    [
        dict(N=999),
        dict(rect_class="boxes"),
        dict(bound_formulas=("thm31", "other")),
        dict(n=(7,), m=(2,)),
        dict(p=()),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        small_cfg(**kw)


def test_config_from_dict(tmp_path):
    d = {"process": {"kind": "MA"}, "grid": {"n": [64], "m": [1], "p": [2], "q": [3]}, "N": 2000}
    cfg = SweepConfig.from_dict(d)
    assert cfg.n == (64,) and cfg.q == (3,)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(d))
    assert SweepConfig.load(path) == cfg
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({**d, "bogus": 1})
    with pytest.raises(ConfigError):
        SweepConfig.from_dict({"process": {}, "N": 2000})
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        SweepConfig.load(path)


def rows_for(ns, mus, m=1):
    return [SweepRow(n=n, m=m, p=1, q=3.0, mu_hat=mu) for n, mu in zip(ns, mus)]


def test_slope_exact_power():
    ns = [2**k for k in range(6, 13)]
    slope, se = fit_rate_slope(rows_for(ns, [n**-0.5 for n in ns]))
    assert slope == pytest.approx(-0.5, abs=1e-12)
    assert se < 1e-12


def test_slope_log_factor():
    ns = [2**k for k in range(6, 13)]
    slope, _ = fit_rate_slope(rows_for(ns, [n**-0.5 * math.log(n) for n in ns]))
    assert slope == pytest.approx(LOG_SERIES_SLOPE, abs=1e-12)
    assert -0.40 < slope < -0.30


def test_slope_constant_and_degenerate():
    ns = [64, 128, 256]
    assert fit_rate_slope(rows_for(ns, [0.1] * 3))[0] == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DegenerateDesign):
        fit_rate_slope(rows_for([64, 64, 64], [0.1, 0.2, 0.3]))
    with pytest.raises(DegenerateDesign):
        fit_rate_slope(rows_for([64, 128], [0.1, 0.2]))
    with pytest.raises(DegenerateDesign):
        fit_rate_slope(rows_for(ns, [0.1, 0.0, 0.3]))


def test_slope_n_eff_axis():
    rows = [SweepRow(n=64 * m, m=m, p=1, q=3.0, mu_hat=0.1 / math.sqrt(m)) for m in (1, 2, 4, 8)]
    assert fit_rate_slope(rows, "m")[0] == pytest.approx(-0.5, abs=1e-12)
    with pytest.raises(DegenerateDesign):
        fit_rate_slope(rows, "n_eff")  # n_eff is constant
    with pytest.raises(ValueError):
        fit_rate_slope(rows, "p")


def test_emit_header_only(capsys):
    emit([], "csv")
    assert capsys.readouterr().out == ",".join(CSV_FIELDS) + "\n"


def test_emit_roundtrip(tmp_path, smoke_rows):
    r = SweepRow(n=8, m=1, p=1, q=3.5, mu_hat=0.1 + 0.2, mu_se=1 / 3, sigma_min_sq=2.0, wall_time_ms=0.0)
    path = tmp_path / "rows.csv"
    emit([r, smoke_rows[0]], "csv", path)
    text = path.read_text().splitlines()
    assert len(text) == 3 and text[0] == ",".join(CSV_FIELDS)
    back = read_rows(path)
    assert back[0].mu_hat == 0.1 + 0.2 and back[0].mu_se == 1 / 3 and back[0].q == 3.5
    assert back[0].rhs_thm31 is None
    assert back[1].rhs_shergin == smoke_rows[0].rhs_shergin


def test_emit_json(tmp_path):
    r = SweepRow(n=8, m=1, p=1, q=3.0, mu_hat=0.25)
    path = tmp_path / "rows.json"
    emit([r], "json", path)
    data = json.loads(path.read_text())
    assert data[0]["mu_hat"] == 0.25 and data[0]["error"] is None
    with pytest.raises(ValueError):
        emit([r], "xml", path)


def test_read_rows_rejects_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ConfigError):
        read_rows(path)
