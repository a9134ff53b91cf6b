from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from ringclt.batch import SampleBatch
from ringclt.bounds import BoundInputs, thm_rhs_q3
from ringclt.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_json(capsys):
    code, out, _ = run(capsys, "bounds", "--n", "100", "--p", "4", "--sigma-min", "1", "--sigma-lower", "1",
                       "--L3", "1", "--nu", "1")
    assert code == 0
    (rec,) = json.loads(out)
    ref = thm_rhs_q3(BoundInputs(100, 4, 1, 3.0, 1.0, 1.0, 1.0, 0.0, 1.0))
    assert rec["formula_id"] == "thm31_q3" and rec["rhs"] == ref


def test_bounds_csv_multiple(capsys):
    code, out, _ = run(capsys, "bounds", "--format", "csv", "--formula", "cor_q3", "--formula", "shergin",
                       "--n", "1024", "--p", "1", "--m", "4", "--sigma-min", "1", "--sigma-lower", "1",
                       "--L3", "1", "--nu", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "formula_id,n,p,m,q,rhs,C"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["cor_q3", "shergin"]


def test_bounds_model_error(capsys):
    code, _, err = run(capsys, "bounds", "--formula", "thm32_q4", "--n", "100", "--p", "4",
                       "--sigma-min", "1", "--sigma-lower", "1")
    assert code == 2 and "BadQ" in err


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["bounds", "--p", "4"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["nosuch"])
    assert e.value.code == 1
    with pytest.raises(SystemExit) as e:
        main(["oracle", "--law", "atoms"])
    assert e.value.code == 1


def test_io_error(capsys):
    code, _, err = run(capsys, "mu", "--x", "/nonexistent/x.bin", "--y", "/nonexistent/y.bin")
    assert code == 3


def test_gen_then_mu_and_kappa(tmp_path, capsys):
    xb, yb = str(tmp_path / "x.bin"), str(tmp_path / "y.bin")
    assert run(capsys, "gen", "--n", "16", "--p", "2", "--N", "3000", "--seed", "1", "--out", xb)[0] == 0
    assert run(capsys, "gen", "--n", "16", "--p", "2", "--N", "3000", "--seed", "2", "--out", yb)[0] == 0
    bx = SampleBatch.load(xb)
    assert bx.data.shape == (3000, 16, 2)
    code, out, _ = run(capsys, "mu", "--x", xb, "--y", yb)
    est = json.loads(out)
    assert code == 0 and 0 <= est["value"] < 0.1 and est["class"] == "one_sided"
    code, out, _ = run(capsys, "mu", "--x", xb, "--y", xb, "--format", "csv")
    assert code == 0 and out.splitlines()[1].split(",")[0] == "0"
    code, out, _ = run(capsys, "kappa", "--batch", xb, "--delta", "0.2")
    assert code == 0 and 0 < json.loads(out)["value"] < 1
    code, _, err = run(capsys, "kappa", "--batch", xb, "--delta", "0.2", "--conditional")
    assert code == 2 and "ConfigError" in err


def test_gen_csv_roundtrip(tmp_path, capsys):
    path = str(tmp_path / "x.csv")
    assert run(capsys, "gen", "--n", "8", "--p", "1", "--N", "10", "--format", "csv", "--out", path)[0] == 0
    assert SampleBatch.read_csv(path).data.shape == (10, 8, 1)


def test_gen_needs_out(capsys):
    code, _, err = run(capsys, "gen", "--n", "8", "--N", "10")
    assert code == 2


def test_assumptions(capsys):
    code, out, _ = run(capsys, "assumptions", "--n", "8", "--m", "1")
    rep = json.loads(out)
    assert code == 0 and rep["sigma_min_sq"] == pytest.approx(0.75, abs=1e-9)


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--law", "rademacher")
    assert code == 0 and json.loads(out)["mu_exact"] == pytest.approx(0.3413447460685429, abs=1e-12)
    code, out, _ = run(capsys, "oracle", "--law", "atoms", "--atoms", "[[[0,0],0.5],[[1,1],0.5]]")
    assert code == 0 and 0 < json.loads(out)["mu_exact"] <= 1
    code, _, err = run(capsys, "oracle", "--law", "atoms", "--atoms", "nope")
    assert code == 2


def test_sweep_and_slope(tmp_path, capsys):
    cfg = {"process": {"kind": "MA"}, "grid": {"n": [16, 32, 64], "m": [1], "p": [1], "q": [3]},
           "N": 2000, "timing": False}
    cpath = tmp_path / "c.json"
    cpath.write_text(json.dumps(cfg))
    out1, out2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert run(capsys, "sweep", "--config", str(cpath), "--out", out1)[0] == 0
    assert run(capsys, "--threads", "2", "sweep", "--config", str(cpath), "--out", out2)[0] == 0
    assert open(out1).read() == open(out2).read()
    assert len(open(out1).read().splitlines()) == 4
    out3 = str(tmp_path / "c.csv")
    assert run(capsys, "sweep", "--config", str(cpath), "--seed", "5", "--out", out3)[0] == 0
    assert open(out3).read() != open(out1).read()
    code, out, _ = run(capsys, "slope", "--input", out1)
    assert code == 0 and np.isfinite(json.loads(out)["slope"])
    code, _, err = run(capsys, "sweep")
    assert code == 2


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "ringclt.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "ringclt" in res.stdout
