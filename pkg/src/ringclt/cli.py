"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numeric or model error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Optional, Sequence

from . import __version__
from .assumptions import validate
from .batch import SampleBatch
from .bounds import FORMULAS, BoundEvaluation, BoundInputs, evaluate
from .distance import DiscreteLaw, DistanceEstimate, kappa_hat, mu_exact, mu_hat
from .errors import ConfigError, LabError
from .harness import SweepConfig, emit, fit_rate_slope, read_rows, run_sweep
from .intervals import IntervalSet
from .procgen import KINDS, implied_covariance, process_from_dict, sample_series

EXIT_USAGE, EXIT_MODEL, EXIT_IO = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="64-bit master seed")
    p.add_argument("--threads", type=int, default=d(1), help="worker threads")
    p.add_argument("--config", default=d(None), help="JSON config (sweep)")
    p.add_argument("--out", default=d(None), help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json", "bin"), default=d(None), help="output format")


def _process_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=KINDS, default="MA")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--innovation", choices=("gaussian", "student_t", "gamma"), default="gaussian")
    p.add_argument("--df", type=float, default=3.5)
    p.add_argument("--shape", type=float, default=1.0)
    p.add_argument("--coeffs", default="equal", help="coefficient preset: equal or decay")


def _spec(a: argparse.Namespace):
    return process_from_dict(
        {
            "kind": a.kind,
            "m": a.m,
            "p": a.p,
            "coeffs": a.coeffs,
            "innovation": {"law": a.innovation, "df": a.df, "shape": a.shape},
        }
    )


def _load_batch(path: str) -> SampleBatch:
    return SampleBatch.read_csv(path) if path.endswith(".csv") else SampleBatch.load(path)


def _write_text(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _records(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _estimate_out(est: DistanceEstimate, a: argparse.Namespace) -> None:
    if (a.format or "json") == "csv":
        _write_text(_records(DistanceEstimate.CSV_HEADER, [est.csv_row()]), a.out)
    else:
        _write_text(est.to_json() + "\n", a.out)


def cmd_gen(a: argparse.Namespace) -> int:
    spec = _spec(a)
    batch = sample_series(spec, a.n, a.N, a.seed, threads=a.threads)
    fmt = a.format or "bin"
    if fmt == "bin":
        if a.out is None:
            raise ConfigError("binary output needs --out")
        batch.save(a.out)
    elif fmt == "csv":
        if a.out is None:
            raise ConfigError("CSV batch output needs --out")
        batch.write_csv(a.out)
    else:
        raise ConfigError("gen writes bin or csv")
    return 0


def cmd_assumptions(a: argparse.Namespace) -> int:
    cov = implied_covariance(_spec(a), a.n)
    report = validate(cov)
    if (a.format or "json") == "csv":
        d = report.as_dict()
        head = ["sigma_min_sq", "sigma_lower_sq", "var_ev_holds", "skipped_intervals"]
        _write_text(_records(head, [[str(d[k]) for k in head]]), a.out)
    else:
        _write_text(report.to_json() + "\n", a.out)
    return 0


def cmd_mu(a: argparse.Namespace) -> int:
    est = mu_hat(_load_batch(a.x), _load_batch(a.y), a.rect_class)
    _estimate_out(est, a)
    return 0


def cmd_kappa(a: argparse.Namespace) -> int:
    batch = _load_batch(a.batch)
    hi = a.hi if a.hi is not None else batch.n
    cov = None
    if a.conditional:
        if a.kind is None:
            raise ConfigError("conditional kappa needs the process flags (--kind, --m) to build the covariance")
        cov = implied_covariance(
            process_from_dict({"kind": a.kind, "m": a.m, "p": batch.p, "coeffs": a.coeffs}), batch.n
        )
    est = kappa_hat(batch, IntervalSet(a.lo, hi), a.delta, a.conditional, cov, seed=a.seed)
    _estimate_out(est, a)
    return 0


def _law(a: argparse.Namespace) -> DiscreteLaw:
    if a.law == "rademacher":
        return DiscreteLaw([[-1.0], [1.0]], [0.5, 0.5])
    if a.law == "point":
        return DiscreteLaw([[0.0]], [1.0])
    try:
        atoms = json.loads(a.atoms)
        return DiscreteLaw.from_atoms([(pt, w) for pt, w in atoms])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad --atoms: {exc}") from None


def cmd_oracle(a: argparse.Namespace) -> int:
    law = _law(a)
    mean = a.mean if a.mean is not None else [0.0] * law.p
    sd = a.sd if a.sd is not None else [1.0] * law.p
    v = mu_exact(law, mean, sd)
    if (a.format or "json") == "csv":
        _write_text(_records(["mu_exact"], [[format(v, ".17g")]]), a.out)
    else:
        _write_text(json.dumps({"mu_exact": v}) + "\n", a.out)
    return 0


def cmd_bounds(a: argparse.Namespace) -> int:
    b = BoundInputs(
        n=a.n,
        p=a.p,
        m=a.m,
        q=a.q,
        sigma_min=a.sigma_min,
        sigma_lower=a.sigma_lower,
        Lbar3=a.L3,
        Lbar4=a.L4,
        nubar_q=a.nu,
        C=a.C,
        no_var_ev=a.no_var_ev,
    )
    evals = [evaluate(b, f, a.Lq) for f in (a.formula or ["thm31_q3"])]
    if (a.format or "json") == "csv":
        _write_text(_records(BoundEvaluation.CSV_HEADER, [e.csv_row() for e in evals]), a.out)
    else:
        _write_text(json.dumps([e.as_dict() for e in evals], indent=2) + "\n", a.out)
    return 0


def cmd_sweep(a: argparse.Namespace) -> int:
    if a.config is None:
        raise ConfigError("sweep needs --config")
    cfg = SweepConfig.load(a.config)
    if a.seed_given:
        cfg = SweepConfig.from_dict(dict(cfg.as_dict(), seed=a.seed))
    rows = run_sweep(cfg, threads=a.threads)
    fmt = a.format or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError("sweep writes csv or json")
    emit(rows, fmt, a.out if a.out is not None else cfg.output_path)
    return 0


def cmd_slope(a: argparse.Namespace) -> int:
    slope, se = fit_rate_slope(read_rows(a.input), a.axis)
    if (a.format or "json") == "csv":
        _write_text(_records(["axis", "slope", "stderr"], [[a.axis, format(slope, ".17g"), format(se, ".17g")]]), a.out)
    else:
        _write_text(json.dumps({"axis": a.axis, "slope": slope, "stderr": se}) + "\n", a.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ringclt", description="Berry-Esseen simulation lab for m-dependent series")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="sample a batch and serialize it")
    _process_flags(g)
    g.add_argument("--N", type=int, required=True, help="replicates")
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("assumptions", parents=[common], help="fit MIN-VAR / MIN-EV constants")
    _process_flags(s)
    s.set_defaults(func=cmd_assumptions)

    mu = sub.add_parser("mu", parents=[common], help="rectangle distance between two batches")
    mu.add_argument("--x", required=True, help="batch file (.bin or .csv)")
    mu.add_argument("--y", required=True, help="batch file (.bin or .csv)")
    mu.add_argument("--class", dest="rect_class", choices=("one_sided", "two_sided"), default="one_sided")
    mu.set_defaults(func=cmd_mu)

    k = sub.add_parser("kappa", parents=[common], help="annulus anti-concentration of a partial sum")
    k.add_argument("--batch", required=True)
    k.add_argument("--lo", type=int, default=1)
    k.add_argument("--hi", type=int, default=None)
    k.add_argument("--delta", type=float, required=True)
    k.add_argument("--conditional", action="store_true")
    k.add_argument("--kind", choices=KINDS, default=None)
    k.add_argument("--m", type=int, default=1)
    k.add_argument("--coeffs", default="equal")
    k.set_defaults(func=cmd_kappa)

    o = sub.add_parser("oracle", parents=[common], help="exact distance of a small discrete law to a Gaussian")
    o.add_argument("--law", choices=("rademacher", "point", "atoms"), default="rademacher")
    o.add_argument("--atoms", default=None, help='JSON list of [point, prob], e.g. "[[[0,1],0.5],[[1,0],0.5]]"')
    o.add_argument("--mean", type=float, nargs="+", default=None)
    o.add_argument("--sd", type=float, nargs="+", default=None)
    o.set_defaults(func=cmd_oracle)

    b = sub.add_parser("bounds", parents=[common], help="evaluate bound right-hand sides")
    b.add_argument("--formula", choices=FORMULAS, action="append")
    b.add_argument("--n", type=float, required=True)
    b.add_argument("--p", type=int, required=True)
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--q", type=float, default=3.0)
    b.add_argument("--sigma-min", type=float, required=True)
    b.add_argument("--sigma-lower", type=float, required=True)
    b.add_argument("--L3", type=float, default=0.0)
    b.add_argument("--L4", type=float, default=0.0)
    b.add_argument("--Lq", type=float, default=None)
    b.add_argument("--nu", type=float, default=0.0)
    b.add_argument("--C", type=float, default=1.0)
    b.add_argument("--no-var-ev", action="store_true")
    b.set_defaults(func=cmd_bounds)

    w = sub.add_parser("sweep", parents=[common], help="run a parameter sweep from --config")
    w.set_defaults(func=cmd_sweep)

    sl = sub.add_parser("slope", parents=[common], help="fit a log-log rate slope from sweep CSV")
    sl.add_argument("--input", required=True)
    sl.add_argument("--axis", choices=("n", "m", "n_eff"), default="n")
    sl.set_defaults(func=cmd_slope)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    a = parser.parse_args(argv)
    a.seed_given = any(t == "--seed" or t.startswith("--seed=") for t in argv)
    if a.command == "oracle" and a.law == "atoms" and a.atoms is None:
        parser.error("--law atoms needs --atoms")
    try:
        return a.func(a)
    except LabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
