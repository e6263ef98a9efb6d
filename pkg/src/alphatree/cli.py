"""Command-line front end.

Primary output goes to stdout (or ``--out``), diagnostics to stderr. Exit
status is 0 on success, 1 on a usage or input error and 2 when an internal
cross-check fails.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from alphatree import exact, montecarlo, urn
from alphatree.errors import ValidationError
from alphatree.tree import parse_alpha

PMF_COLUMNS = ("n", "alpha", "a", "c", "prob")
MOMENT_COLUMNS = ("n", "alpha", "ec", "ea", "ec2", "eac", "ea2", "var_c", "cov_ac", "var_a", "corr")
SWEEP_COLUMNS = ("alpha", "tau2", "sigma2", "cov", "nu", "mu")
COUNT_COLUMNS = ("n", "alpha", "a", "c", "count")
EXTREMA_COLUMNS = ("a0", "a1", "sigma2_max", "cov_max")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x) + 0.0, ".17g")  # + 0.0 drops the sign of -0.0
    return str(x)


def csv_text(columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(_plain(obj), indent=2) + "\n"


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return _json_default(x)


def _json_default(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x) + 0.0
    if x is None or isinstance(x, str):
        return x
    raise TypeError(f"cannot serialise {type(x).__name__}")


def parse_grid(text):
    """``lo:hi:step`` into an inclusive list of alphas."""
    try:
        lo, hi, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"grid must look like lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise UsageError(f"empty grid {text!r}")
    count = int(round((hi - lo) / step)) + 1
    grid = [round(lo + k * step, 12) for k in range(count)]
    for a in grid:
        if not 0 <= a <= 1:
            raise UsageError(f"grid value {a} outside [0, 1]")
    return grid


def sweep_rows(grid):
    rows = []
    for a in grid:
        s = urn.s_closed(a)
        nu, mu = urn.nu_mu(a)
        rows.append({"alpha": a, "tau2": s[0, 0], "sigma2": s[1, 1], "cov": s[0, 1],
                     "nu": nu, "mu": mu})
    return rows


def _alpha_arg(text):
    try:
        return parse_alpha(text)
    except (ValueError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _float_alpha(args):
    return float(args.alpha)


# subcommands -----------------------------------------------------------------


def cmd_pmf(args):
    pmf = exact.joint_pmf(args.n, _float_alpha(args))
    rows = [{"n": args.n, "alpha": _float_alpha(args), "a": a, "c": c, "prob": p}
            for (a, c), p in pmf.items()]
    if args.format == "csv":
        return csv_text(PMF_COLUMNS, rows)
    return json_text({"n": args.n, "alpha": _float_alpha(args),
                      "table": [[r["a"], r["c"], r["prob"]] for r in rows]})


def cmd_moments(args):
    rows = [t.row() for t in exact.moment_trace(args.n, _float_alpha(args))]
    if args.format == "csv":
        return csv_text(MOMENT_COLUMNS, rows)
    return json_text(rows)


def cmd_limits(args):
    a = _float_alpha(args)
    summary = urn.limit_summary(a)
    if args.format == "csv":
        return csv_text(SWEEP_COLUMNS, sweep_rows([a]))
    return json_text(summary.to_json())


def cmd_sweep(args):
    rows = sweep_rows(parse_grid(args.grid))
    if args.format == "csv":
        return csv_text(SWEEP_COLUMNS, rows)
    return json_text(rows)


def cmd_extrema(args):
    ext = exact.limit_curve_extrema()
    row = {"a0": ext.a0, "a1": ext.a1, "sigma2_max": ext.sigma2_max, "cov_max": ext.cov_max}
    if args.format == "csv":
        return csv_text(EXTREMA_COLUMNS, [row])
    return json_text(row)


def cmd_simulate(args):
    cfg = montecarlo.TrialConfig(args.n, _float_alpha(args), args.trials, args.seed, args.engine)
    pairs = montecarlo.simulate_pairs(cfg, workers=args.workers)
    if args.raw:
        rows = [{"trial": i, "a": a, "c": c} for i, (a, c) in enumerate(pairs.tolist())]
        return csv_text(("trial", "a", "c"), rows)
    summary = montecarlo.summarize(cfg.n, cfg.alpha, pairs)
    if args.format == "csv":
        rows = [{"n": cfg.n, "alpha": cfg.alpha, "a": a, "c": c, "count": k}
                for a, c, k in summary.to_json()["counts"]]
        return csv_text(COUNT_COLUMNS, rows)
    out = summary.to_json()
    out.update(engine=cfg.engine, seed=cfg.seed)
    return json_text(out)


def validation_checks(trials=20000, seed=1):
    """Deterministic cross-checks between the four computational routes."""
    checks = []

    def record(name, value, tol):
        checks.append({"check": name, "value": float(value), "tol": tol,
                       "passed": bool(value <= tol)})

    grid = [round(0.05 * k, 2) for k in range(1, 20)]
    eig = max(max(urn.eigensystem(a, check=False).residuals(a)) for a in grid)
    record("eigen_residual", eig, urn.EIGEN_TOL)
    dual = max(np.abs(urn.sigma_spectral(a) - urn.sigma_closed(a)).max() for a in grid)
    record("sigma_dual_route", dual, urn.SIGMA_TOL)

    worst_mass = worst_moment = worst_marginal = worst_var = 0.0
    for a in (0.0, 0.25, 0.5, 0.75, 1.0):
        pmf = exact.joint_pmf(60, a)
        tr = exact.moment_trace(60, a)[-1]
        worst_mass = max(worst_mass, abs(pmf.total() - 1))
        for f, m in ((lambda x, y: y, tr.ec), (lambda x, y: x, tr.ea),
                     (lambda x, y: y * y, tr.ec2), (lambda x, y: x * y, tr.eac),
                     (lambda x, y: x * x, tr.ea2)):
            worst_moment = max(worst_moment, abs(pmf.expect(f) - m) / max(1.0, abs(m)))
        marg = exact.cherry_pmf(60, a)
        worst_marginal = max(worst_marginal, np.abs(pmf.cherry_marginal() - marg).max())
        worst_var = max(worst_var, exact.ford_variance_recursion_check(200, a))
    record("pmf_normalization", worst_mass, 1e-12)
    record("pmf_vs_moment_recursion", worst_moment, 1e-10)
    record("cherry_marginal", worst_marginal, 1e-12)
    record("variance_recursion", worst_var, 1e-9)

    worst_p = 1.0
    for a in (0.3, 0.7):
        tree_s = montecarlo.run_campaign(montecarlo.TrialConfig(30, a, trials, seed, "tree"))
        urn_s = montecarlo.run_campaign(montecarlo.TrialConfig(30, a, trials, seed + 1, "urn"))
        worst_p = min(worst_p, montecarlo.two_sample_chi2(tree_s, urn_s).p_value)
    checks.append({"check": "engine_equivalence_p", "value": worst_p, "tol": 1e-3,
                   "passed": bool(worst_p > 1e-3)})
    return checks


def cmd_validate(args):
    checks = validation_checks(trials=args.trials, seed=args.seed)
    text = (csv_text(("check", "value", "tol", "passed"), checks) if args.format == "csv"
            else json_text(checks))
    failed = [c["check"] for c in checks if not c["passed"]]
    if failed:
        raise ValidationError("failed checks: " + ", ".join(failed), text)
    return text


# wiring ----------------------------------------------------------------------


def build_parser():
    parser = _Parser(prog="alphatree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, fmt, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--format", choices=("csv", "json"), default=fmt)
        p.add_argument("--out", metavar="PATH", help="write primary output here")
        return p

    p = add("pmf", cmd_pmf, "csv", "exact joint pmf of (pitchforks, cherries)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=_alpha_arg, required=True)

    p = add("moments", cmd_moments, "csv", "exact moment trace for n = 3..N")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=_alpha_arg, required=True)

    p = add("limits", cmd_limits, "json", "limiting proportions and covariances")
    p.add_argument("--alpha", type=_alpha_arg, required=True)

    p = add("sweep", cmd_sweep, "csv", "limiting variance/covariance curves over an alpha grid")
    p.add_argument("--grid", default="0:1:0.05", help="lo:hi:step (inclusive)")

    add("extrema", cmd_extrema, "json", "maximisers of the limiting curves")

    p = add("simulate", cmd_simulate, "json", "Monte-Carlo campaign")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=_alpha_arg, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", choices=sorted(montecarlo.ENGINES), default="tree")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--raw", action="store_true", help="emit per-trial (a, c) pairs as CSV")

    p = add("validate", cmd_validate, "json", "run the cross-route consistency checks")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=1)
    return parser


def _check_ranges(args):
    n = getattr(args, "n", None)
    if n is not None:
        floor = 2 if args.command == "simulate" else 3
        if n < floor:
            raise UsageError(f"--n must be >= {floor}, got {n}")
    for name in ("trials", "workers"):
        if getattr(args, name, 1) < 1:
            raise UsageError(f"--{name} must be >= 1")


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _check_ranges(args)
        text = args.func(args)
    except (UsageError, ValueError, TypeError) as exc:
        print(f"alphatree: error: {exc}", file=sys.stderr)
        return 1
    except ValidationError as exc:
        if len(exc.args) > 1:
            _emit(exc.args[1], args.out)
        print(f"alphatree: validation failed: {exc.args[0]}", file=sys.stderr)
        return 2
    _emit(text, args.out)
    return 0


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
